#include "ixbandit/sim_env.hpp"

#include <json.hpp>

#include <algorithm>
#include <stdexcept>

#include "ixbandit/rng.hpp"

namespace ixbandit {
namespace {

// Sub-stream tags so each measured component has its own noise draw that does
// not shift when the materialised set changes shape.
constexpr std::uint64_t kAccessNoiseTag = 0x100;
constexpr std::uint64_t kMisestimateTag = 0x200;
constexpr std::uint64_t kBaseMaintTag = 0x300;
constexpr std::uint64_t kPoisonTag = 0x400;
constexpr std::uint64_t kOverheadTag = 0x500;
constexpr std::uint64_t kCreationTag = 0xC4E;

double noise_for(std::uint64_t key, std::uint64_t tag, double cv) {
  Rng rng(mix64(key, tag));
  return rng.lognormal_unit_mean(cv);
}

double entry_width_bytes(const Schema& schema, const IndexCandidate& arm) {
  return actual_index_size(schema, arm.table, arm.key_columns, arm.include_columns) /
         static_cast<double>(schema.tables[arm.table].row_count);
}

}  // namespace

void validate(const CostModelParams& params) {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + " must be positive");
  };
  positive(params.scan_bytes_per_sec, "scan_bytes_per_sec");
  positive(params.seek_base_sec, "seek_base_sec");
  positive(params.lookup_penalty_per_row_sec, "lookup_penalty_per_row_sec");
  positive(params.build_bytes_per_sec, "build_bytes_per_sec");
  positive(params.maint_row_update_sec, "maint_row_update_sec");
  positive(params.maint_index_update_sec, "maint_index_update_sec");
  if (params.noise_cv < 0.0) throw std::invalid_argument("noise_cv must be nonnegative");
  if (params.misestimate_prob < 0.0 || params.misestimate_prob > 1.0)
    throw std::invalid_argument("misestimate_prob outside [0, 1]");
}

double materialised_bytes(const DbState& db) {
  double total = 0.0;
  for (const auto& [id, arm] : db.materialised) total += arm.est_size_bytes;
  return total;
}

double ExecutionTrace::total_execution_sec() const {
  double total = 0.0;
  for (const auto& q : queries) total += q.total_time_sec;
  return total;
}

std::set<std::uint64_t> ExecutionTrace::used_arms() const {
  std::set<std::uint64_t> used;
  for (const auto& q : queries)
    for (const auto& a : q.accesses)
      if (!a.full_scan) used.insert(a.index_used);
  return used;
}

std::map<std::uint64_t, double> materialise(DbState& db,
                                            const std::vector<IndexCandidate>& config) {
  double wanted_bytes = 0.0;
  std::map<std::uint64_t, const IndexCandidate*> wanted;
  for (const auto& arm : config) {
    if (arm.table >= db.schema.tables.size())
      throw std::invalid_argument("configuration references unknown table");
    if (!wanted.emplace(arm.arm_id, &arm).second)
      throw std::invalid_argument("configuration repeats an index");
    wanted_bytes += actual_index_size(db.schema, arm.table, arm.key_columns, arm.include_columns);
  }
  if (wanted_bytes > db.storage_ceiling_bytes)
    throw std::invalid_argument("configuration exceeds the storage ceiling");

  for (auto it = db.materialised.begin(); it != db.materialised.end();)
    it = wanted.count(it->first) ? std::next(it) : db.materialised.erase(it);

  std::map<std::uint64_t, double> creation_times;
  for (const auto& [id, arm_ptr] : wanted) {
    if (db.materialised.count(id)) continue;
    IndexCandidate built = *arm_ptr;
    built.est_size_bytes =
        actual_index_size(db.schema, built.table, built.key_columns, built.include_columns);
    built.materialised = true;
    const double base = built.est_size_bytes / db.cost.build_bytes_per_sec;
    creation_times[id] = base * noise_for(mix64(db.rng_seed, id), kCreationTag, db.cost.noise_cv);
    db.materialised.emplace(id, std::move(built));
  }
  return creation_times;
}

std::vector<PathChoice> candidate_paths(const DbState& db, const QueryInstance& q,
                                        std::uint32_t table) {
  if (table >= db.schema.tables.size()) throw std::invalid_argument("unknown table");
  const Table& tab = db.schema.tables[table];

  std::vector<PathChoice> paths;
  PathChoice scan;
  scan.full_scan = true;
  scan.est_cost_sec = full_scan_cost(db, table);
  paths.push_back(scan);

  std::map<std::uint32_t, double> predicate_sel;
  std::set<std::uint32_t> referenced;
  for (const auto& p : q.predicates)
    if (column_table(db.schema, p.column) == table) {
      predicate_sel[p.column] = p.selectivity;
      referenced.insert(p.column);
    }
  for (std::uint32_t c : q.payload)
    if (column_table(db.schema, c) == table) referenced.insert(c);

  for (const auto& [id, arm] : db.materialised) {
    if (arm.table != table) continue;
    double sel = 1.0;
    std::size_t matched = 0;
    for (std::uint32_t key : arm.key_columns) {
      auto it = predicate_sel.find(key);
      if (it == predicate_sel.end()) break;
      sel *= it->second;
      ++matched;
    }
    if (matched == 0) continue;  // no seekable prefix

    std::set<std::uint32_t> present(arm.key_columns.begin(), arm.key_columns.end());
    present.insert(arm.include_columns.begin(), arm.include_columns.end());
    const bool covering = std::all_of(referenced.begin(), referenced.end(),
                                      [&](std::uint32_t c) { return present.count(c) > 0; });

    PathChoice seek;
    seek.full_scan = false;
    seek.index_used = id;
    seek.covering = covering;
    seek.matched_selectivity = sel;
    const double matched_rows = sel * static_cast<double>(tab.row_count);
    const double per_row = covering ? entry_width_bytes(db.schema, arm) / db.cost.scan_bytes_per_sec
                                    : db.cost.lookup_penalty_per_row_sec;
    seek.est_cost_sec = db.cost.seek_base_sec + matched_rows * per_row;
    paths.push_back(seek);
  }
  return paths;
}

PathChoice choose_access_path(const DbState& db, const QueryInstance& q, std::uint32_t table,
                              double u_misestimate, double u_poison) {
  const auto paths = candidate_paths(db, q, table);

  if (db.poison && u_poison < db.poison->prob) {
    for (const auto& p : paths)
      if (!p.full_scan && p.index_used == db.poison->arm_id) return p;
  }

  std::size_t best = 0, second = 0;
  for (std::size_t i = 1; i < paths.size(); ++i)
    if (paths[i].est_cost_sec < paths[best].est_cost_sec) best = i;
  if (paths.size() > 1) {
    second = best == 0 ? 1 : 0;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      if (i == best) continue;
      if (paths[i].est_cost_sec < paths[second].est_cost_sec) second = i;
    }
    if (u_misestimate < db.cost.misestimate_prob) return paths[second];
  }
  return paths[best];
}

ExecutionTrace execute(const DbState& db, const std::vector<QueryInstance>& workload) {
  ExecutionTrace trace;
  trace.queries.reserve(workload.size());

  for (std::size_t qi = 0; qi < workload.size(); ++qi) {
    const QueryInstance& q = workload[qi];
    const std::uint64_t qkey = mix64(db.rng_seed, static_cast<std::uint64_t>(qi));
    const auto tables = referenced_tables(q, db.schema);  // throws on unknown columns
    if (tables.empty()) throw std::invalid_argument("query references no table");

    QueryTrace rec;
    rec.template_id = q.template_id;
    rec.kind = q.kind;

    if (q.kind == QueryKind::select) {
      for (std::uint32_t table : tables) {
        const double u_mis = Rng(mix64(qkey, kMisestimateTag + table)).uniform01();
        const double u_poi = Rng(mix64(qkey, kPoisonTag + table)).uniform01();
        const PathChoice choice = choose_access_path(db, q, table, u_mis, u_poi);

        TableAccess access;
        access.table = table;
        access.full_scan = choice.full_scan;
        access.index_used = choice.index_used;
        access.covering = choice.covering;
        access.matched_selectivity = choice.matched_selectivity;
        access.time_sec =
            choice.est_cost_sec * noise_for(qkey, kAccessNoiseTag + table, db.cost.noise_cv);
        rec.total_time_sec += access.time_sec;
        rec.accesses.push_back(access);
      }
      if (tables.size() > 1) {
        rec.plan_overhead_sec = static_cast<double>(tables.size() - 1) * db.cost.seek_base_sec *
                                noise_for(qkey, kOverheadTag, db.cost.noise_cv);
        rec.total_time_sec += rec.plan_overhead_sec;
      }
    } else {
      if (tables.size() != 1) throw std::invalid_argument("write touches multiple tables");
      const std::uint32_t table = tables[0];
      const double rows = static_cast<double>(std::max<std::uint64_t>(1, q.rows_touched));

      rec.base_time_sec =
          rows * db.cost.maint_row_update_sec * noise_for(qkey, kBaseMaintTag, db.cost.noise_cv);
      rec.total_time_sec += rec.base_time_sec;

      rec.maintenance_itemised = q.rows_touched >= db.cost.itemise_rows_threshold;
      for (const auto& [id, arm] : db.materialised) {
        if (arm.table != table) continue;
        const double t = rows * db.cost.maint_index_update_sec *
                         noise_for(mix64(qkey, id), kBaseMaintTag, db.cost.noise_cv);
        rec.touched_indices.insert(id);
        rec.maintenance_total_sec += t;
        rec.total_time_sec += t;
        if (rec.maintenance_itemised) rec.maintenance_sec[id] = t;
      }
    }
    trace.queries.push_back(std::move(rec));
  }
  return trace;
}

ScanHistory::ScanHistory(std::int64_t window) : window_(window) {
  if (window < 0) throw std::invalid_argument("scan-history window below 0");
}

void ScanHistory::ingest(const ExecutionTrace& trace, std::int64_t round) {
  for (const auto& q : trace.queries) {
    if (q.kind != QueryKind::select) continue;
    for (const auto& a : q.accesses) {
      const Key key{a.table, q.template_id};
      if (a.full_scan) {
        scans_[key][round] = a.time_sec;
      } else {
        double& slot = index_times_[key][round];
        slot = std::max(slot, a.time_sec);
      }
    }
  }
  // Bound memory: anything older than the window can never be looked up.
  const std::int64_t horizon = round - window_;
  for (auto* store : {&scans_, &index_times_})
    for (auto& [key, by_round] : *store)
      by_round.erase(by_round.begin(), by_round.lower_bound(horizon));
}

std::optional<double> ScanHistory::lookup_latest(
    const std::map<Key, std::map<std::int64_t, double>>& store, Key key,
    std::int64_t round) const {
  auto it = store.find(key);
  if (it == store.end()) return std::nullopt;
  auto latest = it->second.upper_bound(round);
  if (latest == it->second.begin()) return std::nullopt;
  --latest;
  if (latest->first < round - window_) return std::nullopt;
  return latest->second;
}

std::optional<double> ScanHistory::observed_scan(std::uint32_t table, std::uint64_t template_id,
                                                 std::int64_t round) const {
  return lookup_latest(scans_, {table, template_id}, round);
}

std::optional<double> ScanHistory::max_index_time(std::uint32_t table, std::uint64_t template_id,
                                                  std::int64_t round) const {
  auto it = index_times_.find({table, template_id});
  if (it == index_times_.end()) return std::nullopt;
  std::optional<double> best;
  for (auto entry = it->second.lower_bound(round - window_);
       entry != it->second.end() && entry->first <= round; ++entry)
    best = best ? std::max(*best, entry->second) : entry->second;
  return best;
}

double estimate_full_scan(const ScanHistory& history, const DbState& db, std::uint32_t table,
                          std::uint64_t template_id, std::int64_t round) {
  if (auto observed = history.observed_scan(table, template_id, round)) return *observed;
  if (auto proxy = history.max_index_time(table, template_id, round)) return *proxy;
  return full_scan_cost(db, table);
}

double estimate_full_scan(const ScanHistory& history, const DbState& db, std::uint32_t table,
                          const QueryInstance& q, std::int64_t round) {
  return estimate_full_scan(history, db, table, q.template_id, round);
}

double full_scan_cost(const DbState& db, std::uint32_t table) {
  if (table >= db.schema.tables.size()) throw std::invalid_argument("unknown table");
  const Table& tab = db.schema.tables[table];
  return static_cast<double>(tab.row_count) * static_cast<double>(tab.row_width_bytes) /
         db.cost.scan_bytes_per_sec;
}

std::string trace_to_json(const ExecutionTrace& trace) {
  nlohmann::json doc;
  doc["queries"] = nlohmann::json::array();
  for (const auto& q : trace.queries) {
    nlohmann::json jq;
    jq["template_id"] = q.template_id;
    jq["kind"] = static_cast<int>(q.kind);
    jq["total_time_sec"] = q.total_time_sec;
    jq["plan_overhead_sec"] = q.plan_overhead_sec;
    jq["base_time_sec"] = q.base_time_sec;
    jq["maintenance_total_sec"] = q.maintenance_total_sec;
    jq["maintenance_itemised"] = q.maintenance_itemised;
    jq["accesses"] = nlohmann::json::array();
    for (const auto& a : q.accesses) {
      jq["accesses"].push_back({{"table", a.table},
                                {"full_scan", a.full_scan},
                                {"index_used", a.index_used},
                                {"covering", a.covering},
                                {"matched_selectivity", a.matched_selectivity},
                                {"time_sec", a.time_sec}});
    }
    nlohmann::json maint = nlohmann::json::object();
    for (const auto& [id, t] : q.maintenance_sec) maint[std::to_string(id)] = t;
    jq["maintenance_sec"] = maint;
    nlohmann::json touched = nlohmann::json::array();
    for (std::uint64_t id : q.touched_indices) touched.push_back(id);
    jq["touched_indices"] = touched;
    doc["queries"].push_back(std::move(jq));
  }
  nlohmann::json creation = nlohmann::json::object();
  for (const auto& [id, t] : trace.creation_times_sec) creation[std::to_string(id)] = t;
  doc["creation_times_sec"] = creation;
  return doc.dump(2);
}

}  // namespace ixbandit
