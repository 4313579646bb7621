#include "ixbandit/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "ixbandit/oracle.hpp"
#include "ixbandit/reward.hpp"
#include "ixbandit/rng.hpp"

namespace ixbandit {
namespace {

constexpr std::uint64_t kEnvTag = 0xDB5EED;

// Whether the arm can answer the template without touching the heap: a
// single-table select on the arm's table whose referenced columns all live
// in the arm's keys or includes.
bool arm_covers(const IndexCandidate& arm, const QueryTemplate& tpl, const Schema& schema) {
  if (tpl.kind != QueryKind::select) return false;
  std::set<std::uint32_t> refs;
  for (const auto& p : tpl.predicates) refs.insert(p.column);
  for (std::uint32_t c : tpl.payload) refs.insert(c);
  if (refs.empty()) return false;
  std::set<std::uint32_t> have(arm.key_columns.begin(), arm.key_columns.end());
  have.insert(arm.include_columns.begin(), arm.include_columns.end());
  for (std::uint32_t c : refs) {
    if (column_table(schema, c) != arm.table) return false;
    if (!have.count(c)) return false;
  }
  return true;
}

// Largest number of candidates that could fit the budget at once; feeds the
// exploration schedule's end-of-round pull count.
std::int64_t max_feasible_count(const std::vector<IndexCandidate>& candidates, double budget) {
  std::vector<double> sizes;
  sizes.reserve(candidates.size());
  for (const auto& c : candidates) sizes.push_back(c.est_size_bytes);
  std::sort(sizes.begin(), sizes.end());
  std::int64_t k = 0;
  double used = 0.0;
  for (double s : sizes) {
    if (used + s > budget) break;
    used += s;
    ++k;
  }
  return k;
}

}  // namespace

void validate(const TunerConfig& config) {
  validate(config.hyper);
  if (!(config.memory_budget_bytes >= 0.0))
    throw std::invalid_argument("tuner: memory budget must be >= 0");
  if (config.max_key_width < 1) throw std::invalid_argument("tuner: max key width below one");
  if (config.per_template_cap < 1)
    throw std::invalid_argument("tuner: per-template cap below one");
  if (config.qoi_window < 1) throw std::invalid_argument("tuner: qoi window below one");
  if (config.scan_window < 1) throw std::invalid_argument("tuner: scan window below one");
  if (config.usage_window < 1) throw std::invalid_argument("tuner: usage window below one");
  if (!(config.shift_threshold >= 0.0))
    throw std::invalid_argument("tuner: shift threshold must be >= 0");
}

TunerState make_tuner(const Schema& schema, TunerConfig config) {
  config.hyper.n_f = config.structured ? 2 : 1;
  validate(config);
  validate(schema);
  const auto layout = make_layout(schema, config.usage_window);
  auto bandit = init(config.hyper, layout.dim());
  const auto scan_window = config.scan_window;
  const auto usage_window = config.usage_window;
  return TunerState{std::move(config),
                    layout,
                    std::move(bandit),
                    QueryStore{},
                    ScanHistory(scan_window),
                    PickHistory(usage_window),
                    {},
                    0,
                    0};
}

RoundRecord run_round(TunerState& st, DbState& db, const std::vector<QueryInstance>& incoming) {
  const auto wall_start = std::chrono::steady_clock::now();
  const std::int64_t round = ++st.round;
  RoundRecord rec;
  rec.round = round;
  const bool cold_store = st.store.size() == 0;

  // Queries of interest come from everything ingested before this round; the
  // incoming batch plays no part in choosing the configuration.
  const auto qoi = st.store.select_qoi(round, st.config.qoi_window);
  rec.n_qoi = static_cast<int>(qoi.size());

  // Candidates: fresh proposals for the current interests, plus whatever is
  // already built (so the oracle can keep or drop stale indexes on merit).
  const ArmGenOptions gen_opts{st.config.max_key_width, st.config.per_template_cap};
  std::set<std::uint64_t> candidate_ids;
  for (auto& cand : generate_arms(qoi, db.schema, gen_opts)) {
    candidate_ids.insert(cand.arm_id);
    auto it = st.registry.find(cand.arm_id);
    if (it == st.registry.end())
      st.registry.emplace(cand.arm_id, std::move(cand));
    else
      it->second.query_origins = std::move(cand.query_origins);
  }
  for (const auto& [id, idx] : db.materialised) {
    candidate_ids.insert(id);
    // Indexes built outside this tuner still become first-class candidates.
    st.registry.emplace(id, idx);
  }

  std::vector<IndexCandidate> candidates;
  candidates.reserve(candidate_ids.size());
  for (std::uint64_t id : candidate_ids) {
    auto& entry = st.registry.at(id);
    // Coverage is judged against the current interests, not the sponsors the
    // arm happened to be generated from.
    entry.covering_for.clear();
    for (const auto& tpl : qoi)
      if (arm_covers(entry, tpl, db.schema)) entry.covering_for[tpl.template_id] = true;
    entry.materialised = db.materialised.count(id) > 0;
    candidates.push_back(entry);
  }
  rec.n_candidates = static_cast<int>(candidates.size());

  // Optimistic scoring and budgeted selection.
  std::set<std::uint64_t> chosen_ids;
  std::map<std::uint64_t, Eigen::VectorXd> contexts;
  if (!candidates.empty() && st.config.memory_budget_bytes > 0.0) {
    std::vector<Eigen::VectorXd> xs;
    xs.reserve(candidates.size());
    for (const auto& c : candidates)
      xs.push_back(build_context(c, qoi, db.schema, st.picks, round, st.layout));
    const std::int64_t k =
        std::max<std::int64_t>(1, max_feasible_count(candidates, st.config.memory_budget_bytes));
    const double alpha = alpha_schedule(st.bandit, st.config.hyper, k);
    const auto scores = ucb_scores(st.bandit, xs, alpha);

    std::vector<oracle::ScoredArm> scored;
    scored.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const auto& c = candidates[i];
      contexts.emplace(c.arm_id, xs[i]);
      oracle::ScoredArm a;
      a.arm_id = c.arm_id;
      a.score = scores[i];
      a.memory_cost = c.est_size_bytes;
      a.key_columns = c.key_columns;
      a.include_columns = c.include_columns;
      a.query_origins = c.query_origins;
      a.is_covering = c.covering_for;
      scored.push_back(std::move(a));
    }
    chosen_ids = oracle::greedy_select(scored, st.config.memory_budget_bytes);
  }

  // Reconfigure. Planning estimates are corrected to exact sizes once built;
  // the estimate slack means the correction only ever shrinks the footprint.
  std::vector<IndexCandidate> config;
  config.reserve(chosen_ids.size());
  double planned_bytes = 0.0;
  for (std::uint64_t id : chosen_ids) {
    config.push_back(st.registry.at(id));
    planned_bytes += st.registry.at(id).est_size_bytes;
  }
  if (planned_bytes > st.config.memory_budget_bytes * (1.0 + 1e-12))
    throw std::logic_error("tuner: selected configuration exceeds the memory budget");
  const auto creations = materialise(db, config);
  for (const auto& [id, idx] : db.materialised) {
    auto& entry = st.registry.at(id);
    entry.est_size_bytes = idx.est_size_bytes;  // exact once built
    entry.materialised = true;
  }
  for (auto& [id, entry] : st.registry)
    if (!db.materialised.count(id)) entry.materialised = false;
  rec.config = chosen_ids;
  rec.memory_bytes = materialised_bytes(db);
  if (rec.memory_bytes > st.config.memory_budget_bytes * (1.0 + 1e-12))
    throw std::logic_error("tuner: materialised bytes exceed the memory budget");
  for (const auto& [id, t] : creations) rec.c_cre_s += t;

  rec.c_rec_s = 1e-8 * static_cast<double>(rec.n_candidates) *
                static_cast<double>(st.layout.dim()) * static_cast<double>(st.layout.dim());
  rec.c_rec_wall_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

  // Run the round and turn the trace into rewards.
  auto trace = execute(db, incoming);
  trace.creation_times_sec = creations;
  rec.c_exc_s = trace.total_execution_sec();
  st.scans.ingest(trace, round);
  const auto gains = compute_gains(trace, st.scans, db, round);
  for (double b : gains.query_baseline) rec.baseline_total_s += b;
  for (double g : gains.query_gain) rec.gain_total_s += g;
  rec.dropped_gain_s = gains.dropped_gain;

  const double denom = std::max(rec.baseline_total_s + rec.c_cre_s, 1e-6);
  std::vector<ArmObservation<double>> observations;
  observations.reserve(chosen_ids.size());
  for (std::uint64_t id : chosen_ids) {
    const auto git = gains.arms.find(id);
    const double gain = git == gains.arms.end() ? 0.0 : git->second.total();
    const auto cit = creations.find(id);
    const double creation = cit == creations.end() ? 0.0 : cit->second;
    const bool built = cit != creations.end();
    if (st.config.structured) {
      auto obs = split_structured(contexts.at(id), gain, creation, built,
                                  st.layout.size_slot());
      for (auto& r : obs.sub_rewards) r /= denom;
      rec.rewards[id] = (obs.sub_rewards.size() > 1)
                            ? obs.sub_rewards[0] + obs.sub_rewards[1]
                            : obs.sub_rewards[0];
      observations.push_back(std::move(obs));
    } else {
      const double r = arm_reward(gain, creation, built) / denom;
      rec.rewards[id] = r;
      observations.push_back(ArmObservation<double>{{contexts.at(id)}, {r}});
    }
  }
  if (!observations.empty()) st.bandit = update(std::move(st.bandit), observations);

  // Workload statistics and shift handling happen after the round played.
  const int fresh_templates = st.store.ingest(incoming, round);
  const auto active = st.store.select_qoi(round, st.config.qoi_window).size();
  if (!cold_store && active > 0) {
    rec.shift_intensity = std::clamp(
        static_cast<double>(fresh_templates) / static_cast<double>(active), 0.0, 1.0);
  }
  if (rec.shift_intensity > st.config.shift_threshold) {
    st.bandit = forget(std::move(st.bandit),
                       st.config.hyper.forget_factor * rec.shift_intensity);
    ++st.forget_count;
    rec.forgot = true;
  }
  st.picks.record(round, trace.used_arms());
  return rec;
}

std::uint64_t round_env_seed(std::uint64_t run_seed, std::int64_t round) {
  return mix64(mix64(run_seed, kEnvTag), static_cast<std::uint64_t>(round));
}

namespace {

DbState make_db(const ExperimentSetup& setup) {
  validate(setup.cost);
  DbState db;
  db.schema = setup.workload.schema;
  db.cost = setup.cost;
  db.poison = setup.poison;
  return db;
}

void fold_round(ExperimentResult& out, const RoundRecord& rec) {
  out.total_rec_s += rec.c_rec_s;
  out.total_cre_s += rec.c_cre_s;
  out.total_exc_s += rec.c_exc_s;
  out.rounds.push_back(rec);
}

}  // namespace

ExperimentResult run_tuned(const ExperimentSetup& setup, const TunerConfig& config,
                           std::uint64_t run_seed) {
  const auto workload = gen_workload(setup.workload);
  DbState db = make_db(setup);
  // Budget enforcement lives in run_round's own checks (which distinguish an
  // internal invariant breach from a caller mistake); the physical ceiling
  // stays open.
  TunerState st = make_tuner(db.schema, config);

  ExperimentResult out;
  for (std::size_t r = 0; r < workload.rounds.size(); ++r) {
    db.rng_seed = round_env_seed(run_seed, static_cast<std::int64_t>(r + 1));
    fold_round(out, run_round(st, db, workload.rounds[r]));
  }
  out.final_config = out.rounds.empty() ? std::set<std::uint64_t>{} : out.rounds.back().config;
  out.final_memory_bytes = out.rounds.empty() ? 0.0 : out.rounds.back().memory_bytes;
  out.forget_count = st.forget_count;
  out.registry = std::move(st.registry);
  return out;
}

ExperimentResult run_fixed(const ExperimentSetup& setup,
                           const std::vector<IndexCandidate>& fixed_config,
                           std::uint64_t run_seed) {
  const auto workload = gen_workload(setup.workload);
  DbState db = make_db(setup);

  ExperimentResult out;
  for (std::size_t r = 0; r < workload.rounds.size(); ++r) {
    const std::int64_t round = static_cast<std::int64_t>(r + 1);
    db.rng_seed = round_env_seed(run_seed, round);
    RoundRecord rec;
    rec.round = round;
    if (r == 0) {
      const auto creations = materialise(db, fixed_config);
      for (const auto& [id, t] : creations) rec.c_cre_s += t;
    }
    const auto trace = execute(db, workload.rounds[r]);
    rec.c_exc_s = trace.total_execution_sec();
    for (const auto& [id, idx] : db.materialised) rec.config.insert(id);
    rec.memory_bytes = materialised_bytes(db);
    fold_round(out, rec);
  }
  out.final_config = out.rounds.empty() ? std::set<std::uint64_t>{} : out.rounds.back().config;
  out.final_memory_bytes = out.rounds.empty() ? 0.0 : out.rounds.back().memory_bytes;
  out.registry = db.materialised;
  return out;
}

}  // namespace ixbandit
