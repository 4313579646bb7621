#include "ixbandit/workloads.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace ixbandit {
namespace {

constexpr std::uint64_t kStreamTag = 0x30AD;
constexpr std::uint64_t kShuffleTag = 0x5F1E;

// Seeded Fisher-Yates so group division does not depend on std::shuffle's
// unspecified implementation.
template <typename T>
void shuffle_vec(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i)
    std::swap(v[i - 1], v[rng.below(i)]);
}

std::uint32_t draw_zipf_rank(Rng& rng, double z, int ranks) {
  if (ranks <= 1) return 1;
  double total = 0.0;
  for (int r = 1; r <= ranks; ++r) total += std::pow(static_cast<double>(r), -z);
  double u = rng.uniform01() * total;
  for (int r = 1; r <= ranks; ++r) {
    u -= std::pow(static_cast<double>(r), -z);
    if (u <= 0.0) return static_cast<std::uint32_t>(r);
  }
  return static_cast<std::uint32_t>(ranks);
}

// Instances per round for a template list under the size multiplier, cycling
// through the list so smaller multipliers keep a stable subset.
std::vector<QueryInstance> instantiate_set(const std::vector<QueryTemplate>& pool, double mult,
                                           Rng& rng, const InstantiateParams& params) {
  std::vector<QueryInstance> out;
  if (pool.empty()) return out;
  const auto count = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(mult * static_cast<double>(pool.size()))));
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j)
    out.push_back(instantiate_template(pool[j % pool.size()], rng, params));
  return out;
}

std::vector<QueryInstance> transactional_set(const std::vector<QueryTemplate>& kinds, Rng& rng,
                                             const InstantiateParams& params) {
  std::vector<QueryInstance> out;
  out.reserve(kTransactionalSetSize);
  for (std::size_t k = 0; k < kinds.size(); ++k)
    for (int c = 0; c < kTransactionalKindCounts[k]; ++c)
      out.push_back(instantiate_template(kinds[k], rng, params));
  return out;
}

int effective_tar(const WorkloadSpec& spec, std::int64_t round) {
  if (!spec.dynamic_tar) return spec.tar;
  // 20-round phases alternating quiet and busy: 0, tar, 0, tar, ...
  const std::int64_t phase = (round - 1) / 20;
  return phase % 2 == 1 ? spec.tar : 0;
}

}  // namespace

void validate(const WorkloadSpec& spec) {
  validate(spec.schema);
  if (spec.rounds < 1) throw std::invalid_argument("workload needs at least one round");
  if (spec.round_size <= 0.0) throw std::invalid_argument("round size multiplier not positive");
  if (spec.tar < 0) throw std::invalid_argument("tar below zero");
  if (spec.sel_cv < 0.0) throw std::invalid_argument("selectivity spread below zero");
  if (spec.zipf_z < 0.0) throw std::invalid_argument("zipf factor below zero");
  if (spec.zipf_ranks < 1) throw std::invalid_argument("zipf rank count below one");
  if (spec.analytical.empty()) throw std::invalid_argument("no analytical templates");
  for (const auto& tpl : spec.analytical) {
    validate(tpl, spec.schema);
    if (tpl.kind != QueryKind::select)
      throw std::invalid_argument("analytical pool contains a non-select template");
  }
  std::set<std::uint64_t> ids;
  for (const auto& tpl : spec.analytical)
    if (!ids.insert(tpl.template_id).second)
      throw std::invalid_argument("duplicate template id in analytical pool");
  for (const auto& tpl : spec.transactional) {
    validate(tpl, spec.schema);
    if (!ids.insert(tpl.template_id).second)
      throw std::invalid_argument("transactional template id collides with the pool");
  }

  if (spec.mode == WorkloadSpec::Mode::shifting) {
    if (spec.shift_groups < 1) throw std::invalid_argument("shifting needs at least one group");
    if (spec.shift_groups * spec.shift_phase != spec.rounds)
      throw std::invalid_argument("shifting needs groups x phase == rounds");
    if (spec.analytical.size() % static_cast<std::size_t>(spec.shift_groups) != 0)
      throw std::invalid_argument("template pool not divisible into equal groups");
  }
  if (spec.mode == WorkloadSpec::Mode::htap && spec.transactional.size() != 5)
    throw std::invalid_argument("htap needs exactly five transactional kinds");
  if (spec.mode == WorkloadSpec::Mode::random_mode && spec.instances_per_template < 1)
    throw std::invalid_argument("random mode needs at least one instance per template");
}

QueryInstance instantiate_template(const QueryTemplate& tpl, Rng& rng,
                                   const InstantiateParams& params) {
  QueryInstance q;
  q.template_id = tpl.template_id;
  q.kind = tpl.kind;
  q.payload = tpl.payload;
  q.constant_rank = draw_zipf_rank(rng, params.zipf_z, params.zipf_ranks);
  q.predicates.reserve(tpl.predicates.size());
  for (const auto& p : tpl.predicates) {
    Predicate inst = p;
    inst.selectivity =
        std::clamp(p.selectivity * rng.lognormal_unit_mean(params.sel_cv), 1e-6, 1.0);
    q.predicates.push_back(inst);
  }
  if (tpl.kind != QueryKind::select) {
    const double rows = tpl.rows_touched_mean * rng.lognormal_unit_mean(params.sel_cv);
    q.rows_touched = static_cast<std::uint64_t>(std::max(1.0, std::round(rows)));
  }
  return q;
}

GeneratedWorkload gen_workload(const WorkloadSpec& spec) {
  validate(spec);
  GeneratedWorkload out;
  out.rounds.reserve(static_cast<std::size_t>(spec.rounds));
  const InstantiateParams params{spec.sel_cv, spec.zipf_z, spec.zipf_ranks};

  // Shifting mode: one seeded division of the pool into equal groups.
  std::vector<std::vector<QueryTemplate>> groups;
  if (spec.mode == WorkloadSpec::Mode::shifting) {
    std::vector<QueryTemplate> pool = spec.analytical;
    Rng shuffler(mix64(spec.seed, kShuffleTag));
    shuffle_vec(pool, shuffler);
    const std::size_t per_group = pool.size() / static_cast<std::size_t>(spec.shift_groups);
    for (int g = 0; g < spec.shift_groups; ++g)
      groups.emplace_back(pool.begin() + g * per_group, pool.begin() + (g + 1) * per_group);
  }

  std::set<std::uint64_t> previous_templates;
  for (std::int64_t round = 1; round <= spec.rounds; ++round) {
    Rng rng(mix64(mix64(spec.seed, kStreamTag), static_cast<std::uint64_t>(round)));
    std::vector<QueryInstance> instances;

    switch (spec.mode) {
      case WorkloadSpec::Mode::static_mode:
        instances = instantiate_set(spec.analytical, spec.round_size, rng, params);
        break;
      case WorkloadSpec::Mode::shifting: {
        const auto g = static_cast<std::size_t>((round - 1) / spec.shift_phase);
        instances = instantiate_set(groups[g], spec.round_size, rng, params);
        break;
      }
      case WorkloadSpec::Mode::random_mode: {
        const double per_round = spec.round_size * static_cast<double>(spec.analytical.size()) *
                                 spec.instances_per_template / static_cast<double>(spec.rounds);
        const auto count =
            static_cast<std::size_t>(std::max<long long>(1, std::llround(per_round)));
        for (std::size_t j = 0; j < count; ++j) {
          const auto pick = rng.below(spec.analytical.size());
          instances.push_back(instantiate_template(spec.analytical[pick], rng, params));
        }
        break;
      }
      case WorkloadSpec::Mode::htap: {
        instances = instantiate_set(spec.analytical, spec.round_size, rng, params);
        const int tar_now = effective_tar(spec, round);
        for (int s = 0; s < tar_now; ++s) {
          auto set = transactional_set(spec.transactional, rng, params);
          instances.insert(instances.end(), set.begin(), set.end());
        }
        out.tar_by_round.push_back(tar_now);
        break;
      }
    }

    std::set<std::uint64_t> current;
    for (const auto& q : instances) current.insert(q.template_id);
    if (round == 1 || current.empty()) {
      out.repeat_fraction.push_back(0.0);
    } else {
      std::size_t repeats = 0;
      for (std::uint64_t id : current) repeats += previous_templates.count(id);
      out.repeat_fraction.push_back(static_cast<double>(repeats) /
                                    static_cast<double>(current.size()));
    }
    previous_templates = std::move(current);
    out.rounds.push_back(std::move(instances));
  }
  return out;
}

WorkloadSpec make_synthetic_spec(WorkloadSpec::Mode mode, int pool_size, std::int64_t rounds,
                                 std::uint64_t seed, double db_scale) {
  if (pool_size < 1) throw std::invalid_argument("pool size below one");
  WorkloadSpec spec;
  spec.mode = mode;
  spec.rounds = rounds;
  spec.seed = seed;
  spec.db_scale = db_scale;

  // Six tables spanning three orders of magnitude. Transactional writes hit
  // t0/t1 alongside the analytical reads; t4/t5 serve the point probes.
  const std::uint64_t base_rows[6] = {1'000'000, 500'000, 200'000, 100'000, 50'000, 10'000};
  const int base_cols[6] = {12, 10, 8, 9, 8, 8};
  Rng rng(mix64(seed, 0x5C3E));
  for (int t = 0; t < 6; ++t) {
    Table table;
    table.name = "t" + std::to_string(t);
    table.row_count =
        std::max<std::uint64_t>(1000, static_cast<std::uint64_t>(base_rows[t] * db_scale));
    table.columns.reserve(static_cast<std::size_t>(base_cols[t]));
    std::uint32_t width_total = 0;
    for (int c = 0; c < base_cols[t]; ++c) {
      Column col;
      col.name = "c" + std::to_string(c);
      col.width_bytes = (c % 3 == 0) ? 4 : (c % 3 == 1 ? 8 : 16);
      col.distinct_values = std::max<std::uint64_t>(10, table.row_count / 100);
      width_total += col.width_bytes;
      table.columns.push_back(col);
    }
    table.row_width_bytes = width_total + 8;  // header bytes
    spec.schema.tables.push_back(std::move(table));
  }

  auto pick_column = [&](std::uint32_t table, std::set<std::uint32_t>& used) {
    const auto n = static_cast<std::uint32_t>(spec.schema.tables[table].columns.size());
    for (int attempt = 0; attempt < 64; ++attempt) {
      const auto local = static_cast<std::uint32_t>(rng.below(n));
      const std::uint32_t global = global_column_id(spec.schema, table, local);
      if (used.insert(global).second) return global;
    }
    throw std::logic_error("column pool exhausted");
  };

  for (int i = 0; i < pool_size; ++i) {
    QueryTemplate tpl;
    tpl.template_id = 100 + static_cast<std::uint64_t>(i);
    tpl.kind = QueryKind::select;
    // Tables 0 and 1 also take transactional writes, so indexes there pay
    // maintenance under HTAP load.
    const auto table = static_cast<std::uint32_t>(i % 4);
    std::set<std::uint32_t> used;
    const int n_preds = 1 + static_cast<int>(rng.below(3));
    for (int p = 0; p < n_preds; ++p) {
      Predicate pred;
      pred.column = pick_column(table, used);
      // Log-uniform selectivity across [0.001, 0.3].
      pred.selectivity = std::exp(std::log(0.001) +
                                  rng.uniform01() * (std::log(0.3) - std::log(0.001)));
      tpl.predicates.push_back(pred);
    }
    const int n_payload = 1 + static_cast<int>(rng.below(2));
    for (int p = 0; p < n_payload; ++p) tpl.payload.push_back(pick_column(table, used));
    spec.analytical.push_back(std::move(tpl));
  }

  // The five transactional kinds. Writes land on tables 0 and 1, the same
  // tables the analytical pool reads, so index maintenance costs are felt
  // there; the probes hit otherwise quiet small tables. Write templates skip
  // payloads except inserts, which name a column so the table is derivable.
  auto write_template = [&](std::uint64_t id, QueryKind kind, std::uint32_t table, double rows) {
    QueryTemplate tpl;
    tpl.template_id = id;
    tpl.kind = kind;
    tpl.rows_touched_mean = rows;
    std::set<std::uint32_t> used;
    if (kind == QueryKind::insert) {
      tpl.payload.push_back(global_column_id(spec.schema, table, 0));
    } else {
      Predicate pred;
      pred.column = pick_column(table, used);
      pred.selectivity = 0.01;
      tpl.predicates.push_back(pred);
    }
    return tpl;
  };
  auto small_select = [&](std::uint64_t id, std::uint32_t table) {
    QueryTemplate tpl;
    tpl.template_id = id;
    tpl.kind = QueryKind::select;
    std::set<std::uint32_t> used;
    Predicate pred;
    pred.column = pick_column(table, used);
    pred.selectivity = 0.005;
    tpl.predicates.push_back(pred);
    tpl.payload.push_back(pick_column(table, used));
    return tpl;
  };
  spec.transactional = {
      write_template(1, QueryKind::insert, 0, 10.0),   // order intake
      write_template(2, QueryKind::update, 1, 3.0),    // balance update
      small_select(3, 4),                              // status probe
      write_template(4, QueryKind::delete_op, 0, 20.0),// batch delivery
      small_select(5, 5),                              // stock probe
  };
  return spec;
}

}  // namespace ixbandit
