#include "ixbandit/report.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <stdexcept>

namespace ixbandit {
namespace {

// One select-side table access: the scan fallback plus each universe arm
// that can serve it, by universe position.
struct AccessCosts {
  double scan = 0.0;
  std::vector<std::pair<std::size_t, double>> by_arm;
};

double percentile(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const auto n = values.size();
  const auto rank = static_cast<std::size_t>(
      std::max<long long>(0, std::llround(std::ceil(p * static_cast<double>(n))) - 1));
  return values[std::min(rank, n - 1)];
}

}  // namespace

BruteForceResult brute_force_optimal(const ExperimentSetup& setup, std::uint64_t run_seed) {
  // The hindsight oracle sees the environment without measurement noise,
  // optimiser slips, or injected faults.
  ExperimentSetup quiet = setup;
  quiet.cost.noise_cv = 0.0;
  quiet.cost.misestimate_prob = 0.0;
  quiet.poison.reset();

  std::vector<QueryTemplate> all_templates = quiet.workload.analytical;
  all_templates.insert(all_templates.end(), quiet.workload.transactional.begin(),
                       quiet.workload.transactional.end());
  const auto universe = generate_arms(all_templates, quiet.workload.schema);
  if (universe.size() > 20)
    throw std::invalid_argument("brute_force_optimal: arm universe exceeds 20 candidates");
  const auto n = universe.size();

  // Cost structure of the whole stream against the full universe. With every
  // arm materialised at once, candidate_paths yields each arm's serving cost;
  // a configuration's cost then only needs per-access minima.
  const auto workload = gen_workload(quiet.workload);
  DbState db_all;
  db_all.schema = quiet.workload.schema;
  db_all.cost = quiet.cost;
  materialise(db_all, universe);
  std::map<std::uint64_t, std::size_t> universe_pos;
  for (std::size_t i = 0; i < n; ++i) universe_pos.emplace(universe[i].arm_id, i);

  double fixed_cost = 0.0;                       // config-independent time
  std::vector<AccessCosts> accesses;             // select accesses, stream order
  std::vector<double> write_maint(n, 0.0);       // per-arm maintenance if chosen
  for (const auto& round : workload.rounds) {
    for (const auto& q : round) {
      if (q.kind == QueryKind::select) {
        const auto tables = referenced_tables(q, quiet.workload.schema);
        if (tables.size() > 1)
          fixed_cost += static_cast<double>(tables.size() - 1) * quiet.cost.seek_base_sec;
        for (const std::uint32_t table : tables) {
          AccessCosts ac;
          for (const auto& path : candidate_paths(db_all, q, table)) {
            if (path.full_scan)
              ac.scan = path.est_cost_sec;
            else
              ac.by_arm.emplace_back(universe_pos.at(path.index_used), path.est_cost_sec);
          }
          accesses.push_back(std::move(ac));
        }
      } else {
        fixed_cost += static_cast<double>(q.rows_touched) * quiet.cost.maint_row_update_sec;
        const auto tables = referenced_tables(q, quiet.workload.schema);
        for (std::size_t i = 0; i < n; ++i)
          if (universe[i].table == tables[0])
            write_maint[i] +=
                static_cast<double>(q.rows_touched) * quiet.cost.maint_index_update_sec;
      }
    }
  }

  const double budget = quiet.workload.memory_budget_bytes;
  double best_cost = std::numeric_limits<double>::infinity();
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double bytes = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) bytes += universe[i].est_size_bytes;
    if (bytes > budget) continue;

    double cost = fixed_cost;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (1u << i)) cost += write_maint[i];
    for (const auto& ac : accesses) {
      double best_access = ac.scan;
      for (const auto& [pos, c] : ac.by_arm)
        if ((mask & (1u << pos)) && c < best_access) best_access = c;
      cost += best_access;
    }

    const bool better =
        cost < best_cost ||
        (cost == best_cost &&
         std::popcount(mask) < std::popcount(best_mask)) ||
        (cost == best_cost && std::popcount(mask) == std::popcount(best_mask) &&
         mask < best_mask);
    if (better) {
      best_cost = cost;
      best_mask = mask;
    }
  }

  BruteForceResult out;
  for (std::size_t i = 0; i < n; ++i)
    if (best_mask & (1u << i)) out.config.push_back(universe[i]);
  out.replay = run_fixed(quiet, out.config, run_seed);
  out.total_exc_s = out.replay.total_exc_s;
  // The enumerator's arithmetic and the environment's replay must agree, or
  // the "optimal" label is meaningless.
  const double scale = std::max(1.0, std::abs(best_cost));
  if (std::abs(out.total_exc_s - best_cost) > 1e-6 * scale)
    throw std::logic_error("brute_force_optimal: enumerated cost disagrees with replay");
  return out;
}

RegretSeries compute_alpha_regret(const std::vector<double>& agent_rewards,
                                  const std::vector<double>& oracle_rewards, double alpha) {
  if (agent_rewards.size() != oracle_rewards.size())
    throw std::invalid_argument("compute_alpha_regret: series lengths differ");
  RegretSeries out;
  out.per_round.reserve(agent_rewards.size());
  out.cumulative.reserve(agent_rewards.size());
  double running = 0.0;
  for (std::size_t t = 0; t < agent_rewards.size(); ++t) {
    const double r = alpha * oracle_rewards[t] - agent_rewards[t];
    running += r;
    out.per_round.push_back(r);
    out.cumulative.push_back(running);
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string rounds_csv(const std::vector<RoundRecord>& rounds, const std::string& agent) {
  std::string out = "round,c_rec_s,c_cre_s,c_exc_s,c_total_s,config_size,memory_bytes,agent\n";
  for (const auto& rec : rounds) {
    out += std::to_string(rec.round);
    out += ',';
    out += format_double(rec.c_rec_s);
    out += ',';
    out += format_double(rec.c_cre_s);
    out += ',';
    out += format_double(rec.c_exc_s);
    out += ',';
    out += format_double(rec.c_total_s());
    out += ',';
    out += std::to_string(rec.config.size());
    out += ',';
    out += format_double(rec.memory_bytes);
    out += ',';
    out += agent;
    out += '\n';
  }
  return out;
}

std::string aggregate_csv(const std::vector<ExperimentResult>& runs, const std::string& agent) {
  if (runs.empty()) throw std::invalid_argument("aggregate_csv: no runs");
  const auto rounds = runs.front().rounds.size();
  for (const auto& r : runs)
    if (r.rounds.size() != rounds)
      throw std::invalid_argument("aggregate_csv: runs disagree on round count");

  std::string out =
      "round,c_rec_s_mean,c_cre_s_mean,c_exc_s_mean,c_total_s_mean,"
      "c_total_s_p25,c_total_s_p75,config_size_mean,memory_bytes_mean,agent\n";
  const double n = static_cast<double>(runs.size());
  for (std::size_t t = 0; t < rounds; ++t) {
    double rec = 0.0, cre = 0.0, exc = 0.0, total = 0.0, size = 0.0, bytes = 0.0;
    std::vector<double> totals;
    totals.reserve(runs.size());
    for (const auto& run : runs) {
      const auto& rr = run.rounds[t];
      rec += rr.c_rec_s;
      cre += rr.c_cre_s;
      exc += rr.c_exc_s;
      total += rr.c_total_s();
      size += static_cast<double>(rr.config.size());
      bytes += rr.memory_bytes;
      totals.push_back(rr.c_total_s());
    }
    out += std::to_string(runs.front().rounds[t].round);
    out += ',';
    out += format_double(rec / n);
    out += ',';
    out += format_double(cre / n);
    out += ',';
    out += format_double(exc / n);
    out += ',';
    out += format_double(total / n);
    out += ',';
    out += format_double(percentile(totals, 0.25));
    out += ',';
    out += format_double(percentile(totals, 0.75));
    out += ',';
    out += format_double(size / n);
    out += ',';
    out += format_double(bytes / n);
    out += ',';
    out += agent;
    out += '\n';
  }
  return out;
}

std::string summary_table(const std::vector<SummaryRow>& rows) {
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %5s %14s %14s %14s %14s\n", "agent", "seeds",
                "c_rec_s", "c_cre_s", "c_exc_s", "c_total_s");
  std::string out = line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-12s %5d %14.6g %14.6g %14.6g %14.6g\n",
                  r.agent.c_str(), r.seeds, r.c_rec_s, r.c_cre_s, r.c_exc_s, r.c_total_s);
    out += line;
  }
  return out;
}

}  // namespace ixbandit
