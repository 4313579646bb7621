#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ixbandit/tuner.hpp"

// Experiment reporting: the fixed-configuration hindsight oracle, regret
// series arithmetic, and the CSV emitters whose column sums reproduce the
// report totals bit for bit.
namespace ixbandit {

struct BruteForceResult {
  std::vector<IndexCandidate> config;  // ascending by arm_id
  ExperimentResult replay;             // noise-off replay of that configuration
  double total_exc_s = 0.0;
};

// Enumerates every budget-feasible configuration over the arm universe
// implied by the workload's templates, replays the stream under each with
// noise disabled, and returns the one minimising total execution time. Ties
// prefer fewer arms, then the lexicographically smaller id set. Refuses
// universes larger than 20 arms.
BruteForceResult brute_force_optimal(const ExperimentSetup& setup, std::uint64_t run_seed);

// Approximation level of the greedy selection step: 1 - 1/e.
inline constexpr double kGreedyAlpha = 0.6321205588285577;

struct RegretSeries {
  std::vector<double> per_round;   // alpha * oracle reward - agent reward
  std::vector<double> cumulative;  // prefix sums
};

RegretSeries compute_alpha_regret(const std::vector<double>& agent_rewards,
                                  const std::vector<double>& oracle_rewards,
                                  double alpha = kGreedyAlpha);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);

// Per-round CSV with the fixed column set
// round,c_rec_s,c_cre_s,c_exc_s,c_total_s,config_size,memory_bytes,agent.
std::string rounds_csv(const std::vector<RoundRecord>& rounds, const std::string& agent);

// Round-by-round mean and interquartile spread across seeds.
std::string aggregate_csv(const std::vector<ExperimentResult>& runs, const std::string& agent);

// Fixed-width cost breakdown table, one row per agent label.
struct SummaryRow {
  std::string agent;
  int seeds = 0;
  double c_rec_s = 0.0;
  double c_cre_s = 0.0;
  double c_exc_s = 0.0;
  double c_total_s = 0.0;
};
std::string summary_table(const std::vector<SummaryRow>& rows);

}  // namespace ixbandit
