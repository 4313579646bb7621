#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <vector>

#include "ixbandit/bandit.hpp"
#include "ixbandit/sim_env.hpp"

// Turns execution traces into per-arm rewards: the three-way gain
// decomposition (data-scan, index-maintenance, unclaimed), the creation-cost
// penalty, and the two-piece structured observation for focused updates.
namespace ixbandit {

struct ArmGain {
  double g_ds = 0.0;  // data-scan gain from serving accesses
  double g_im = 0.0;  // usually negative: index maintenance overhead
  double g_un = 0.0;  // residual gain divided among participants
  double total() const { return g_ds + g_im + g_un; }
};

struct GainBreakdown {
  std::map<std::uint64_t, ArmGain> arms;
  // Parallel to trace.queries.
  std::vector<double> query_gain;      // C_to(q, no-index) - C_to(q, s)
  std::vector<double> query_baseline;  // estimated C_to(q, no-index)
  // Gain from queries with no participating index; logged, never assigned.
  double dropped_gain = 0.0;
  int dropped_queries = 0;
};

// Per-query decomposition. The no-index total is reconstructed from scan
// history baselines (an observed full scan stands for itself exactly), index
// accesses claim baseline-minus-observed as data-scan gain, maintenance times
// count against each touched index, and whatever is left over is divided
// equally among the query's participating indexes.
GainBreakdown compute_gains(const ExecutionTrace& trace, const ScanHistory& history,
                            const DbState& db, std::int64_t round);

// Gain net of the one-off creation cost in the creation round.
double arm_reward(double gain, double creation_time, bool materialised_this_round);

double super_arm_reward(const std::map<std::uint64_t, double>& rewards);

// Focused-update observation: one sub-example carries everything but the
// size feature and earns the gain; the other carries only the size feature
// and pays the creation cost. Sub-contexts sum to the full context and
// sub-rewards sum to arm_reward.
ArmObservation<double> split_structured(const Eigen::VectorXd& context, double gain,
                                        double creation_time, bool materialised_this_round,
                                        Eigen::Index size_slot);

}  // namespace ixbandit
