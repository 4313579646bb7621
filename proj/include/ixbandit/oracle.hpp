#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

// Budgeted selection of a super arm from scored index candidates. Selection
// is greedy with redundancy filters between picks; to keep a provable-ish
// approximation margin on hostile score/cost mixes, the score-ranked pass is
// backed by a density-ranked pass and a best-single-arm pass, and the best
// of the three selections wins.
namespace ixbandit::oracle {

// A candidate as the selection step sees it: an optimistic score, a memory
// footprint, and just enough structure for the redundancy filters.
struct ScoredArm {
  std::uint64_t arm_id = 0;
  double score = 0.0;
  double memory_cost = 0.0;                // bytes
  std::vector<std::uint32_t> key_columns;  // globally unique column ids, major first
  std::set<std::uint32_t> include_columns;
  std::set<std::uint64_t> query_origins;   // template ids this arm was generated for
  std::map<std::uint64_t, bool> is_covering;  // per origin template
};

// Drops candidates made redundant by what is already selected: arms that no
// longer fit the residual budget, arms whose key columns are a prefix of a
// selected arm's keys (for equal key lists, only when the includes add
// nothing new), and arms generated solely for a query that a selected
// covering arm already serves. Filtering is per-selection-pass state; nothing
// is remembered across rounds.
std::vector<ScoredArm> filter_step(const std::vector<ScoredArm>& selected,
                                   std::vector<ScoredArm> remaining, double residual_budget);

// Selected arm ids for the given memory budget (bytes).
std::set<std::uint64_t> greedy_select(const std::vector<ScoredArm>& arms, double budget);

// Ratio of the greedy selection's total score to the exhaustive subset
// optimum. Test harness only; refuses instances with more than 20 arms.
double verify_approximation(const std::vector<ScoredArm>& arms, double budget);

}  // namespace ixbandit::oracle
