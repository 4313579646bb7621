#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "ixbandit/arms.hpp"
#include "ixbandit/schema.hpp"

// Feature vectors the bandit scores arms with. Layout: one slot per schema
// column (key-position encoding), then three derived slots: covering flag,
// size ratio, recent optimiser usage. A fixed scaling keeps every vector
// inside the unit ball so cross-round values stay comparable.
namespace ixbandit {

struct ContextLayout {
  std::uint32_t n_columns = 0;
  int usage_window = 10;  // rounds of optimiser history feeding the usage slot

  Eigen::Index dim() const { return static_cast<Eigen::Index>(n_columns) + 3; }
  Eigen::Index covering_slot() const { return n_columns; }
  Eigen::Index size_slot() const { return n_columns + 1; }
  Eigen::Index usage_slot() const { return n_columns + 2; }

  // Upper bound on the raw norm: squared part-1 entries sum below 1.02, the
  // covering and size slots are at most 1, usage at most the window length.
  double scale() const {
    const double h = static_cast<double>(usage_window);
    return std::sqrt(1.02 + 1.0 + 1.0 + h * h);
  }
};

ContextLayout make_layout(const Schema& schema, int usage_window = 10);

// Which arms the simulated optimiser actually used, per round, for the usage
// slot. Rounds older than the window are dropped on record.
class PickHistory {
 public:
  explicit PickHistory(int window);
  void record(std::int64_t round, const std::set<std::uint64_t>& used_arms);
  // Usage count over rounds [current_round - window, current_round - 1].
  int count(std::uint64_t arm_id, std::int64_t current_round) const;
  int window() const { return window_; }

 private:
  int window_;
  std::map<std::int64_t, std::set<std::uint64_t>> used_by_round_;
};

Eigen::VectorXd build_context(const IndexCandidate& arm, const std::vector<QueryTemplate>& qoi,
                              const Schema& schema, const PickHistory& picks,
                              std::int64_t current_round, const ContextLayout& layout);

}  // namespace ixbandit
