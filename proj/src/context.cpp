#include "ixbandit/context.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ixbandit {

ContextLayout make_layout(const Schema& schema, int usage_window) {
  if (usage_window < 1) throw std::invalid_argument("usage window below 1");
  ContextLayout layout;
  layout.n_columns = column_count(schema);
  layout.usage_window = usage_window;
  return layout;
}

PickHistory::PickHistory(int window) : window_(window) {
  if (window < 1) throw std::invalid_argument("pick-history window below 1");
}

void PickHistory::record(std::int64_t round, const std::set<std::uint64_t>& used_arms) {
  used_by_round_[round] = used_arms;
  const std::int64_t horizon = round - window_;
  used_by_round_.erase(used_by_round_.begin(), used_by_round_.lower_bound(horizon + 1));
}

int PickHistory::count(std::uint64_t arm_id, std::int64_t current_round) const {
  int hits = 0;
  auto it = used_by_round_.lower_bound(current_round - window_);
  for (; it != used_by_round_.end() && it->first < current_round; ++it)
    if (it->second.count(arm_id)) ++hits;
  return hits;
}

Eigen::VectorXd build_context(const IndexCandidate& arm, const std::vector<QueryTemplate>& qoi,
                              const Schema& schema, const PickHistory& picks,
                              std::int64_t current_round, const ContextLayout& layout) {
  if (layout.n_columns != column_count(schema))
    throw std::invalid_argument("layout built from a different schema");
  if (picks.window() != layout.usage_window)
    throw std::invalid_argument("pick history window disagrees with layout");
  if (arm.key_columns.empty()) throw std::invalid_argument("arm has no key columns");
  for (std::uint32_t c : arm.key_columns)
    if (c >= layout.n_columns) throw std::invalid_argument("arm key references unknown column");
  for (std::uint32_t c : arm.include_columns)
    if (c >= layout.n_columns) throw std::invalid_argument("arm include references unknown column");

  std::set<std::uint32_t> workload_predicates;
  for (const auto& tpl : qoi)
    for (const auto& p : tpl.predicates) workload_predicates.insert(p.column);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(layout.dim());

  // Key-position encoding: leading column 0.1, second 0.01 and so on, but
  // only columns the workload actually filters on carry signal. Include
  // columns stay at 0.
  for (std::size_t j = 0; j < arm.key_columns.size(); ++j) {
    const std::uint32_t c = arm.key_columns[j];
    if (workload_predicates.count(c))
      x[static_cast<Eigen::Index>(c)] = std::pow(10.0, -static_cast<double>(j + 1));
  }

  bool covering = false;
  for (const auto& tpl : qoi) {
    auto it = arm.covering_for.find(tpl.template_id);
    if (it != arm.covering_for.end() && it->second) {
      covering = true;
      break;
    }
  }
  x[layout.covering_slot()] = covering ? 1.0 : 0.0;

  if (!arm.materialised) {
    const double db = database_size_bytes(schema);
    const double ratio = db > 0.0 ? arm.est_size_bytes / db : 0.0;
    x[layout.size_slot()] = std::clamp(ratio, 0.0, 1.0);
  }

  x[layout.usage_slot()] = static_cast<double>(picks.count(arm.arm_id, current_round));

  x /= layout.scale();
  if (x.squaredNorm() > 1.0 + 1e-12)
    throw std::logic_error("context escaped the unit ball after scaling");
  return x;
}

}  // namespace ixbandit
