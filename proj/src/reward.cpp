#include "ixbandit/reward.hpp"

#include <set>
#include <stdexcept>

namespace ixbandit {

GainBreakdown compute_gains(const ExecutionTrace& trace, const ScanHistory& history,
                            const DbState& db, std::int64_t round) {
  GainBreakdown out;
  out.query_gain.reserve(trace.queries.size());
  out.query_baseline.reserve(trace.queries.size());

  for (const auto& q : trace.queries) {
    std::set<std::uint64_t> participants;
    double claimed = 0.0;
    double baseline_total = 0.0;
    double total_gain = 0.0;

    if (q.kind == QueryKind::select) {
      for (const auto& a : q.accesses) {
        const double baseline =
            a.full_scan ? a.time_sec
                        : estimate_full_scan(history, db, a.table, q.template_id, round);
        baseline_total += baseline;
        if (!a.full_scan) {
          const double gain = baseline - a.time_sec;
          out.arms[a.index_used].g_ds += gain;
          claimed += gain;
          participants.insert(a.index_used);
        }
      }
      // The no-index plan pays the same fixed multi-table overhead, estimated
      // noise-free; any difference from the observed overhead lands in the
      // unclaimed residual.
      if (q.accesses.size() > 1)
        baseline_total += static_cast<double>(q.accesses.size() - 1) * db.cost.seek_base_sec;
      total_gain = baseline_total - q.total_time_sec;
    } else {
      // Without secondary indexes the write would cost just the heap part.
      baseline_total = q.base_time_sec;
      total_gain = baseline_total - q.total_time_sec;
      const auto& touched = q.touched_indices;
      if (!touched.empty()) {
        if (q.maintenance_itemised) {
          for (const auto& [id, t] : q.maintenance_sec) {
            out.arms[id].g_im -= t;
            claimed -= t;
          }
        } else {
          const double share = -q.maintenance_total_sec / static_cast<double>(touched.size());
          for (std::uint64_t id : touched) {
            out.arms[id].g_im += share;
            claimed += share;
          }
        }
        participants.insert(touched.begin(), touched.end());
      }
    }

    if (participants.empty()) {
      out.dropped_gain += total_gain;
      if (total_gain != 0.0) ++out.dropped_queries;
    } else {
      const double share =
          (total_gain - claimed) / static_cast<double>(participants.size());
      for (std::uint64_t id : participants) out.arms[id].g_un += share;
    }
    out.query_gain.push_back(total_gain);
    out.query_baseline.push_back(baseline_total);
  }
  return out;
}

double arm_reward(double gain, double creation_time, bool materialised_this_round) {
  if (creation_time < 0.0) throw std::invalid_argument("creation time below zero");
  return gain - (materialised_this_round ? creation_time : 0.0);
}

double super_arm_reward(const std::map<std::uint64_t, double>& rewards) {
  double total = 0.0;
  for (const auto& [id, r] : rewards) total += r;
  return total;
}

ArmObservation<double> split_structured(const Eigen::VectorXd& context, double gain,
                                        double creation_time, bool materialised_this_round,
                                        Eigen::Index size_slot) {
  if (size_slot < 0 || size_slot >= context.size())
    throw std::invalid_argument("size slot outside the context layout");
  Eigen::VectorXd execution = context;
  execution[size_slot] = 0.0;
  Eigen::VectorXd creation = Eigen::VectorXd::Zero(context.size());
  creation[size_slot] = context[size_slot];

  ArmObservation<double> obs;
  obs.sub_contexts = {std::move(execution), std::move(creation)};
  obs.sub_rewards = {gain,
                     arm_reward(0.0, creation_time, materialised_this_round)};
  return obs;
}

}  // namespace ixbandit
