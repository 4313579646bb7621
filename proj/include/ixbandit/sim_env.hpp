#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ixbandit/arms.hpp"
#include "ixbandit/schema.hpp"

// Deterministic simulated DBMS: materialises indexes, picks access paths with
// an analytic cost model, and reports elapsed-time traces. All randomness
// (measurement noise, optimiser misestimates) derives from DbState.rng_seed,
// which the caller rotates per round.
namespace ixbandit {

struct CostModelParams {
  double scan_bytes_per_sec = 1e8;
  double seek_base_sec = 0.01;
  double lookup_penalty_per_row_sec = 2e-5;
  double build_bytes_per_sec = 5e7;
  double maint_row_update_sec = 2e-6;
  double maint_index_update_sec = 1e-3;
  double noise_cv = 0.1;          // lognormal coefficient of variation
  double misestimate_prob = 0.0;  // chance the optimiser takes the second-best path
  // Writes touching at least this many rows get per-index maintenance times;
  // smaller writes report one aggregate for the whole index set.
  std::uint64_t itemise_rows_threshold = 100;
};

void validate(const CostModelParams& params);

// Targeted optimiser fault: whenever the named index is a candidate path,
// with this probability it is chosen regardless of estimated cost.
struct PoisonSpec {
  std::uint64_t arm_id = 0;
  double prob = 0.0;
};

struct DbState {
  Schema schema;
  CostModelParams cost;
  double storage_ceiling_bytes = std::numeric_limits<double>::infinity();
  std::uint64_t rng_seed = 0;
  std::optional<PoisonSpec> poison;
  // Keyed by arm_id; sizes here are exact built sizes, not estimates.
  std::map<std::uint64_t, IndexCandidate> materialised;
};

double materialised_bytes(const DbState& db);

// One table's access within a select query.
struct TableAccess {
  std::uint32_t table = 0;
  bool full_scan = true;
  std::uint64_t index_used = 0;  // arm_id when full_scan is false
  bool covering = false;
  double matched_selectivity = 1.0;
  double time_sec = 0.0;
};

struct QueryTrace {
  std::uint64_t template_id = 0;
  QueryKind kind = QueryKind::select;
  double total_time_sec = 0.0;
  // Selects: per-table access components plus a fixed multi-table overhead.
  std::vector<TableAccess> accesses;
  double plan_overhead_sec = 0.0;
  // Writes: heap maintenance plus per-secondary-index maintenance. The
  // per-index map is filled only when the write is large enough to itemise;
  // the touched set is always complete.
  double base_time_sec = 0.0;
  double maintenance_total_sec = 0.0;
  bool maintenance_itemised = false;
  std::map<std::uint64_t, double> maintenance_sec;
  std::set<std::uint64_t> touched_indices;
};

struct ExecutionTrace {
  std::vector<QueryTrace> queries;
  // Builds performed when this round's configuration was materialised; the
  // round loop copies them in so the trace is self-contained.
  std::map<std::uint64_t, double> creation_times_sec;

  double total_execution_sec() const;
  // Arms the optimiser actually used anywhere in the trace.
  std::set<std::uint64_t> used_arms() const;
};

// Reconciles the materialised set with the wanted configuration: builds the
// missing indexes (correcting their sizes to exact built sizes), drops the
// rest. Returns per-index creation times for the builds.
std::map<std::uint64_t, double> materialise(DbState& db,
                                            const std::vector<IndexCandidate>& config);

// Candidate access path costing for one select query on one table, exposed
// for tests and for the optimiser itself.
struct PathChoice {
  bool full_scan = true;
  std::uint64_t index_used = 0;
  bool covering = false;
  double matched_selectivity = 1.0;
  double est_cost_sec = 0.0;
};

std::vector<PathChoice> candidate_paths(const DbState& db, const QueryInstance& q,
                                        std::uint32_t table);

// Minimum-estimated-cost path, subject to the seeded misestimate flip and the
// poison override. u_misestimate and u_poison are uniform draws in [0,1).
PathChoice choose_access_path(const DbState& db, const QueryInstance& q, std::uint32_t table,
                              double u_misestimate, double u_poison);

ExecutionTrace execute(const DbState& db, const std::vector<QueryInstance>& workload);

// Cross-round observation cache backing the no-index baseline estimates.
class ScanHistory {
 public:
  explicit ScanHistory(std::int64_t window);
  void ingest(const ExecutionTrace& trace, std::int64_t round);
  std::optional<double> observed_scan(std::uint32_t table, std::uint64_t template_id,
                                      std::int64_t round) const;
  std::optional<double> max_index_time(std::uint32_t table, std::uint64_t template_id,
                                       std::int64_t round) const;
  std::int64_t window() const { return window_; }

 private:
  using Key = std::pair<std::uint32_t, std::uint64_t>;
  std::optional<double> lookup_latest(const std::map<Key, std::map<std::int64_t, double>>& store,
                                      Key key, std::int64_t round) const;
  std::int64_t window_;
  std::map<Key, std::map<std::int64_t, double>> scans_;        // latest scan per round
  std::map<Key, std::map<std::int64_t, double>> index_times_;  // max index time per round
};

// Best available stand-in for the table's no-index scan time: a full scan
// observed inside the window wins, then the largest observed index time for
// the same (table, template), then the analytic formula.
double estimate_full_scan(const ScanHistory& history, const DbState& db, std::uint32_t table,
                          std::uint64_t template_id, std::int64_t round);
double estimate_full_scan(const ScanHistory& history, const DbState& db, std::uint32_t table,
                          const QueryInstance& q, std::int64_t round);

// Analytic full-scan formula, also the cold-start fallback.
double full_scan_cost(const DbState& db, std::uint32_t table);

std::string trace_to_json(const ExecutionTrace& trace);

}  // namespace ixbandit
