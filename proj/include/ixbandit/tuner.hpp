#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "ixbandit/arms.hpp"
#include "ixbandit/bandit.hpp"
#include "ixbandit/context.hpp"
#include "ixbandit/query_store.hpp"
#include "ixbandit/sim_env.hpp"
#include "ixbandit/workloads.hpp"

// The online tuning loop. Each round: derive the queries of interest from
// what earlier rounds ingested, enumerate candidate indexes, score them
// optimistically, pick a configuration under the memory budget, reconfigure
// the database, run the incoming queries, and feed the realised gains back
// into the bandit. The incoming batch is never inspected before the
// configuration is chosen.
namespace ixbandit {

struct TunerConfig {
  HyperParams hyper;
  double memory_budget_bytes = 0.0;  // ceiling on the configuration's estimated footprint
  int max_key_width = 3;
  int per_template_cap = 64;
  std::int64_t qoi_window = 40;   // rounds a template stays interesting
  std::int64_t scan_window = 40;  // rounds a scan observation backs baselines
  int usage_window = 10;          // rounds feeding the optimiser-usage feature
  bool structured = false;        // two-piece reward observations
  double shift_threshold = 0.5;   // fresh-template ratio that triggers forgetting
};

void validate(const TunerConfig& config);

struct TunerState {
  TunerConfig config;
  ContextLayout layout;
  BanditState<double> bandit;
  QueryStore store;
  ScanHistory scans;
  PickHistory picks;
  // Every arm ever proposed. Sizes start as planning estimates and are
  // corrected to exact sizes after a first build.
  std::map<std::uint64_t, IndexCandidate> registry;
  std::int64_t round = 0;
  int forget_count = 0;
};

TunerState make_tuner(const Schema& schema, TunerConfig config);

struct RoundRecord {
  std::int64_t round = 0;
  double c_rec_s = 0.0;       // modeled recommendation cost, deterministic
  double c_rec_wall_s = 0.0;  // measured wall clock, diagnostic only
  double c_cre_s = 0.0;
  double c_exc_s = 0.0;
  double c_total_s() const { return c_rec_s + c_cre_s + c_exc_s; }

  std::set<std::uint64_t> config;           // arm ids materialised this round
  double memory_bytes = 0.0;                // exact bytes on disk after reconfiguration
  std::map<std::uint64_t, double> rewards;  // scaled rewards fed to the bandit
  double baseline_total_s = 0.0;            // reconstructed no-index round total
  double gain_total_s = 0.0;
  double dropped_gain_s = 0.0;
  double shift_intensity = 0.0;
  bool forgot = false;
  int n_qoi = 0;
  int n_candidates = 0;
};

// Plays one round against the environment. The caller rotates db.rng_seed
// before each call so noise draws differ across rounds.
RoundRecord run_round(TunerState& state, DbState& db,
                      const std::vector<QueryInstance>& incoming);

struct ExperimentSetup {
  WorkloadSpec workload;
  CostModelParams cost;
  std::optional<PoisonSpec> poison;
};

struct ExperimentResult {
  std::vector<RoundRecord> rounds;
  double total_rec_s = 0.0;
  double total_cre_s = 0.0;
  double total_exc_s = 0.0;
  double total_s() const { return total_rec_s + total_cre_s + total_exc_s; }
  std::set<std::uint64_t> final_config;
  double final_memory_bytes = 0.0;
  int forget_count = 0;
  // Definition of every arm any round's configuration refers to, so chosen
  // configurations can be replayed (for noise-free regret evaluation) without
  // the tuner state.
  std::map<std::uint64_t, IndexCandidate> registry;
};

// Per-round environment seed; exposed so fixed-config replays and the tuned
// run see identical noise streams.
std::uint64_t round_env_seed(std::uint64_t run_seed, std::int64_t round);

// Runs the tuner over the generated workload with a fresh environment.
ExperimentResult run_tuned(const ExperimentSetup& setup, const TunerConfig& config,
                           std::uint64_t run_seed);

// Replays the same stream against a fixed configuration materialised up
// front; an empty configuration is the no-index agent.
ExperimentResult run_fixed(const ExperimentSetup& setup,
                           const std::vector<IndexCandidate>& fixed_config,
                           std::uint64_t run_seed);

}  // namespace ixbandit
