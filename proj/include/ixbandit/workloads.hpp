#pragma once

#include <cstdint>
#include <vector>

#include "ixbandit/rng.hpp"
#include "ixbandit/schema.hpp"

// Reproducible query streams in the four experiment shapes: static repetition,
// phase-shifting template groups, uniform random sampling, and HTAP rounds
// mixing one analytical set with a tunable number of transactional sets.
namespace ixbandit {

struct WorkloadSpec {
  enum class Mode { static_mode, shifting, random_mode, htap };
  Mode mode = Mode::static_mode;
  Schema schema;
  std::vector<QueryTemplate> analytical;     // select templates
  std::vector<QueryTemplate> transactional;  // exactly five kinds, htap only
  std::int64_t rounds = 25;
  double round_size = 1.0;  // multiplier on the per-round instance count
  int shift_groups = 4;
  std::int64_t shift_phase = 20;
  int tar = 0;              // transactional sets per analytical set
  bool dynamic_tar = false; // alternate tar between 0 and `tar` in 20-round phases
  int instances_per_template = 4;  // random mode sizing
  double sel_cv = 0.0;      // per-instance selectivity spread
  double zipf_z = 0.0;      // predicate-constant skew
  int zipf_ranks = 100;
  std::uint64_t seed = 1;
  double memory_budget_bytes = 0.0;
  double db_scale = 1.0;
};

void validate(const WorkloadSpec& spec);

struct InstantiateParams {
  double sel_cv = 0.0;
  double zipf_z = 0.0;
  int zipf_ranks = 100;
};

QueryInstance instantiate_template(const QueryTemplate& tpl, Rng& rng,
                                   const InstantiateParams& params = {});

// Transactional sets are composed deterministically: of 25 instances, the
// first two kinds contribute 11 each and the remaining three 1 each (44/44/4/
// 4/4 percent exactly).
constexpr int kTransactionalSetSize = 25;
constexpr int kTransactionalKindCounts[5] = {11, 11, 1, 1, 1};

struct GeneratedWorkload {
  std::vector<std::vector<QueryInstance>> rounds;
  // Random mode: fraction of this round's distinct templates already present
  // in the previous round (empty first entry convention: index 0 is 0).
  std::vector<double> repeat_fraction;
  // HTAP mode: effective tar per round.
  std::vector<int> tar_by_round;
};

GeneratedWorkload gen_workload(const WorkloadSpec& spec);

// Desk-scale synthetic spec: a six-table schema scaled by db_scale and a
// seeded pool of select templates (plus the five transactional kinds).
WorkloadSpec make_synthetic_spec(WorkloadSpec::Mode mode, int pool_size, std::int64_t rounds,
                                 std::uint64_t seed, double db_scale = 1.0);

}  // namespace ixbandit
