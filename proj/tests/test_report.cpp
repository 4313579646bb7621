#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "ixbandit/report.hpp"
#include "ixbandit/rng.hpp"

using namespace ixbandit;

namespace {

Schema ten_column_schema() {
  Schema schema;
  Table t;
  t.name = "t";
  t.row_count = 1000000;
  t.row_width_bytes = 88;
  for (int c = 0; c < 10; ++c) {
    Column col;
    col.name = "c" + std::to_string(c);
    col.width_bytes = 8;
    col.distinct_values = 1000;
    t.columns.push_back(col);
  }
  schema.tables.push_back(std::move(t));
  return schema;
}

// Static micro-workload: one single-predicate select template per entry of
// `sels`, on consecutive columns of the one big table.
ExperimentSetup micro_setup(const std::vector<double>& sels, std::int64_t rounds,
                            double budget_bytes) {
  ExperimentSetup setup;
  setup.workload.mode = WorkloadSpec::Mode::static_mode;
  setup.workload.schema = ten_column_schema();
  setup.workload.rounds = rounds;
  setup.workload.memory_budget_bytes = budget_bytes;
  for (std::size_t i = 0; i < sels.size(); ++i) {
    QueryTemplate tpl;
    tpl.template_id = i + 1;
    tpl.kind = QueryKind::select;
    tpl.predicates.push_back({static_cast<std::uint32_t>(i), sels[i]});
    setup.workload.analytical.push_back(tpl);
  }
  setup.cost.noise_cv = 0.0;
  return setup;
}

std::uint64_t single_key_arm(std::uint32_t column) { return arm_identity(0, {column}, {}); }

// Column-by-column sums of a rounds CSV, accumulated in file order exactly
// like a consumer would.
struct CsvSums {
  double rec = 0.0, cre = 0.0, exc = 0.0, total = 0.0;
  int rows = 0;
};

CsvSums sum_csv(const std::string& csv) {
  CsvSums sums;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::istringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    REQUIRE(fields.size() == 8);
    sums.rec += std::strtod(fields[1].c_str(), nullptr);
    sums.cre += std::strtod(fields[2].c_str(), nullptr);
    sums.exc += std::strtod(fields[3].c_str(), nullptr);
    sums.total += std::strtod(fields[4].c_str(), nullptr);
    ++sums.rows;
  }
  return sums;
}

}  // namespace

TEST_CASE("a lone beneficial candidate is the optimum") {
  const auto setup = micro_setup({0.001}, 2, 1e8);
  const auto best = brute_force_optimal(setup, 7);
  REQUIRE(best.config.size() == 1);
  CHECK(best.config[0].arm_id == single_key_arm(0));
  CHECK(best.replay.rounds.size() == 2);
  CHECK(best.replay.rounds[0].c_cre_s > 0.0);
  // The payload-free point template makes the arm covering: 0.01 seek plus
  // 0.001 * 1e6 matched entries at 16 B / 1e8 B/s = 0.01016 s per round.
  CHECK(best.total_exc_s == doctest::Approx(0.02032).epsilon(1e-9));
}

TEST_CASE("a budget below every candidate yields the empty optimum") {
  const auto setup = micro_setup({0.001, 0.01}, 2, 1e6);
  const auto best = brute_force_optimal(setup, 7);
  CHECK(best.config.empty());
  // Two bare scans of 88e6 bytes per round: 2 * 2 * 0.88 s.
  CHECK(best.total_exc_s == doctest::Approx(3.52).epsilon(1e-9));
}

TEST_CASE("the three-candidate optimum matches hand enumeration") {
  // Arms cost 1.92e7 planning bytes each; the 4e7 budget admits any two.
  // Each arm covers its payload-free point template, so serving costs are
  // 0.01 + sel * 1e6 * 16 B / 1e8 B/s: 0.01016 (sel 0.001), 0.0116 (0.01),
  // 0.074 (0.4); a bare scan is 0.88. Enumerating all 8 subsets, the
  // feasible minimum is {arm0, arm1}:
  // (0.01016 + 0.0116 + 0.88) * 2 rounds = 1.80352 s.
  const auto setup = micro_setup({0.001, 0.01, 0.4}, 2, 4e7);
  const auto best = brute_force_optimal(setup, 7);

  REQUIRE(best.config.size() == 2);
  const std::set<std::uint64_t> want = {single_key_arm(0), single_key_arm(1)};
  std::set<std::uint64_t> got;
  for (const auto& arm : best.config) got.insert(arm.arm_id);
  CHECK(got == want);
  CHECK(best.total_exc_s == doctest::Approx(1.80352).epsilon(1e-9));

  // Cross-check two other subsets against the replay directly.
  ExperimentSetup quiet = setup;
  IndexCandidate a0, a2;
  a0.table = 0;
  a0.key_columns = {0};
  a0.arm_id = single_key_arm(0);
  a0.est_size_bytes = estimate_index_size(setup.workload.schema, 0, {0}, {});
  a2.table = 0;
  a2.key_columns = {2};
  a2.arm_id = single_key_arm(2);
  a2.est_size_bytes = estimate_index_size(setup.workload.schema, 0, {2}, {});
  // {arm0}: (0.01016 + 0.88 + 0.88) * 2; adding arm2 turns the third access
  // into its 0.074 s covering path.
  CHECK(run_fixed(quiet, {a0}, 7).total_exc_s == doctest::Approx(3.54032).epsilon(1e-9));
  CHECK(run_fixed(quiet, {a0, a2}, 7).total_exc_s == doctest::Approx(1.92832).epsilon(1e-9));
}

TEST_CASE("oversized arm universes are refused") {
  // Three predicates + permutations per template blow past 20 quickly.
  ExperimentSetup setup;
  setup.workload = make_synthetic_spec(WorkloadSpec::Mode::static_mode, 12, 2, 3);
  setup.workload.memory_budget_bytes = 1e8;
  CHECK_THROWS_AS(brute_force_optimal(setup, 1), std::invalid_argument);
}

TEST_CASE("alpha regret series follow the definition") {
  const std::vector<double> oracle = {2.0, 2.0, 4.0};
  const std::vector<double> agent = {1.0, 3.0, 1.0};

  const auto self = compute_alpha_regret(oracle, oracle, 1.0);
  for (double r : self.per_round) CHECK(r == 0.0);
  for (double r : self.cumulative) CHECK(r == 0.0);

  const auto zero_alpha = compute_alpha_regret(agent, oracle, 0.0);
  CHECK(zero_alpha.per_round == std::vector<double>{-1.0, -3.0, -1.0});
  CHECK(zero_alpha.cumulative == std::vector<double>{-1.0, -4.0, -5.0});

  const auto half = compute_alpha_regret(agent, oracle, 0.5);
  CHECK(half.per_round == std::vector<double>{0.0, -2.0, 1.0});
  CHECK(half.cumulative == std::vector<double>{0.0, -2.0, -1.0});

  CHECK_THROWS_AS(compute_alpha_regret({1.0}, {1.0, 2.0}, 1.0), std::invalid_argument);
}

TEST_CASE("format_double round-trips every value bit for bit") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    double v;
    switch (i % 4) {
      case 0: v = rng.uniform01(); break;
      case 1: v = rng.uniform01() * 1e12; break;
      case 2: v = rng.uniform01() * 1e-9; break;
      default: v = static_cast<double>(rng.below(1000)); break;
    }
    const auto s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(0.0) == "0");
}

TEST_CASE("csv column sums reproduce the run totals exactly") {
  const auto setup = micro_setup({0.001, 0.01, 0.05, 0.1}, 10, 1e8);
  TunerConfig config;
  config.memory_budget_bytes = 1e8;
  const auto result = run_tuned(setup, config, 5);

  const auto csv = rounds_csv(result.rounds, "mab");
  const auto sums = sum_csv(csv);
  CHECK(sums.rows == 10);
  CHECK(sums.rec == result.total_rec_s);
  CHECK(sums.cre == result.total_cre_s);
  CHECK(sums.exc == result.total_exc_s);

  double total_fold = 0.0;
  for (const auto& rec : result.rounds) total_fold += rec.c_total_s();
  CHECK(sums.total == total_fold);

  CHECK(csv.rfind("round,c_rec_s,c_cre_s,c_exc_s,c_total_s,config_size,memory_bytes,agent\n",
                  0) == 0);
}

TEST_CASE("a no-index run reports zero creation in every csv row") {
  const auto setup = micro_setup({0.001, 0.01}, 5, 1e8);
  const auto result = run_fixed(setup, {}, 3);
  const auto csv = rounds_csv(result.rounds, "noindex");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string f;
    std::vector<std::string> fields;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    CHECK(fields[2] == "0");
    CHECK(fields[7] == "noindex");
  }
}

TEST_CASE("aggregate csv averages rounds across seeds") {
  const auto setup = micro_setup({0.001, 0.01}, 4, 1e8);
  TunerConfig config;
  config.memory_budget_bytes = 1e8;
  const std::vector<ExperimentResult> runs = {run_tuned(setup, config, 1),
                                              run_tuned(setup, config, 2)};
  const auto csv = aggregate_csv(runs, "mab");
  std::istringstream in(csv);
  std::string header, first;
  std::getline(in, header);
  CHECK(header ==
        "round,c_rec_s_mean,c_cre_s_mean,c_exc_s_mean,c_total_s_mean,"
        "c_total_s_p25,c_total_s_p75,config_size_mean,memory_bytes_mean,agent");
  std::getline(in, first);
  std::vector<std::string> fields;
  std::istringstream ls(first);
  std::string f;
  while (std::getline(ls, f, ',')) fields.push_back(f);
  REQUIRE(fields.size() == 10);
  const double want_exc =
      0.5 * (runs[0].rounds[0].c_exc_s + runs[1].rounds[0].c_exc_s);
  CHECK(std::strtod(fields[3].c_str(), nullptr) == doctest::Approx(want_exc));

  const std::vector<ExperimentResult> uneven = {runs[0], run_tuned(
      micro_setup({0.001, 0.01}, 3, 1e8), config, 1)};
  CHECK_THROWS_AS(aggregate_csv(uneven, "mab"), std::invalid_argument);
}

TEST_CASE("the summary table lists one cost row per agent") {
  const auto text = summary_table({{"mab", 3, 0.01, 4.5, 810.0, 814.51},
                                   {"noindex", 3, 0.0, 0.0, 1200.0, 1200.0}});
  CHECK(text.find("agent") == 0);
  CHECK(text.find("mab") != std::string::npos);
  CHECK(text.find("noindex") != std::string::npos);
  CHECK(text.find("814.51") != std::string::npos);
}
