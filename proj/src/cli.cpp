#include "ixbandit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "ixbandit/report.hpp"

namespace ixbandit {
namespace {

using nlohmann::json;

struct CliConfig {
  ExperimentSetup setup;
  TunerConfig tuner;
  json echo;  // resolved knobs, embedded in report.json
};

WorkloadSpec::Mode parse_mode(const std::string& s) {
  if (s == "static") return WorkloadSpec::Mode::static_mode;
  if (s == "shifting") return WorkloadSpec::Mode::shifting;
  if (s == "random") return WorkloadSpec::Mode::random_mode;
  if (s == "htap") return WorkloadSpec::Mode::htap;
  throw std::invalid_argument("config: unknown mode '" + s + "'");
}

// Strict key handling: a typo should fail the run, not silently fall back to
// a default.
void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!known.count(key))
      throw std::invalid_argument("config: unknown key '" + key + "' in " + where);
}

template <typename T>
void maybe(const json& obj, const char* key, T& into) {
  if (obj.contains(key)) into = obj.at(key).get<T>();
}

CliConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: parse failure: ") + e.what());
  }

  reject_unknown_keys(root,
                      {"mode", "rounds", "pool_size", "seed", "round_size", "db_scale",
                       "memory_budget_bytes", "tar", "dynamic_tar", "shift_groups",
                       "shift_phase", "instances_per_template", "sel_cv", "zipf_z",
                       "zipf_ranks", "cost", "hyper", "tuner", "poison"},
                      "top level");

  std::string mode = "static";
  std::int64_t rounds = 25;
  int pool_size = 10;
  std::uint64_t seed = 1;
  double db_scale = 1.0;
  maybe(root, "mode", mode);
  maybe(root, "rounds", rounds);
  maybe(root, "pool_size", pool_size);
  maybe(root, "seed", seed);
  maybe(root, "db_scale", db_scale);
  if (pool_size < 1) throw std::invalid_argument("config: pool_size below one");
  if (rounds < 1) throw std::invalid_argument("config: rounds below one");

  CliConfig cfg;
  cfg.setup.workload = make_synthetic_spec(parse_mode(mode), pool_size, rounds, seed, db_scale);
  auto& wl = cfg.setup.workload;
  maybe(root, "round_size", wl.round_size);
  maybe(root, "memory_budget_bytes", wl.memory_budget_bytes);
  maybe(root, "tar", wl.tar);
  maybe(root, "dynamic_tar", wl.dynamic_tar);
  maybe(root, "shift_groups", wl.shift_groups);
  maybe(root, "shift_phase", wl.shift_phase);
  maybe(root, "instances_per_template", wl.instances_per_template);
  maybe(root, "sel_cv", wl.sel_cv);
  maybe(root, "zipf_z", wl.zipf_z);
  maybe(root, "zipf_ranks", wl.zipf_ranks);

  auto& cost = cfg.setup.cost;
  if (root.contains("cost")) {
    const auto& c = root.at("cost");
    reject_unknown_keys(c,
                        {"scan_bytes_per_sec", "seek_base_sec", "lookup_penalty_per_row_sec",
                         "build_bytes_per_sec", "maint_row_update_sec", "maint_index_update_sec",
                         "noise_cv", "misestimate_prob", "itemise_rows_threshold"},
                        "cost");
    maybe(c, "scan_bytes_per_sec", cost.scan_bytes_per_sec);
    maybe(c, "seek_base_sec", cost.seek_base_sec);
    maybe(c, "lookup_penalty_per_row_sec", cost.lookup_penalty_per_row_sec);
    maybe(c, "build_bytes_per_sec", cost.build_bytes_per_sec);
    maybe(c, "maint_row_update_sec", cost.maint_row_update_sec);
    maybe(c, "maint_index_update_sec", cost.maint_index_update_sec);
    maybe(c, "noise_cv", cost.noise_cv);
    maybe(c, "misestimate_prob", cost.misestimate_prob);
    maybe(c, "itemise_rows_threshold", cost.itemise_rows_threshold);
  }
  validate(cost);

  auto& hyper = cfg.tuner.hyper;
  if (root.contains("hyper")) {
    const auto& h = root.at("hyper");
    reject_unknown_keys(
        h, {"lambda", "delta", "s_bound", "r_subg", "alpha_override", "forget_factor"},
        "hyper");
    maybe(h, "lambda", hyper.lambda);
    maybe(h, "delta", hyper.delta);
    maybe(h, "s_bound", hyper.s_bound);
    maybe(h, "r_subg", hyper.r_subg);
    maybe(h, "forget_factor", hyper.forget_factor);
    if (h.contains("alpha_override") && !h.at("alpha_override").is_null())
      hyper.alpha_override = h.at("alpha_override").get<double>();
  }

  if (root.contains("tuner")) {
    const auto& t = root.at("tuner");
    reject_unknown_keys(t,
                        {"qoi_window", "scan_window", "usage_window", "max_key_width",
                         "per_template_cap", "shift_threshold"},
                        "tuner");
    maybe(t, "qoi_window", cfg.tuner.qoi_window);
    maybe(t, "scan_window", cfg.tuner.scan_window);
    maybe(t, "usage_window", cfg.tuner.usage_window);
    maybe(t, "max_key_width", cfg.tuner.max_key_width);
    maybe(t, "per_template_cap", cfg.tuner.per_template_cap);
    maybe(t, "shift_threshold", cfg.tuner.shift_threshold);
  }
  cfg.tuner.memory_budget_bytes = wl.memory_budget_bytes;

  if (root.contains("poison")) {
    const auto& p = root.at("poison");
    reject_unknown_keys(p, {"table", "key_columns", "include_columns", "prob"}, "poison");
    const auto table = p.at("table").get<std::uint32_t>();
    if (table >= wl.schema.tables.size())
      throw std::invalid_argument("config: poison table out of range");
    std::vector<std::uint32_t> keys;
    for (const auto& ord : p.at("key_columns"))
      keys.push_back(global_column_id(wl.schema, table, ord.get<std::uint32_t>()));
    std::set<std::uint32_t> includes;
    if (p.contains("include_columns"))
      for (const auto& ord : p.at("include_columns"))
        includes.insert(global_column_id(wl.schema, table, ord.get<std::uint32_t>()));
    PoisonSpec poison;
    poison.arm_id = arm_identity(table, keys, includes);
    poison.prob = p.at("prob").get<double>();
    if (!(poison.prob >= 0.0 && poison.prob <= 1.0))
      throw std::invalid_argument("config: poison prob outside [0, 1]");
    cfg.setup.poison = poison;
  }

  validate(cfg.setup.workload);
  cfg.tuner.hyper.n_f = 1;  // structured flag fixes this later
  validate(cfg.tuner);

  cfg.echo = {{"mode", mode},
              {"rounds", rounds},
              {"pool_size", pool_size},
              {"seed", seed},
              {"db_scale", db_scale},
              {"round_size", wl.round_size},
              {"memory_budget_bytes", wl.memory_budget_bytes},
              {"tar", wl.tar},
              {"dynamic_tar", wl.dynamic_tar},
              {"shift_groups", wl.shift_groups},
              {"shift_phase", wl.shift_phase},
              {"instances_per_template", wl.instances_per_template},
              {"sel_cv", wl.sel_cv},
              {"zipf_z", wl.zipf_z},
              {"zipf_ranks", wl.zipf_ranks},
              {"cost",
               {{"scan_bytes_per_sec", cost.scan_bytes_per_sec},
                {"seek_base_sec", cost.seek_base_sec},
                {"lookup_penalty_per_row_sec", cost.lookup_penalty_per_row_sec},
                {"build_bytes_per_sec", cost.build_bytes_per_sec},
                {"maint_row_update_sec", cost.maint_row_update_sec},
                {"maint_index_update_sec", cost.maint_index_update_sec},
                {"noise_cv", cost.noise_cv},
                {"misestimate_prob", cost.misestimate_prob},
                {"itemise_rows_threshold", cost.itemise_rows_threshold}}},
              {"hyper",
               {{"lambda", hyper.lambda},
                {"delta", hyper.delta},
                {"s_bound", hyper.s_bound},
                {"r_subg", hyper.r_subg},
                {"alpha_override",
                 hyper.alpha_override ? json(*hyper.alpha_override) : json(nullptr)},
                {"forget_factor", hyper.forget_factor}}},
              {"tuner",
               {{"qoi_window", cfg.tuner.qoi_window},
                {"scan_window", cfg.tuner.scan_window},
                {"usage_window", cfg.tuner.usage_window},
                {"max_key_width", cfg.tuner.max_key_width},
                {"per_template_cap", cfg.tuner.per_template_cap},
                {"shift_threshold", cfg.tuner.shift_threshold}}}};
  if (cfg.setup.poison)
    cfg.echo["poison"] = {{"arm_id", cfg.setup.poison->arm_id},
                          {"prob", cfg.setup.poison->prob}};
  return cfg;
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(csv);
  std::string token;
  while (std::getline(ss, token, ',')) {
    if (token.empty()) throw std::invalid_argument("seeds: empty entry");
    std::size_t used = 0;
    const auto value = std::stoull(token, &used);
    if (used != token.size()) throw std::invalid_argument("seeds: bad entry '" + token + "'");
    seeds.push_back(value);
  }
  if (seeds.empty()) throw std::invalid_argument("seeds: none given");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw std::invalid_argument("seeds: duplicates given");
  return seeds;
}

json round_to_json(const RoundRecord& rec) {
  json rewards = json::object();
  for (const auto& [id, r] : rec.rewards) rewards[std::to_string(id)] = r;
  return {{"round", rec.round},
          {"c_rec_s", rec.c_rec_s},
          {"c_rec_wall_s", rec.c_rec_wall_s},
          {"c_cre_s", rec.c_cre_s},
          {"c_exc_s", rec.c_exc_s},
          {"c_total_s", rec.c_total_s()},
          {"config", json(rec.config)},
          {"config_size", rec.config.size()},
          {"memory_bytes", rec.memory_bytes},
          {"baseline_total_s", rec.baseline_total_s},
          {"gain_total_s", rec.gain_total_s},
          {"dropped_gain_s", rec.dropped_gain_s},
          {"shift_intensity", rec.shift_intensity},
          {"forgot", rec.forgot},
          {"n_qoi", rec.n_qoi},
          {"n_candidates", rec.n_candidates},
          {"rewards", rewards}};
}

double fold_total(const ExperimentResult& run) {
  double total = 0.0;
  for (const auto& rec : run.rounds) total += rec.c_total_s();
  return total;
}

// Replays an agent run's per-round configurations on a fresh environment,
// usually a noise-free one, so decision quality can be scored apart from the
// noise the agent happened to face.
ExperimentResult replay_sequence(const ExperimentSetup& setup, const ExperimentResult& agent_run,
                                 std::uint64_t run_seed) {
  const auto workload = gen_workload(setup.workload);
  DbState db;
  db.schema = setup.workload.schema;
  db.cost = setup.cost;
  db.poison = setup.poison;

  ExperimentResult out;
  for (std::size_t r = 0; r < workload.rounds.size(); ++r) {
    const auto& agent_rec = agent_run.rounds.at(r);
    db.rng_seed = round_env_seed(run_seed, static_cast<std::int64_t>(r + 1));
    RoundRecord rec;
    rec.round = agent_rec.round;
    std::vector<IndexCandidate> want;
    for (const std::uint64_t id : agent_rec.config) want.push_back(agent_run.registry.at(id));
    for (const auto& [id, t] : materialise(db, want)) rec.c_cre_s += t;
    rec.c_exc_s = execute(db, workload.rounds[r]).total_execution_sec();
    rec.config = agent_rec.config;
    rec.memory_bytes = materialised_bytes(db);
    out.rounds.push_back(rec);
    out.total_cre_s += rec.c_cre_s;
    out.total_exc_s += rec.c_exc_s;
  }
  return out;
}

// Per-round net reward of a replay: time saved over the bare baseline, less
// what this round spent building.
std::vector<double> replay_rewards(const ExperimentResult& bare, const ExperimentResult& run) {
  std::vector<double> rewards;
  rewards.reserve(run.rounds.size());
  for (std::size_t t = 0; t < run.rounds.size(); ++t)
    rewards.push_back(bare.rounds[t].c_exc_s - run.rounds[t].c_exc_s - run.rounds[t].c_cre_s);
  return rewards;
}

json totals_block(const std::vector<ExperimentResult>& runs, const std::vector<std::uint64_t>& seeds) {
  json per_seed = json::array();
  double total = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    per_seed.push_back({{"seed", seeds[i]},
                        {"c_rec_s", runs[i].total_rec_s},
                        {"c_cre_s", runs[i].total_cre_s},
                        {"c_exc_s", runs[i].total_exc_s},
                        {"c_total_s", fold_total(runs[i])}});
    total += fold_total(runs[i]);
  }
  return {{"per_seed", per_seed}, {"c_total_s_mean", total / static_cast<double>(runs.size())}};
}

SummaryRow summarise(const std::string& label, const std::vector<ExperimentResult>& runs) {
  SummaryRow row;
  row.agent = label;
  row.seeds = static_cast<int>(runs.size());
  double total = 0.0;
  for (const auto& run : runs) {
    row.c_rec_s += run.total_rec_s;
    row.c_cre_s += run.total_cre_s;
    row.c_exc_s += run.total_exc_s;
    total += fold_total(run);
  }
  const double n = static_cast<double>(runs.size());
  row.c_rec_s /= n;
  row.c_cre_s /= n;
  row.c_exc_s /= n;
  row.c_total_s = total / n;
  return row;
}

json run_to_json(std::uint64_t seed, const ExperimentResult& run) {
  json rounds = json::array();
  for (const auto& rec : run.rounds) rounds.push_back(round_to_json(rec));
  return {{"seed", seed},
          {"totals",
           {{"c_rec_s", run.total_rec_s},
            {"c_cre_s", run.total_cre_s},
            {"c_exc_s", run.total_exc_s},
            {"c_total_s", fold_total(run)}}},
          {"final_config", json(run.final_config)},
          {"final_memory_bytes", run.final_memory_bytes},
          {"forget_count", run.forget_count},
          {"rounds", rounds}};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

// In-process re-verification used by --assert-invariants.
void check_invariants(const std::vector<ExperimentResult>& runs, double budget,
                      const std::string& agent) {
  for (const auto& run : runs) {
    double rec = 0.0, cre = 0.0, exc = 0.0;
    for (const auto& r : run.rounds) {
      if (r.memory_bytes > budget * (1.0 + 1e-12) && budget > 0.0)
        throw std::logic_error("invariant: memory above budget in round " +
                               std::to_string(r.round));
      if (agent == "noindex" && r.c_cre_s != 0.0)
        throw std::logic_error("invariant: no-index run reports creation time");
      for (const auto& [id, reward] : r.rewards)
        if (!std::isfinite(reward))
          throw std::logic_error("invariant: non-finite reward for arm " + std::to_string(id));
      rec += r.c_rec_s;
      cre += r.c_cre_s;
      exc += r.c_exc_s;
    }
    if (rec != run.total_rec_s || cre != run.total_cre_s || exc != run.total_exc_s)
      throw std::logic_error("invariant: totals do not equal the sum of rounds");
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Online index selection experiments"};
  std::string config_path, out_dir;
  std::string agent = "mab";
  std::string seeds_csv = "1";
  bool structured = false;
  bool assert_invariants = false;
  app.add_option("--config", config_path, "JSON experiment config")->required();
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--agent", agent, "mab | noindex | bruteforce")
      ->check(CLI::IsMember({"mab", "noindex", "bruteforce"}));
  app.add_option("--structured", structured, "two-piece reward observations (mab only)");
  app.add_option("--seeds", seeds_csv, "comma-separated run seeds");
  app.add_flag("--assert-invariants", assert_invariants, "re-verify runtime invariants");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  CliConfig cfg;
  std::vector<std::uint64_t> seeds;
  try {
    cfg = load_config(config_path);
    seeds = parse_seeds(seeds_csv);
    cfg.tuner.structured = structured;
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path out(out_dir);

    std::vector<ExperimentResult> runs;
    json bruteforce_config = json(nullptr);
    for (const std::uint64_t seed : seeds) {
      ExperimentResult run;
      if (agent == "mab") {
        run = run_tuned(cfg.setup, cfg.tuner, seed);
      } else if (agent == "noindex") {
        run = run_fixed(cfg.setup, {}, seed);
      } else {
        const auto best = brute_force_optimal(cfg.setup, seed);
        // Replay the hindsight-optimal configuration under the configured
        // (possibly noisy) environment so agents stay comparable.
        run = run_fixed(cfg.setup, best.config, seed);
        json ids = json::array();
        for (const auto& arm : best.config) ids.push_back(arm.arm_id);
        bruteforce_config = ids;
      }
      runs.push_back(std::move(run));
    }

    json report;
    report["agent"] = agent;
    report["structured"] = structured;
    report["seeds_requested"] = seeds;
    report["config"] = cfg.echo;
    if (!bruteforce_config.is_null()) report["bruteforce_config"] = bruteforce_config;
    json seed_blocks = json::array();
    for (std::size_t i = 0; i < runs.size(); ++i)
      seed_blocks.push_back(run_to_json(seeds[i], runs[i]));
    report["runs"] = seed_blocks;

    {
      std::vector<double> totals;
      for (const auto& run : runs) totals.push_back(fold_total(run));
      std::sort(totals.begin(), totals.end());
      const SummaryRow agg = summarise(agent, runs);
      report["aggregate"] = {{"c_rec_s_mean", agg.c_rec_s},
                             {"c_cre_s_mean", agg.c_cre_s},
                             {"c_exc_s_mean", agg.c_exc_s},
                             {"c_total_s_mean", agg.c_total_s},
                             {"c_total_s_min", totals.front()},
                             {"c_total_s_max", totals.back()}};
    }

    std::vector<SummaryRow> summary_rows = {summarise(agent, runs)};

    // For the learned agent, the report carries the comparison baselines run
    // in the same environment, plus regret against the fixed-optimal
    // hindsight policy when the arm universe is small enough to enumerate.
    report["baselines"] = json(nullptr);
    report["regret"] = json(nullptr);
    if (agent == "mab") {
      std::vector<ExperimentResult> bare_runs;
      for (const std::uint64_t seed : seeds) bare_runs.push_back(run_fixed(cfg.setup, {}, seed));

      bool feasible = true;
      std::vector<IndexCandidate> oracle_config;
      try {
        oracle_config = brute_force_optimal(cfg.setup, seeds.front()).config;
      } catch (const std::invalid_argument&) {
        feasible = false;
      }

      report["baselines"] = {{"noindex", totals_block(bare_runs, seeds)}};
      summary_rows.push_back(summarise("noindex", bare_runs));

      if (feasible) {
        std::vector<ExperimentResult> oracle_runs;
        for (const std::uint64_t seed : seeds)
          oracle_runs.push_back(run_fixed(cfg.setup, oracle_config, seed));
        json ids = json::array();
        for (const auto& arm : oracle_config) ids.push_back(arm.arm_id);
        report["baselines"]["bruteforce"] = totals_block(oracle_runs, seeds);
        report["baselines"]["bruteforce"]["config"] = ids;
        summary_rows.push_back(summarise("bruteforce", oracle_runs));

        // Regret compares decisions, not luck: every policy's chosen
        // configurations are re-scored on a noise-free copy of the
        // environment over the identical instance stream.
        ExperimentSetup quiet = cfg.setup;
        quiet.cost.noise_cv = 0.0;
        quiet.cost.misestimate_prob = 0.0;
        quiet.poison.reset();
        const auto bare_q = run_fixed(quiet, {}, seeds.front());
        const auto oracle_q = run_fixed(quiet, oracle_config, seeds.front());
        const auto oracle_rewards = replay_rewards(bare_q, oracle_q);
        json per_seed = json::array();
        for (std::size_t i = 0; i < runs.size(); ++i) {
          const auto agent_q = replay_sequence(quiet, runs[i], seeds[i]);
          const auto series = compute_alpha_regret(replay_rewards(bare_q, agent_q), oracle_rewards);
          per_seed.push_back({{"seed", seeds[i]},
                              {"cumulative_final", series.cumulative.back()},
                              {"per_round", series.per_round},
                              {"cumulative", series.cumulative}});
        }
        report["regret"] = {{"alpha", kGreedyAlpha}, {"per_seed", per_seed}};
      }
    }

    for (std::size_t i = 0; i < runs.size(); ++i)
      write_file(out / ("rounds_" + agent + "_seed" + std::to_string(seeds[i]) + ".csv"),
                 rounds_csv(runs[i].rounds, agent));
    write_file(out / ("aggregate_" + agent + ".csv"), aggregate_csv(runs, agent));

    const auto table = summary_table(summary_rows);
    write_file(out / "summary.txt", table);
    std::cout << table;

    write_file(out / "report.json", report.dump(2) + "\n");

    if (assert_invariants)
      check_invariants(runs, cfg.setup.workload.memory_budget_bytes, agent);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "invariant violation: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace ixbandit
