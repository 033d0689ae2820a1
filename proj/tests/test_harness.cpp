#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqlab/commands.hpp"
#include "dqlab/config.hpp"
#include "dqlab/harness.hpp"
#include "dqlab/hash.hpp"

using namespace dqlab;
namespace fs = std::filesystem;

namespace {

MetricsRow make_row(const std::string& method, std::uint64_t seed, int phase, int episode,
                    double ret, double len) {
  MetricsRow r;
  r.method = method;
  r.seed = seed;
  r.phase = phase;
  r.episode = episode;
  r.mean_return = ret;
  r.mean_length = len;
  r.crash_rate = 0.25;
  r.fixed_state_mean_q = 0.5;
  r.epsilon = 0.1;
  r.wall_clock_ms = 1234;
  return r;
}

// Shrunk protocol that still runs both phases for all three methods.
ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.seeds = {1, 2, 3};
  cfg.phase1_episodes = 300;
  cfg.phase2_episodes = 40;
  cfg.eval_every = 20;
  cfg.eval_episodes = 20;
  cfg.fixed_eval_states = 20;
  cfg.replay_capacity = 500;
  cfg.seed_fill = 300;
  cfg.tabular_draws = 2;
  cfg.save_snapshots = false;
  cfg.audit_safe_actions = true;
  cfg.validate();
  return cfg;
}

}  // namespace

TEST_CASE("metrics rows round trip through csv text") {
  std::vector<MetricsRow> rows;
  rows.push_back(make_row("naive", 1, 1, 0, 0.125, 17.5));
  rows.push_back(make_row("naive", 1, 2, 100, -0.5, 3.0));
  rows.push_back(make_row("decoupled", 2, 2, 100, 1.0 / 3.0, 42.123456789));

  const std::string csv = format_csv(rows);
  CHECK(csv.substr(0, std::string(kCsvHeader).size()) == kCsvHeader);

  const std::vector<MetricsRow> back = parse_metrics_csv(csv);
  REQUIRE(back.size() == rows.size());
  CHECK(back[0].method == "naive");
  CHECK(back[0].mean_return == doctest::Approx(0.125).epsilon(1e-9));
  CHECK(back[2].mean_length == doctest::Approx(42.123456789).epsilon(1e-9));
  CHECK(back[2].wall_clock_ms == 1234);
  CHECK(metrics_hash(back) == metrics_hash(rows));
}

TEST_CASE("malformed csv input is rejected with its line number") {
  CHECK_THROWS_AS(parse_metrics_csv(""), ConfigError);
  CHECK_THROWS_AS(parse_metrics_csv("method,seed\n"), ConfigError);

  const std::string header(kCsvHeader);
  CHECK_THROWS_AS(parse_metrics_csv(header + "\nnaive,1,1,0\n"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_metrics_csv(header + "\nnaive,1,1,0,abc,2,0.1,0.2,0.1,5\n"),
      "CSV line 2: mean_return is not a number: 'abc'", ConfigError);
}

TEST_CASE("wall-clock column is dropped for comparisons but nothing else") {
  std::vector<MetricsRow> a{make_row("naive", 1, 2, 0, 0.5, 10.0)};
  std::vector<MetricsRow> b = a;
  b[0].wall_clock_ms = 999999;
  CHECK(format_csv(a) != format_csv(b));
  CHECK(csv_without_wall_clock(format_csv(a)) == csv_without_wall_clock(format_csv(b)));
  CHECK(metrics_hash(a) == metrics_hash(b));

  b[0].mean_return += 1e-6;
  CHECK(metrics_hash(a) != metrics_hash(b));

  // The stripped header loses exactly the wall_clock_ms column.
  const std::string stripped = csv_without_wall_clock(format_csv(a));
  CHECK(stripped.find("wall_clock_ms") == std::string::npos);
  CHECK(stripped.find("epsilon") != std::string::npos);
}

TEST_CASE("rows sort by method, seed, phase and episode") {
  std::vector<MetricsRow> rows;
  rows.push_back(make_row("transfer", 2, 1, 0, 0, 0));
  rows.push_back(make_row("naive", 1, 2, 100, 0, 0));
  rows.push_back(make_row("naive", 1, 1, 100, 0, 0));
  rows.push_back(make_row("naive", 1, 1, 0, 0, 0));
  rows.push_back(make_row("decoupled", 9, 2, 0, 0, 0));
  sort_rows(rows);
  CHECK(rows[0].method == "decoupled");
  CHECK(rows[1].method == "naive");
  CHECK(rows[1].phase == 1);
  CHECK(rows[1].episode == 0);
  CHECK(rows[2].episode == 100);
  CHECK(rows[3].phase == 2);
  CHECK(rows[4].method == "transfer");
}

TEST_CASE("seed aggregation computes pointwise means and sample deviations") {
  std::vector<MetricsRow> rows;
  rows.push_back(make_row("naive", 1, 2, 0, 1.0, 10.0));
  rows.push_back(make_row("naive", 2, 2, 0, 3.0, 20.0));
  rows.push_back(make_row("naive", 1, 2, 50, 5.0, 8.0));
  rows.push_back(make_row("naive", 2, 2, 50, 5.0, 12.0));

  const std::vector<AggregatePoint> agg = aggregate_seeds(rows);
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].episode == 0);
  CHECK(agg[0].n_seeds == 2);
  CHECK(agg[0].return_mean == doctest::Approx(2.0));
  CHECK(agg[0].return_sd == doctest::Approx(std::sqrt(2.0)));
  CHECK(agg[0].length_mean == doctest::Approx(15.0));
  CHECK(agg[1].return_mean == doctest::Approx(5.0));
  CHECK(agg[1].return_sd == doctest::Approx(0.0));

  rows.push_back(make_row("naive", 3, 2, 0, 2.0, 9.0));  // seed 3 misses episode 50
  CHECK_THROWS_AS(aggregate_seeds(rows), UsageError);
}

TEST_CASE("paired t statistic matches the hand computation and flags degenerate input") {
  const std::vector<double> a{1.0, 2.0, 3.0};
  const std::vector<double> b{0.0, 0.0, 0.0};
  CHECK(paired_t_statistic(a, b) == doctest::Approx(2.0 * std::sqrt(3.0)));
  CHECK(paired_t_statistic(b, a) == doctest::Approx(-2.0 * std::sqrt(3.0)));
  CHECK(paired_t_statistic(a, a) == 0.0);

  const std::vector<double> shifted{2.0, 3.0, 4.0};
  CHECK(paired_t_statistic(shifted, a) == std::numeric_limits<double>::infinity());

  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(paired_t_statistic(one, one), UsageError);
  CHECK_THROWS_AS(paired_t_statistic(a, one), UsageError);
}

TEST_CASE("evaluation points cover start, cadence and final episode") {
  CHECK(eval_points(500, 100) == std::vector<int>{0, 100, 200, 300, 400, 500});
  CHECK(eval_points(250, 100) == std::vector<int>{0, 100, 200, 250});
  CHECK(eval_points(100, 100) == std::vector<int>{0, 100});
  CHECK(eval_points(0, 100) == std::vector<int>{0});
  CHECK_THROWS_AS(eval_points(100, 0), UsageError);
}

TEST_CASE("fixed evaluation sets are a pure function of the master seed") {
  ExperimentConfig cfg;
  cfg.fixed_eval_states = 25;
  const FixedEvalSet a = make_fixed_eval_set(cfg);
  const FixedEvalSet b = make_fixed_eval_set(cfg);
  CHECK(a.states.size() == 25);
  CHECK(a.content_hash() == b.content_hash());
  for (const GridState& s : a.states) {
    CHECK(s.steps_elapsed == 0);
    CHECK(!s.terminated);
  }

  cfg.master_seed += 1;
  const FixedEvalSet c = make_fixed_eval_set(cfg);
  CHECK(a.content_hash() != c.content_hash());

  cfg.env_type = EnvType::Cliffwalk;
  CHECK_THROWS_AS(make_fixed_eval_set(cfg), ConfigError);
}

TEST_CASE("a small experiment produces the full row grid deterministically") {
  const ExperimentConfig cfg = small_experiment();
  const ExperimentResult res = run_experiment(cfg);

  // 3 methods x 3 seeds x (16 phase-1 points {0,20,...,300} + 3 phase-2
  // points {0,20,40}).
  CHECK(res.rows.size() == 171);
  std::vector<MetricsRow> sorted = res.rows;
  sort_rows(sorted);
  CHECK(metrics_hash(sorted) == metrics_hash(res.rows));

  for (const MetricsRow& r : res.rows) {
    CHECK((r.phase == 1 || r.phase == 2));
    CHECK(r.crash_rate >= 0.0);
    CHECK(r.crash_rate <= 1.0);
    CHECK(r.mean_length > 0.0);
    CHECK(r.mean_length <= cfg.grid.max_steps);
    CHECK(r.epsilon >= 0.0);
    CHECK(r.epsilon <= 1.0);
  }

  // naive and transfer continue the same phase-1 lineage, so their phase-1
  // rows agree entry for entry.
  std::map<std::pair<std::uint64_t, int>, const MetricsRow*> naive_p1;
  for (const MetricsRow& r : res.rows) {
    if (r.method == "naive" && r.phase == 1) naive_p1[{r.seed, r.episode}] = &r;
  }
  int compared = 0;
  for (const MetricsRow& r : res.rows) {
    if (r.method != "transfer" || r.phase != 1) continue;
    const MetricsRow* n = naive_p1.at({r.seed, r.episode});
    CHECK(n->mean_return == r.mean_return);
    CHECK(n->mean_length == r.mean_length);
    CHECK(n->crash_rate == r.crash_rate);
    CHECK(n->fixed_state_mean_q == r.fixed_state_mean_q);
    ++compared;
  }
  CHECK(compared == 48);  // 16 phase-1 points x 3 seeds

  // Rerunning, and rerunning with a thread fan-out, reproduces the metrics.
  const ExperimentResult again = run_experiment(cfg);
  CHECK(metrics_hash(again.rows) == metrics_hash(res.rows));
  const ExperimentResult fanned = run_experiment(cfg, 3);
  CHECK(metrics_hash(fanned.rows) == metrics_hash(res.rows));

  // Frozen survival weights stay untouched through decoupled phase 2.
  REQUIRE(res.per_seed.size() == 3);
  for (const SeedArtifacts& art : res.per_seed) {
    CHECK(art.survival_hash_pre != 0);
    CHECK(art.survival_hash_pre == art.survival_hash_post);
    CHECK(art.audit_explored > 0);
    CHECK(art.audit_violations == 0);
    CHECK(art.audit_log.size() == art.audit_explored);
    REQUIRE(art.seed_buffer_crash_fraction.count("naive") == 1);
    REQUIRE(art.seed_buffer_crash_fraction.count("transfer") == 1);
    REQUIRE(art.seed_buffer_crash_fraction.count("decoupled") == 1);
    for (const auto& [method, frac] : art.seed_buffer_crash_fraction) {
      CHECK(frac >= 0.0);
      CHECK(frac <= 1.0);
    }
  }

  // At the phase-2 start the transferred policy already avoids obstacles,
  // the fresh one does not.
  double naive_crash = 0.0, transfer_crash = 0.0;
  for (const MetricsRow& r : res.rows) {
    if (r.phase != 2 || r.episode != 0) continue;
    if (r.method == "naive") naive_crash += r.crash_rate;
    if (r.method == "transfer") transfer_crash += r.crash_rate;
  }
  CHECK(transfer_crash < naive_crash);
}

TEST_CASE("train command writes a manifest that its check mode reproduces") {
  const fs::path dir = "harness_cmd_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string config_path = (dir / "config.json").string();
  {
    nlohmann::json j;
    j["seeds"] = {1};
    j["schedule"] = {{"phase1_episodes", 60},
                     {"phase2_episodes", 60},
                     {"eval_every", 30},
                     {"eval_episodes", 3},
                     {"fixed_eval_states", 10}};
    j["replay"] = {{"capacity", 400}, {"tabular_draws", 2}, {"seed_fill", 200}};
    j["output"] = {{"save_snapshots", true}, {"dump_replay", true}};
    std::ofstream out(config_path);
    out << j.dump(2);
  }

  TrainOptions opt;
  opt.config_path = config_path;
  opt.out_dir = (dir / "out").string();
  REQUIRE(cmd_train(opt) == 0);

  const fs::path csv_path = dir / "out" / "metrics.csv";
  REQUIRE(fs::exists(csv_path));
  REQUIRE(fs::exists(dir / "out" / "manifest.json"));
  REQUIRE(fs::exists(dir / "out" / "eval_states.bin"));
  CHECK(!fs::is_empty(dir / "out" / "snapshots"));
  CHECK(!fs::is_empty(dir / "out" / "replay"));

  std::ifstream csv_in(csv_path);
  std::string csv((std::istreambuf_iterator<char>(csv_in)), std::istreambuf_iterator<char>());
  const std::vector<MetricsRow> rows = parse_metrics_csv(csv);
  CHECK(rows.size() == 3 * 1 * 6);

  // The stored metrics hash matches a recomputation from the CSV itself.
  std::ifstream man_in(dir / "out" / "manifest.json");
  const nlohmann::json manifest = nlohmann::json::parse(man_in);
  CHECK(manifest.at("metrics_hash").get<std::string>() == hash_hex(metrics_hash(rows)));

  // Check mode re-runs and compares hashes.
  TrainOptions check = opt;
  check.check = true;
  CHECK(cmd_train(check) == 0);

  // A tampered manifest fails the check.
  {
    nlohmann::json bad = manifest;
    bad["metrics_hash"] = "0000000000000000";
    std::ofstream out(dir / "out" / "manifest.json");
    out << bad.dump(2);
  }
  CHECK(cmd_train(check) == 1);

  // Plots render from the written CSV.
  PlotOptions plot;
  plot.csv_path = csv_path.string();
  plot.out_dir = (dir / "plots").string();
  CHECK(cmd_plot(plot) == 0);
  int svg_count = 0;
  for (const auto& entry : fs::directory_iterator(dir / "plots")) {
    if (entry.path().extension() == ".svg") ++svg_count;
  }
  CHECK(svg_count == 4);

  // A replay dump written by the run is inspectable.
  std::string replay_file;
  for (const auto& entry : fs::directory_iterator(dir / "out" / "replay")) {
    replay_file = entry.path().string();
    break;
  }
  REQUIRE(!replay_file.empty());
  CHECK(cmd_inspect_replay({replay_file}) == 0);

  fs::remove_all(dir);
}

TEST_CASE("commands report usage problems with exit code 2") {
  TrainOptions missing_cfg;
  missing_cfg.config_path = "missing.json";
  CHECK(cmd_train(missing_cfg) == 2);
  CHECK(cmd_plot({.csv_path = "missing.csv"}) == 2);
  CHECK(cmd_inspect_replay({.path = "missing.replay"}) == 1);

  // The training protocol needs the gridworld; the enumerable world is for
  // oracle checks.
  const fs::path dir = "harness_cmd_test2";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string config_path = (dir / "cliff.json").string();
  {
    std::ofstream out(config_path);
    out << R"({"env": {"type": "cliffwalk"}})";
  }
  TrainOptions cliff_opt;
  cliff_opt.config_path = config_path;
  CHECK(cmd_train(cliff_opt) == 2);
  fs::remove_all(dir);
}
