// Acceptance gate: every release-blocking property of the artifact, one
// [PASS]/[FAIL] line each. Exit code is the number of failed checks.
//
// Checks 5, 6, 8 and 10 share one nine-seed tabular experiment on the
// reference config; check 7 runs the network learner. The network fallback
// for check 6 (20,000-episode phases) takes hours on one core, so it only
// runs when DQLAB_ACCEPT_NETWORK=1 is set; without it a tabular failure of
// the length ordering is reported as a failure of the check.
//
// Usage: acceptance [reference-config-path]   (default configs/reference.json)

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dqlab/cliffwalk.hpp"
#include "dqlab/commands.hpp"
#include "dqlab/config.hpp"
#include "dqlab/dp.hpp"
#include "dqlab/exploration.hpp"
#include "dqlab/gridworld.hpp"
#include "dqlab/harness.hpp"
#include "dqlab/mlp.hpp"
#include "dqlab/qtable.hpp"
#include "dqlab/rng.hpp"
#include "dqlab/snapshot.hpp"

using namespace dqlab;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Pinned thresholds. Each constant belongs to exactly one check below.
constexpr double kEquivalenceGap = 1e-9;        // 1: decomposed-vs-monolithic
constexpr double kEquivalenceSeconds = 10.0;
constexpr double kOracleTolerance = 0.05;       // 2: tabular learner vs solver
constexpr double kOracleStartTolerance = 0.02;
constexpr double kOracleSeconds = 60.0;
constexpr double kGradientRelError = 1e-4;      // 3: backprop vs differences
constexpr double kGradientSeconds = 10.0;
constexpr long kRoutingTransitions = 100000;    // 4: reward routing
constexpr double kTCritical05Df8 = 1.8595;      // 6a, 10: one-sided, 9 seeds
constexpr double kConvergenceRatio = 0.5;       // 7: naive fixed-state Q cap

int failures = 0;
double total_seconds = 0.0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count() /
         1000.0;
}

void report(int index, const char* name, bool pass, const std::string& detail,
            double secs) {
  total_seconds += secs;
  std::printf("[%s] %2d. %s: %s [%.1f s]\n", pass ? "PASS" : "FAIL", index, name,
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(const char* f, ...) {
  va_list args;
  va_start(args, f);
  char buf[512];
  std::vsnprintf(buf, sizeof(buf), f, args);
  va_end(args);
  return buf;
}

double mean(const std::vector<double>& v) {
  double t = 0.0;
  for (double x : v) t += x;
  return v.empty() ? 0.0 : t / static_cast<double>(v.size());
}

// --- 1. Decomposed task/survival learner tracks the monolithic one ---

void check_equivalence() {
  const auto t0 = Clock::now();
  const double gap = decomposition_equivalence_gap(CliffConfig{}, 50000, 0.1, 0.95, 1);
  const double secs = seconds_since(t0);
  report(1, "decomposition equivalence",
         gap <= kEquivalenceGap && secs < kEquivalenceSeconds,
         fmt("max |(Q_env+Q_task) - Q_mono| = %.3g over 50000 transitions (limit %.0e)",
             gap, kEquivalenceGap),
         secs);
}

// --- 2. Tabular learner converges to the dynamic-programming solution ---

void check_oracle() {
  const auto t0 = Clock::now();
  CliffTrainOptions opt;
  opt.alpha = 0.1;
  opt.alpha_mode = AlphaMode::VisitInverse;
  opt.gamma = 0.95;
  opt.episodes = 20000;
  const CliffTrainResult result = run_cliff_qlearning(opt, 1);
  const CliffwalkEnv env{opt.env};
  const OracleGap gap = oracle_gap(result, env, opt.gamma, 100);
  const double secs = seconds_since(t0);
  const bool pass = gap.compared_pairs > 0 && gap.max_abs_error <= kOracleTolerance &&
                    gap.start_value_error <= kOracleStartTolerance &&
                    secs < kOracleSeconds;
  report(2, "cliff-walk oracle convergence", pass,
         fmt("max |Q - Q*| = %.4f over %zu pairs (limit %.2f), start max-Q off by %.4f "
             "from %.4f (limit %.2f)",
             gap.max_abs_error, gap.compared_pairs, kOracleTolerance,
             gap.start_value_error, std::pow(0.95, 12), kOracleStartTolerance),
         secs);
}

// --- 3. Backpropagation against central finite differences ---

void check_gradients() {
  const auto t0 = Clock::now();
  RngStream rng(2024);
  Mlp net({6, 16, 8, 4});
  xavier_init(net, rng);

  // Fixed probe batch; loss is the summed squared distance to fixed targets.
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> x(6), y(4);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    for (double& v : y) v = rng.uniform(-1.0, 1.0);
    inputs.push_back(x);
    targets.push_back(y);
  }

  const auto loss = [&](const Mlp& m) {
    double l = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const std::vector<double> out = m.forward(inputs[i]);
      for (std::size_t k = 0; k < out.size(); ++k) {
        const double d = out[k] - targets[i][k];
        l += d * d;
      }
    }
    return l;
  };

  std::vector<double> grad(net.n_params(), 0.0);
  Mlp::Cache cache;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    net.forward_cached(inputs[i], cache);
    std::vector<double> dout(4);
    for (std::size_t k = 0; k < dout.size(); ++k) {
      dout[k] = 2.0 * (cache.activations.back()[k] - targets[i][k]);
    }
    net.backward(cache, dout, grad);
  }

  const double h = 1e-6;
  int checked = 0;
  double worst = 0.0;
  std::size_t worst_idx = 0;
  int attempts = 0;
  while (checked < 20 && attempts < 500) {
    ++attempts;
    const std::size_t idx = rng.uniform_below(net.n_params());
    const double saved = net.params()[idx];
    net.params()[idx] = saved + h;
    const double up = loss(net);
    net.params()[idx] = saved - h;
    const double down = loss(net);
    net.params()[idx] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[idx]), 1e-8});
    const double rel = std::abs(fd - grad[idx]) / denom;
    if (rel >= kGradientRelError) {
      // The loss is piecewise quadratic in each coordinate; an exploding
      // second difference means the probe straddled a rectifier kink where
      // the central difference is not meaningful. Draw another coordinate.
      const double second = std::abs(up + down - 2.0 * loss(net)) / (h * h);
      if (second > 1e3) continue;
    }
    ++checked;
    if (rel > worst) {
      worst = rel;
      worst_idx = idx;
    }
  }
  const double secs = seconds_since(t0);
  report(3, "gradient correctness", checked == 20 && worst < kGradientRelError &&
                                        secs < kGradientSeconds,
         fmt("worst relative error %.3g at parameter %zu over %d points (limit %.0e)",
             worst, worst_idx, checked, kGradientRelError),
         secs);
}

// --- 4. Reward routing: punishments to the survival channel, goals to the task ---

void check_reward_routing() {
  const auto t0 = Clock::now();
  long bad = 0;
  long crashes = 0;
  long checked = 0;
  std::string first_bad;

  const auto note = [&](const char* what) {
    ++bad;
    if (first_bad.empty()) first_bad = what;
  };

  {
    const GridConfig gc;
    const GridworldEnv env(gc, TaskSpec{0});
    RngStream rng(77);
    GridState s = env.reset(rng);
    for (long i = 0; i < kRoutingTransitions / 2; ++i, ++checked) {
      const Action a = action_from_index(rng.uniform_below(kNumActions));
      // Crash is decided by the board alone: the move lands on an obstacle.
      const GridPos target = step_pos(s.agent, a);
      const bool into_obstacle = target.row >= 0 && target.row < gc.height &&
                                 target.col >= 0 && target.col < gc.width &&
                                 s.cells[static_cast<std::size_t>(target.row * gc.width +
                                                                  target.col)] == Cell::Obstacle;
      const StepOutcome<GridState> out = env.step(s, a, rng);
      if (out.reward.env > 0.0) note("grid env reward positive");
      if (out.reward.task < 0.0) note("grid task reward negative");
      if (out.reward.total() != out.reward.env + out.reward.task) note("grid total mismatch");
      if (into_obstacle != (out.reward.env == -1.0)) note("grid crash/env mismatch");
      if (into_obstacle) ++crashes;
      s = (out.episode_over || out.absorbing) ? env.reset(rng) : out.state;
    }
  }

  {
    const CliffConfig cc;
    const CliffwalkEnv env(cc);
    RngStream rng(78);
    CliffState s = env.reset();
    for (long i = 0; i < kRoutingTransitions - kRoutingTransitions / 2; ++i, ++checked) {
      const Action a = action_from_index(rng.uniform_below(kNumActions));
      GridPos target = step_pos(s.agent, a);
      if (target.row < 0 || target.row >= cc.height || target.col < 0 ||
          target.col >= cc.width) {
        target = s.agent;
      }
      const bool into_cliff = env.is_cliff(target);
      const StepOutcome<CliffState> out = env.step(s, a);
      if (out.reward.env > 0.0) note("cliff env reward positive");
      if (out.reward.task < 0.0) note("cliff task reward negative");
      if (out.reward.total() != out.reward.env + out.reward.task) note("cliff total mismatch");
      if (into_cliff != (out.reward.env == -1.0)) note("cliff crash/env mismatch");
      if (into_cliff) ++crashes;
      s = (out.episode_over || out.absorbing) ? env.reset() : out.state;
    }
  }

  const double secs = seconds_since(t0);
  report(4, "reward routing soundness", bad == 0,
         bad == 0 ? fmt("%ld transitions checked, %ld crashes, all routed correctly",
                        checked, crashes)
                  : fmt("%ld violations (first: %s)", bad, first_bad.c_str()),
         secs);
}

// --- Shared nine-seed tabular experiment (checks 5, 6, 8, 10) ---

struct TabularRun {
  ExperimentConfig cfg;
  ExperimentResult result;
  double secs = 0.0;
};

std::optional<TabularRun> run_reference_experiment(const std::string& config_path) {
  const auto t0 = Clock::now();
  TabularRun run;
  try {
    run.cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::printf("cannot load reference config '%s': %s\n", config_path.c_str(), e.what());
    return std::nullopt;
  }
  run.cfg.audit_safe_actions = true;
  run.cfg.save_snapshots = false;
  run.result = run_experiment(run.cfg);
  run.secs = seconds_since(t0);
  std::printf("-- reference experiment: %zu seeds, %zu methods, %zu rows [%.1f s]\n",
              run.cfg.seeds.size(), run.cfg.methods.size(), run.result.rows.size(),
              run.secs);
  std::fflush(stdout);
  return run;
}

// --- 5. Phase-2 reuse leaves the survival weights bit-identical ---

void check_frozen_survival(const TabularRun& run) {
  const auto t0 = Clock::now();
  int intact = 0;
  for (const SeedArtifacts& art : run.result.per_seed) {
    if (art.survival_hash_pre != 0 && art.survival_hash_pre == art.survival_hash_post) {
      ++intact;
    }
  }
  const int n = static_cast<int>(run.result.per_seed.size());
  report(5, "frozen survival weights", intact == n && n == 9,
         fmt("%d/%d seeds keep the survival hash unchanged through phase 2", intact, n),
         seconds_since(t0));
}

// --- 6. Phase-2 orderings: returns (decoupled > naive), lengths (decoupled >= transfer) ---

// Per-seed mean of phase-2 evaluation returns over the final quarter of the
// episode budget (episodes strictly past 3E/4), seed-ordered.
std::vector<double> final_quarter_returns(const std::vector<MetricsRow>& rows,
                                          const std::string& method, int episodes) {
  std::map<std::uint64_t, std::vector<double>> per_seed;
  for (const MetricsRow& r : rows) {
    if (r.method != method || r.phase != 2) continue;
    if (r.episode > 3 * episodes / 4) per_seed[r.seed].push_back(r.mean_return);
  }
  std::vector<double> out;
  for (const auto& [seed, vals] : per_seed) out.push_back(mean(vals));
  return out;
}

// Per-seed mean episode length over every phase-2 evaluation point.
std::vector<double> phase_length_means(const std::vector<MetricsRow>& rows,
                                       const std::string& method) {
  std::map<std::uint64_t, std::vector<double>> per_seed;
  for (const MetricsRow& r : rows) {
    if (r.method == method && r.phase == 2) per_seed[r.seed].push_back(r.mean_length);
  }
  std::vector<double> out;
  for (const auto& [seed, vals] : per_seed) out.push_back(mean(vals));
  return out;
}

struct LengthOrdering {
  double dec = 0.0;
  double transfer = 0.0;
  bool pass = false;
};

LengthOrdering length_ordering(const std::vector<MetricsRow>& rows) {
  LengthOrdering out;
  out.dec = mean(phase_length_means(rows, "decoupled"));
  out.transfer = mean(phase_length_means(rows, "transfer"));
  out.pass = out.dec >= out.transfer;
  return out;
}

void check_orderings(const TabularRun& run) {
  const auto t0 = Clock::now();

  // Return ordering: paired across seeds on final-quarter means.
  const std::vector<double> dec_q4 =
      final_quarter_returns(run.result.rows, "decoupled", run.cfg.phase2_episodes);
  const std::vector<double> naive_q4 =
      final_quarter_returns(run.result.rows, "naive", run.cfg.phase2_episodes);
  const double t_ret = paired_t_statistic(dec_q4, naive_q4);
  const bool return_pass = t_ret > kTCritical05Df8;

  // Length ordering at tabular scale; the network configuration is the
  // binding test when this one fails.
  const LengthOrdering tab = length_ordering(run.result.rows);
  bool length_pass = tab.pass;
  std::string length_detail =
      fmt("tabular phase lengths dec %.3f vs transfer %.3f", tab.dec, tab.transfer);

  double secs_network = 0.0;
  if (!tab.pass) {
    const char* env_flag = std::getenv("DQLAB_ACCEPT_NETWORK");
    if (env_flag != nullptr && std::strcmp(env_flag, "1") == 0) {
      const auto tn = Clock::now();
      ExperimentConfig net_cfg = run.cfg;
      net_cfg.learner = LearnerKind::Mlp;
      net_cfg.methods = {"transfer", "decoupled"};
      net_cfg.phase1_episodes = 20000;
      net_cfg.phase2_episodes = 20000;
      net_cfg.audit_safe_actions = false;
      std::printf("-- tabular length ordering failed; running the binding network "
                  "configuration (20000-episode phases, 9 seeds)\n");
      std::fflush(stdout);
      const ExperimentResult net = run_experiment(net_cfg);
      const LengthOrdering bound = length_ordering(net.rows);
      secs_network = seconds_since(tn);
      length_pass = bound.pass;
      length_detail += fmt("; network (binding) dec %.3f vs transfer %.3f", bound.dec,
                           bound.transfer);
    } else {
      length_detail += "; binding network test skipped (set DQLAB_ACCEPT_NETWORK=1)";
    }
  }

  report(6, "phase-2 orderings", return_pass && length_pass,
         fmt("final-quarter return dec %.3f vs naive %.3f, paired t = %.3f "
             "(need > %.4f); %s",
             mean(dec_q4), mean(naive_q4), t_ret, kTCritical05Df8, length_detail.c_str()),
         seconds_since(t0) + secs_network);
}

// --- 7. Fresh network stays far from converged at the phase-2 budget ---

void check_convergence_gap() {
  const auto t0 = Clock::now();
  ExperimentConfig cfg;
  cfg.learner = LearnerKind::Mlp;
  cfg.methods = {"naive", "decoupled"};
  cfg.phase1_episodes = 2000;
  cfg.phase2_episodes = 2000;
  cfg.save_snapshots = false;

  const ExperimentResult res = run_experiment(cfg);
  std::vector<double> naive_fq, dec_fq;
  for (const MetricsRow& r : res.rows) {
    if (r.phase != 2 || r.episode != cfg.phase2_episodes) continue;
    if (r.method == "naive") naive_fq.push_back(r.fixed_state_mean_q);
    if (r.method == "decoupled") dec_fq.push_back(r.fixed_state_mean_q);
  }
  const double naive_mean = mean(naive_fq);
  const double dec_mean = mean(dec_fq);
  const bool pass = naive_fq.size() == 9 && dec_fq.size() == 9 && dec_mean > 0.0 &&
                    naive_mean < kConvergenceRatio * dec_mean;
  report(7, "naive convergence gap", pass,
         fmt("fixed-state mean Q at budget: naive %.4f vs decoupled %.4f "
             "(need naive < %.0f%% of decoupled)",
             naive_mean, dec_mean, kConvergenceRatio * 100.0),
         seconds_since(t0));
}

// --- 8. Every exploratory action stayed inside the frozen safe set ---

void check_safe_exploration(const TabularRun& run) {
  const auto t0 = Clock::now();
  const LocalWindowEncoder enc(run.cfg.window);
  std::uint64_t total = 0;
  std::uint64_t violations = 0;
  std::uint64_t harness_violations = 0;
  bool restored_all = true;

  for (const SeedArtifacts& art : run.result.per_seed) {
    harness_violations += art.audit_violations;
    if (art.frozen_survival.values.empty()) {
      restored_all = false;
      continue;
    }
    QTable survival(art.frozen_survival.dims.at(0), run.cfg.alpha, run.cfg.gamma,
                    run.cfg.alpha_mode);
    restore_table(art.frozen_survival, survival, art.frozen_survival.encoding_id);
    for (const AuditEntry& entry : art.audit_log) {
      ++total;
      const std::uint64_t s = enc.encode(entry.state, run.cfg.grid);
      const ActionSet safe = safe_action_set(survival.q_values(s), run.cfg.tau);
      if (!safe.contains(entry.action)) ++violations;
    }
  }

  report(8, "safe exploration audit",
         restored_all && total > 0 && violations == 0 && harness_violations == 0,
         fmt("%llu exploratory actions re-checked against the frozen survival values, "
             "%llu outside the safe set",
             static_cast<unsigned long long>(total),
             static_cast<unsigned long long>(violations)),
         seconds_since(t0));
}

// --- 9. Bitwise reproducibility of the training command ---

void check_determinism(const std::string& config_path) {
  const auto t0 = Clock::now();
  const fs::path base = fs::temp_directory_path() / "dqlab_acceptance_determinism";
  fs::remove_all(base);

  bool pass = true;
  std::string detail;
  std::string first_csv;
  for (int i = 0; i < 2 && pass; ++i) {
    TrainOptions opt;
    opt.config_path = config_path;
    opt.out_dir = (base / ("run" + std::to_string(i))).string();
    if (cmd_train(opt) != 0) {
      pass = false;
      detail = "training command failed";
      break;
    }
    const std::string csv =
        csv_without_wall_clock(read_file_bytes(opt.out_dir + "/metrics.csv"));
    if (i == 0) {
      first_csv = csv;
    } else if (csv != first_csv) {
      pass = false;
      detail = "metrics differ between identical runs";
    }
  }
  if (pass) {
    detail = fmt("two runs produced byte-identical metrics (%zu bytes, wall clock excluded)",
                 first_csv.size());
  }
  fs::remove_all(base);
  report(9, "run-to-run determinism", pass, detail, seconds_since(t0));
}

// --- 10. Survival-guided buffer seeding crashes less than random seeding ---

void check_seeding_effect(const TabularRun& run) {
  const auto t0 = Clock::now();
  std::vector<double> random_frac, survival_frac;
  for (const SeedArtifacts& art : run.result.per_seed) {
    random_frac.push_back(art.seed_buffer_crash_fraction.at("naive"));
    survival_frac.push_back(art.seed_buffer_crash_fraction.at("decoupled"));
  }
  const double t_stat = paired_t_statistic(random_frac, survival_frac);
  bool strictly_lower = true;
  for (std::size_t i = 0; i < random_frac.size(); ++i) {
    if (!(survival_frac[i] < random_frac[i])) strictly_lower = false;
  }
  report(10, "replay seeding effect", strictly_lower && t_stat > kTCritical05Df8,
         fmt("crash fraction random %.4f vs survival-guided %.4f, paired t = %.3f "
             "(need > %.4f, lower on every seed)",
             mean(random_frac), mean(survival_frac), t_stat, kTCritical05Df8),
         seconds_since(t0));
}

}  // namespace

int main(int argc, char** argv) {
  const std::string config_path = argc > 1 ? argv[1] : "configs/reference.json";

  check_equivalence();
  check_oracle();
  check_gradients();
  check_reward_routing();

  const std::optional<TabularRun> tabular = run_reference_experiment(config_path);
  if (tabular.has_value()) total_seconds += tabular->secs;
  if (tabular.has_value()) {
    check_frozen_survival(*tabular);
    check_orderings(*tabular);
  } else {
    report(5, "frozen survival weights", false, "reference experiment unavailable", 0.0);
    report(6, "phase-2 orderings", false, "reference experiment unavailable", 0.0);
  }

  check_convergence_gap();

  if (tabular.has_value()) {
    check_safe_exploration(*tabular);
  } else {
    report(8, "safe exploration audit", false, "reference experiment unavailable", 0.0);
  }

  check_determinism(config_path);

  if (tabular.has_value()) {
    check_seeding_effect(*tabular);
  } else {
    report(10, "replay seeding effect", false, "reference experiment unavailable", 0.0);
  }

  std::printf("%d/10 checks passed, total %.1f s\n", 10 - failures, total_seconds);
  return failures;
}
