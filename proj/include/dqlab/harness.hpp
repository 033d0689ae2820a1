#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dqlab/cliffwalk.hpp"
#include "dqlab/config.hpp"
#include "dqlab/decomposed.hpp"
#include "dqlab/exploration.hpp"
#include "dqlab/gridworld.hpp"
#include "dqlab/qtable.hpp"
#include "dqlab/replay.hpp"
#include "dqlab/replay_seed.hpp"
#include "dqlab/snapshot.hpp"

namespace dqlab {

// --- Metrics ---

// One evaluation point. Phase-1 rows are attributed to every phase-2 method
// that continues from that lineage (naive and transfer share the monolithic
// phase-1 curve), so a run always yields methods x evaluation-points rows.
struct MetricsRow {
  std::string method;
  std::uint64_t seed = 0;
  int phase = 1;
  int episode = 0;  // within-phase episode index at evaluation time
  double mean_return = 0.0;
  double mean_length = 0.0;
  double crash_rate = 0.0;
  double fixed_state_mean_q = 0.0;
  double epsilon = 0.0;
  std::int64_t wall_clock_ms = 0;
};

inline constexpr std::string_view kCsvHeader =
    "method,seed,phase,episode,mean_return,mean_length,crash_rate,"
    "fixed_state_mean_q,epsilon,wall_clock_ms";

std::string format_csv_row(const MetricsRow& row);
std::string format_csv(const std::vector<MetricsRow>& rows);  // header + rows

// Parses a harness CSV; malformed input raises ConfigError naming the line.
std::vector<MetricsRow> parse_metrics_csv(const std::string& text);

// Drops the wall_clock_ms column from every line, for byte comparisons and
// content hashes (wall-clock time is the one permitted nondeterminism).
std::string csv_without_wall_clock(const std::string& csv);
std::uint64_t metrics_hash(const std::vector<MetricsRow>& rows);

void sort_rows(std::vector<MetricsRow>& rows);  // (method, seed, phase, episode)

// --- Aggregation ---

struct AggregatePoint {
  std::string method;
  int phase = 1;
  int episode = 0;
  int n_seeds = 0;
  double return_mean = 0.0, return_sd = 0.0;
  double length_mean = 0.0, length_sd = 0.0;
  double crash_mean = 0.0, crash_sd = 0.0;
  double fixed_q_mean = 0.0, fixed_q_sd = 0.0;
};

// Pointwise mean and sample standard deviation across seeds. Every seed of
// a method must cover the same evaluation points; ragged input is an error.
std::vector<AggregatePoint> aggregate_seeds(const std::vector<MetricsRow>& rows);

// t statistic of the one-sided paired comparison mean(a - b) > 0.
// Requires equal sizes and n >= 2; sd of zero with nonzero mean returns
// +/-infinity.
double paired_t_statistic(std::span<const double> a, std::span<const double> b);

// --- Fixed evaluation set ---

struct FixedEvalSet {
  GridConfig config;
  std::vector<GridState> states;

  std::uint64_t content_hash() const;
};

// Drawn from the initial-state distribution with a dedicated substream of
// the master seed: identical for every method and every training seed.
FixedEvalSet make_fixed_eval_set(const ExperimentConfig& cfg);

// --- Agents ---

// Value-function side of a gridworld learner. Control always goes through
// q_combined; q_survival backs the safe action set (for monolithic agents
// the two coincide, which makes a survival threshold on them meaningless
// but well-defined).
class GridAgent {
 public:
  virtual ~GridAgent() = default;

  virtual std::array<double, kNumActions> q_combined(const GridState& s) const = 0;
  virtual std::array<double, kNumActions> q_survival(const GridState& s) const = 0;
  virtual void learn(std::span<const GridTransition> batch) = 0;
  virtual bool decomposed() const = 0;
  virtual std::string encoding_id() const = 0;

  virtual std::unique_ptr<GridAgent> clone() const = 0;
  // Same architecture, freshly initialized weights.
  virtual std::unique_ptr<GridAgent> fresh(RngStream& init_rng) const = 0;
  // Copy of the survival component, frozen; fresh task component.
  // Monolithic agents cannot do this (usage error).
  virtual std::unique_ptr<GridAgent> reuse_survival(RngStream& init_rng) const = 0;

  virtual WeightSnapshot survival_snapshot() const = 0;  // decomposed only
  // Labeled snapshots of everything the agent learned.
  virtual std::vector<std::pair<std::string, WeightSnapshot>> snapshots() const = 0;
};

std::unique_ptr<GridAgent> make_grid_agent(const ExperimentConfig& cfg, bool decomposed,
                                           RngStream& init_rng);

// Mean over the fixed states of max_a combined Q. Pure.
double eval_fixed_states(const GridAgent& agent, const FixedEvalSet& eval_set);

struct EvalSummary {
  double mean_return = 0.0;
  double mean_length = 0.0;
  double crash_rate = 0.0;
};

// Greedy rollouts (safe-greedy when safe=true) without learning. Return is
// the undiscounted episode sum unless discounted is set.
EvalSummary eval_policy(const GridAgent& agent, const GridworldEnv& env, bool safe,
                        double tau, int n_episodes, RngStream& rng,
                        bool discounted = false, double gamma = 1.0);

// --- Experiment ---

struct AuditEntry {
  GridState state;
  Action action = Action::Up;
};

struct SeedArtifacts {
  std::uint64_t seed = 0;

  // Decoupled method: survival-weight hashes taken right after the freeze
  // and after the last phase-2 update.
  std::uint64_t survival_hash_pre = 0;
  std::uint64_t survival_hash_post = 0;
  WeightSnapshot frozen_survival;

  // Exploratory actions logged during the decoupled phase-2 run (only when
  // cfg.audit_safe_actions is set; counts are always maintained).
  std::vector<AuditEntry> audit_log;
  std::uint64_t audit_explored = 0;
  std::uint64_t audit_violations = 0;

  // Crash-transition fraction of the freshly seeded phase-2 buffers.
  std::map<std::string, double> seed_buffer_crash_fraction;

  std::vector<std::pair<std::string, WeightSnapshot>> snapshots;
  std::map<std::string, std::vector<GridTransition>> replay_dumps;  // when enabled
};

struct ExperimentResult {
  std::vector<MetricsRow> rows;  // sorted by (method, seed, phase, episode)
  std::vector<SeedArtifacts> per_seed;
  FixedEvalSet eval_set;
};

// Full protocol: per seed, phase-1 lineages (monolithic and/or decomposed,
// depending on the method list), then each requested phase-2 method on the
// flipped task. parallel > 1 fans seeds out over threads; results do not
// depend on the fan-out.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int parallel = 1);

// Number of evaluation points for a phase of `episodes` episodes: episode 0,
// every eval_every-th, and the final episode.
std::vector<int> eval_points(int episodes, int eval_every);

// --- Cliff-walking trainer (oracle verification path) ---

struct CliffTrainOptions {
  CliffConfig env;
  double alpha = 0.1;
  AlphaMode alpha_mode = AlphaMode::VisitInverse;
  double gamma = 0.95;
  long episodes = 20000;
  double epsilon_start = 1.0;
  double epsilon_final = 0.1;
  std::uint64_t anneal_steps = 0;  // 0 = episodes * 10 env steps
  int eval_every = 0;              // 0 = no evaluation series
  int eval_episodes = 30;
};

struct CliffTrainResult {
  QTable q;                          // indexed by cell, width * height states
  std::vector<long> eval_at;         // episode indices of the evaluations
  std::vector<double> crash_rates;   // greedy crash rate at each evaluation
  std::vector<double> mean_returns;
};

// Online tabular epsilon-greedy Q-learning (no replay). Deterministic per
// seed.
CliffTrainResult run_cliff_qlearning(const CliffTrainOptions& opt, std::uint64_t seed);

// Convenience: max-abs gap to the DP oracle over sufficiently visited pairs.
struct OracleGap {
  double max_abs_error = 0.0;        // over (s,a) with visits >= min_visits
  std::size_t compared_pairs = 0;
  double start_value_error = 0.0;    // |max_a Q(start,a) - V*(start)|
};
OracleGap oracle_gap(const CliffTrainResult& result, const CliffwalkEnv& env,
                     double gamma, int min_visits);

// Feeds one random-behavior cliff-walk transition stream to a monolithic
// table and a joint-greedy decomposed pair; returns the max entrywise
// |(Q_env + Q_task) - Q_mono| after n_transitions updates of each.
double decomposition_equivalence_gap(const CliffConfig& env_cfg, long n_transitions,
                                     double alpha, double gamma, std::uint64_t seed);

}  // namespace dqlab
