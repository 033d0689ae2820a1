#include "dqlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>
#include <tuple>

#include "dqlab/dp.hpp"
#include "dqlab/hash.hpp"
#include "dqlab/log.hpp"

namespace dqlab {

namespace {

std::string fmt_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string row_fields_without_wall_clock(const MetricsRow& r) {
  std::string out = r.method;
  out += ',';
  out += std::to_string(r.seed);
  out += ',';
  out += std::to_string(r.phase);
  out += ',';
  out += std::to_string(r.episode);
  out += ',';
  out += fmt_g9(r.mean_return);
  out += ',';
  out += fmt_g9(r.mean_length);
  out += ',';
  out += fmt_g9(r.crash_rate);
  out += ',';
  out += fmt_g9(r.fixed_state_mean_q);
  out += ',';
  out += fmt_g9(r.epsilon);
  return out;
}

}  // namespace

std::string format_csv_row(const MetricsRow& r) {
  return row_fields_without_wall_clock(r) + ',' + std::to_string(r.wall_clock_ms);
}

std::string format_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const MetricsRow& r : rows) {
    out += format_csv_row(r);
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double_field(const std::string& s, std::size_t line_no, const char* what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("CSV line " + std::to_string(line_no) + ": " + what +
                      " is not a number: '" + s + "'");
  }
  return v;
}

long long parse_int_field(const std::string& s, std::size_t line_no, const char* what) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw ConfigError("CSV line " + std::to_string(line_no) + ": " + what +
                      " is not an integer: '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<MetricsRow> parse_metrics_csv(const std::string& text) {
  std::vector<MetricsRow> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader) {
        throw ConfigError("CSV line 1: unexpected header '" + line + "'");
      }
      continue;
    }
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 10) {
      throw ConfigError("CSV line " + std::to_string(line_no) + ": expected 10 fields, got " +
                        std::to_string(f.size()));
    }
    MetricsRow r;
    r.method = f[0];
    r.seed = static_cast<std::uint64_t>(parse_int_field(f[1], line_no, "seed"));
    r.phase = static_cast<int>(parse_int_field(f[2], line_no, "phase"));
    r.episode = static_cast<int>(parse_int_field(f[3], line_no, "episode"));
    r.mean_return = parse_double_field(f[4], line_no, "mean_return");
    r.mean_length = parse_double_field(f[5], line_no, "mean_length");
    r.crash_rate = parse_double_field(f[6], line_no, "crash_rate");
    r.fixed_state_mean_q = parse_double_field(f[7], line_no, "fixed_state_mean_q");
    r.epsilon = parse_double_field(f[8], line_no, "epsilon");
    r.wall_clock_ms = parse_int_field(f[9], line_no, "wall_clock_ms");
    rows.push_back(std::move(r));
  }
  if (line_no == 0) throw ConfigError("CSV is empty");
  return rows;
}

std::string csv_without_wall_clock(const std::string& csv) {
  std::string out;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    std::size_t nl = csv.find('\n', pos);
    if (nl == std::string::npos) nl = csv.size();
    std::string line = csv.substr(pos, nl - pos);
    pos = nl + 1;
    if (!line.empty()) {
      const std::size_t comma = line.rfind(',');
      if (comma != std::string::npos) line.resize(comma);
    }
    out += line;
    out += '\n';
  }
  return out;
}

std::uint64_t metrics_hash(const std::vector<MetricsRow>& rows) {
  Fnv1a64 h;
  for (const MetricsRow& r : rows) {
    h.update_str(row_fields_without_wall_clock(r));
    h.update_str("\n");
  }
  return h.digest();
}

void sort_rows(std::vector<MetricsRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.method, a.seed, a.phase, a.episode) <
           std::tie(b.method, b.seed, b.phase, b.episode);
  });
}

// --- Aggregation ---

namespace {

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
};

MeanSd mean_sd(const std::vector<double>& xs) {
  MeanSd out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

}  // namespace

std::vector<AggregatePoint> aggregate_seeds(const std::vector<MetricsRow>& rows) {
  // Every seed of a method must report the same (phase, episode) points.
  std::map<std::string, std::map<std::uint64_t, std::vector<std::pair<int, int>>>> coverage;
  for (const MetricsRow& r : rows) {
    coverage[r.method][r.seed].push_back({r.phase, r.episode});
  }
  for (auto& [method, by_seed] : coverage) {
    for (auto& [seed, pts] : by_seed) std::sort(pts.begin(), pts.end());
    const auto& ref = by_seed.begin()->second;
    for (const auto& [seed, pts] : by_seed) {
      if (pts != ref) {
        throw UsageError("aggregate_seeds: seeds of method '" + method +
                         "' cover different evaluation points");
      }
    }
  }

  std::map<std::tuple<std::string, int, int>, std::vector<const MetricsRow*>> groups;
  for (const MetricsRow& r : rows) {
    groups[{r.method, r.phase, r.episode}].push_back(&r);
  }
  std::vector<AggregatePoint> out;
  out.reserve(groups.size());
  for (const auto& [key, members] : groups) {
    AggregatePoint p;
    p.method = std::get<0>(key);
    p.phase = std::get<1>(key);
    p.episode = std::get<2>(key);
    p.n_seeds = static_cast<int>(members.size());
    std::vector<double> ret, len, crash, fq;
    for (const MetricsRow* r : members) {
      ret.push_back(r->mean_return);
      len.push_back(r->mean_length);
      crash.push_back(r->crash_rate);
      fq.push_back(r->fixed_state_mean_q);
    }
    const MeanSd a = mean_sd(ret), b = mean_sd(len), c = mean_sd(crash), d = mean_sd(fq);
    p.return_mean = a.mean;
    p.return_sd = a.sd;
    p.length_mean = b.mean;
    p.length_sd = b.sd;
    p.crash_mean = c.mean;
    p.crash_sd = c.sd;
    p.fixed_q_mean = d.mean;
    p.fixed_q_sd = d.sd;
    out.push_back(std::move(p));
  }
  return out;
}

double paired_t_statistic(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw UsageError("paired_t_statistic: size mismatch");
  if (a.size() < 2) throw UsageError("paired_t_statistic: need at least two pairs");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const MeanSd ms = mean_sd(d);
  if (ms.sd == 0.0) {
    if (ms.mean == 0.0) return 0.0;
    return ms.mean > 0.0 ? std::numeric_limits<double>::infinity()
                         : -std::numeric_limits<double>::infinity();
  }
  return ms.mean / (ms.sd / std::sqrt(static_cast<double>(d.size())));
}

// --- Fixed evaluation set ---

std::uint64_t FixedEvalSet::content_hash() const {
  return hash_bytes(serialize_eval_states(states, config));
}

FixedEvalSet make_fixed_eval_set(const ExperimentConfig& cfg) {
  if (cfg.env_type != EnvType::Gridworld) {
    throw ConfigError("fixed evaluation sets are defined for the gridworld experiment");
  }
  FixedEvalSet out;
  out.config = cfg.grid;
  const GridworldEnv env(cfg.grid, TaskSpec{cfg.phase1_type});
  RngStream rng = RngStream(cfg.master_seed).substream(Substream::FixedEvalSet);
  out.states.reserve(static_cast<std::size_t>(cfg.fixed_eval_states));
  for (int i = 0; i < cfg.fixed_eval_states; ++i) out.states.push_back(env.reset(rng));
  return out;
}

// --- Agents ---

namespace {

std::string grid_onehot_id(const GridConfig& grid) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "grid-onehot-%dx%d", grid.width, grid.height);
  return buf;
}

class TabularMonoAgent final : public GridAgent {
 public:
  TabularMonoAgent(const GridConfig& grid, int window, double alpha, AlphaMode mode,
                   double gamma)
      : grid_(grid), enc_(window), q_(enc_.table_size(), alpha, gamma, mode) {}

  std::array<double, kNumActions> q_combined(const GridState& s) const override {
    return q_.q_values(enc_.encode(s, grid_));
  }
  std::array<double, kNumActions> q_survival(const GridState& s) const override {
    return q_combined(s);
  }
  void learn(std::span<const GridTransition> batch) override {
    for (const GridTransition& t : batch) {
      q_.td_update(enc_.encode(t.state, grid_), t.action, t.reward.total(),
                   enc_.encode(t.next_state, grid_), t.terminal);
    }
  }
  bool decomposed() const override { return false; }
  std::string encoding_id() const override { return enc_.encoding_id(); }

  std::unique_ptr<GridAgent> clone() const override {
    return std::make_unique<TabularMonoAgent>(*this);
  }
  std::unique_ptr<GridAgent> fresh(RngStream&) const override {
    return std::make_unique<TabularMonoAgent>(grid_, enc_.window(), q_.alpha(),
                                              q_.alpha_mode(), q_.gamma());
  }
  std::unique_ptr<GridAgent> reuse_survival(RngStream&) const override {
    throw UsageError("monolithic agent has no survival component to reuse");
  }
  WeightSnapshot survival_snapshot() const override {
    throw UsageError("monolithic agent has no survival component");
  }
  std::vector<std::pair<std::string, WeightSnapshot>> snapshots() const override {
    return {{"q", snapshot_from_table(q_, encoding_id())}};
  }

 private:
  GridConfig grid_;
  LocalWindowEncoder enc_;
  QTable q_;
};

class TabularDecoupledAgent final : public GridAgent {
 public:
  TabularDecoupledAgent(const GridConfig& grid, int window, double alpha, AlphaMode mode,
                        double gamma, Bootstrap bootstrap)
      : grid_(grid), enc_(window), dq_(enc_.table_size(), alpha, gamma, mode, bootstrap) {}

  std::array<double, kNumActions> q_combined(const GridState& s) const override {
    return dq_.combined(enc_.encode(s, grid_));
  }
  std::array<double, kNumActions> q_survival(const GridState& s) const override {
    return dq_.survival().q_values(enc_.encode(s, grid_));
  }
  void learn(std::span<const GridTransition> batch) override {
    for (const GridTransition& t : batch) {
      dq_.update(TabularSample{enc_.encode(t.state, grid_), t.action, t.reward,
                               enc_.encode(t.next_state, grid_), t.terminal});
    }
  }
  bool decomposed() const override { return true; }
  std::string encoding_id() const override { return enc_.encoding_id(); }

  std::unique_ptr<GridAgent> clone() const override {
    return std::make_unique<TabularDecoupledAgent>(*this);
  }
  std::unique_ptr<GridAgent> fresh(RngStream&) const override {
    return std::make_unique<TabularDecoupledAgent>(
        grid_, enc_.window(), dq_.task().alpha(), dq_.task().alpha_mode(),
        dq_.task().gamma(), dq_.bootstrap_mode());
  }
  std::unique_ptr<GridAgent> reuse_survival(RngStream&) const override {
    auto out = std::make_unique<TabularDecoupledAgent>(*this);
    out->dq_.task() = QTable(dq_.task().n_states(), dq_.task().alpha(), dq_.task().gamma(),
                             dq_.task().alpha_mode());
    out->dq_.freeze_survival();
    return out;
  }
  WeightSnapshot survival_snapshot() const override {
    return snapshot_from_table(dq_.survival(), encoding_id());
  }
  std::vector<std::pair<std::string, WeightSnapshot>> snapshots() const override {
    return {{"q_env", snapshot_from_table(dq_.survival(), encoding_id())},
            {"q_task", snapshot_from_table(dq_.task(), encoding_id())}};
  }

 private:
  GridConfig grid_;
  LocalWindowEncoder enc_;
  DecomposedTable dq_;
};

std::vector<DenseSample> to_dense(std::span<const GridTransition> batch,
                                  const GridConfig& grid, bool total_reward) {
  std::vector<DenseSample> out;
  out.reserve(batch.size());
  for (const GridTransition& t : batch) {
    DenseSample s;
    s.obs = encode_onehot(t.state, grid);
    s.action = t.action;
    s.reward = total_reward ? t.reward.total() : 0.0;
    s.next_obs = encode_onehot(t.next_state, grid);
    s.terminal = t.terminal;
    out.push_back(std::move(s));
  }
  return out;
}

class MlpMonoAgent final : public GridAgent {
 public:
  MlpMonoAgent(const GridConfig& grid, const std::vector<int>& hidden, AdamConfig adam,
               double gamma, RngStream& init_rng)
      : grid_(grid), learner_(make_layers(grid, hidden), adam, gamma) {
    xavier_init(learner_.net(), init_rng);
  }

  std::array<double, kNumActions> q_combined(const GridState& s) const override {
    return learner_.q_values(encode_onehot(s, grid_));
  }
  std::array<double, kNumActions> q_survival(const GridState& s) const override {
    return q_combined(s);
  }
  void learn(std::span<const GridTransition> batch) override {
    const std::vector<DenseSample> dense = to_dense(batch, grid_, true);
    learner_.minibatch_update(dense);
  }
  bool decomposed() const override { return false; }
  std::string encoding_id() const override { return grid_onehot_id(grid_); }

  std::unique_ptr<GridAgent> clone() const override {
    return std::make_unique<MlpMonoAgent>(*this);
  }
  std::unique_ptr<GridAgent> fresh(RngStream& init_rng) const override {
    return std::make_unique<MlpMonoAgent>(grid_, hidden_of(learner_.net()),
                                          learner_.adam_config(), learner_.gamma(),
                                          init_rng);
  }
  std::unique_ptr<GridAgent> reuse_survival(RngStream&) const override {
    throw UsageError("monolithic agent has no survival component to reuse");
  }
  WeightSnapshot survival_snapshot() const override {
    throw UsageError("monolithic agent has no survival component");
  }
  std::vector<std::pair<std::string, WeightSnapshot>> snapshots() const override {
    return {{"q", snapshot_from_mlp(learner_.net(), encoding_id(), learner_.gamma(),
                                    learner_.update_count())}};
  }

  static std::vector<int> make_layers(const GridConfig& grid, const std::vector<int>& hidden) {
    std::vector<int> layers{static_cast<int>(onehot_size(grid))};
    layers.insert(layers.end(), hidden.begin(), hidden.end());
    layers.push_back(kNumActions);
    return layers;
  }
  static std::vector<int> hidden_of(const Mlp& net) {
    const std::vector<int>& sizes = net.layer_sizes();
    return {sizes.begin() + 1, sizes.end() - 1};
  }

 private:
  GridConfig grid_;
  MlpLearner learner_;
};

class MlpDecoupledAgent final : public GridAgent {
 public:
  MlpDecoupledAgent(const GridConfig& grid, const std::vector<int>& hidden, AdamConfig adam,
                    double gamma, Bootstrap bootstrap, RngStream& init_rng)
      : grid_(grid), dq_(MlpMonoAgent::make_layers(grid, hidden), adam, gamma, bootstrap) {
    xavier_init(dq_.survival().net(), init_rng);
    xavier_init(dq_.task().net(), init_rng);
  }

  std::array<double, kNumActions> q_combined(const GridState& s) const override {
    return dq_.combined(encode_onehot(s, grid_));
  }
  std::array<double, kNumActions> q_survival(const GridState& s) const override {
    return dq_.survival().q_values(encode_onehot(s, grid_));
  }
  void learn(std::span<const GridTransition> batch) override {
    const std::vector<DenseSample> dense = to_dense(batch, grid_, false);
    std::vector<double> r_env(batch.size()), r_task(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      r_env[i] = batch[i].reward.env;
      r_task[i] = batch[i].reward.task;
    }
    dq_.minibatch_update(dense, r_env, r_task);
  }
  bool decomposed() const override { return true; }
  std::string encoding_id() const override { return grid_onehot_id(grid_); }

  std::unique_ptr<GridAgent> clone() const override {
    return std::make_unique<MlpDecoupledAgent>(*this);
  }
  std::unique_ptr<GridAgent> fresh(RngStream& init_rng) const override {
    return std::make_unique<MlpDecoupledAgent>(
        grid_, MlpMonoAgent::hidden_of(dq_.task().net()), dq_.task().adam_config(),
        dq_.task().gamma(), dq_.bootstrap_mode(), init_rng);
  }
  std::unique_ptr<GridAgent> reuse_survival(RngStream& init_rng) const override {
    auto out = std::make_unique<MlpDecoupledAgent>(
        grid_, MlpMonoAgent::hidden_of(dq_.task().net()), dq_.task().adam_config(),
        dq_.task().gamma(), dq_.bootstrap_mode(), init_rng);
    std::span<double> dst = out->dq_.survival().net().params();
    std::span<const double> src = dq_.survival().net().params();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = src[i];
    out->dq_.freeze_survival();
    return out;
  }
  WeightSnapshot survival_snapshot() const override {
    return snapshot_from_mlp(dq_.survival().net(), encoding_id(), dq_.survival().gamma(),
                             dq_.survival().update_count());
  }
  std::vector<std::pair<std::string, WeightSnapshot>> snapshots() const override {
    return {{"q_env", survival_snapshot()},
            {"q_task", snapshot_from_mlp(dq_.task().net(), encoding_id(),
                                         dq_.task().gamma(), dq_.task().update_count())}};
  }

 private:
  GridConfig grid_;
  DecomposedMlp dq_;
};

}  // namespace

std::unique_ptr<GridAgent> make_grid_agent(const ExperimentConfig& cfg, bool decomposed,
                                           RngStream& init_rng) {
  if (cfg.learner == LearnerKind::Tabular) {
    if (decomposed) {
      return std::make_unique<TabularDecoupledAgent>(cfg.grid, cfg.window, cfg.alpha,
                                                     cfg.alpha_mode, cfg.gamma,
                                                     cfg.update_mode);
    }
    return std::make_unique<TabularMonoAgent>(cfg.grid, cfg.window, cfg.alpha,
                                              cfg.alpha_mode, cfg.gamma);
  }
  if (decomposed) {
    return std::make_unique<MlpDecoupledAgent>(cfg.grid, cfg.hidden, cfg.adam, cfg.gamma,
                                               cfg.update_mode, init_rng);
  }
  return std::make_unique<MlpMonoAgent>(cfg.grid, cfg.hidden, cfg.adam, cfg.gamma, init_rng);
}

double eval_fixed_states(const GridAgent& agent, const FixedEvalSet& eval_set) {
  if (eval_set.states.empty()) throw UsageError("eval_fixed_states: empty state set");
  double sum = 0.0;
  for (const GridState& s : eval_set.states) sum += max_value(agent.q_combined(s));
  return sum / static_cast<double>(eval_set.states.size());
}

EvalSummary eval_policy(const GridAgent& agent, const GridworldEnv& env, bool safe,
                        double tau, int n_episodes, RngStream& rng, bool discounted,
                        double gamma) {
  if (n_episodes <= 0) throw UsageError("eval_policy: n_episodes must be positive");
  Policy pol;
  pol.type = safe ? PolicyType::SafeEpsGreedy : PolicyType::Greedy;
  pol.schedule = {0.0, 0.0, 1};
  pol.tau = tau;

  EvalSummary out;
  for (int e = 0; e < n_episodes; ++e) {
    GridState s = env.reset(rng);
    double ep_return = 0.0;
    double weight = 1.0;
    int steps = 0;
    for (;;) {
      const ActionChoice ch =
          select_action(pol, agent.q_combined(s), agent.q_survival(s), 0, rng);
      const StepOutcome<GridState> step = env.step(s, ch.action, rng);
      ep_return += weight * step.reward.total();
      if (discounted) weight *= gamma;
      ++steps;
      if (step.episode_over) {
        if (step.absorbing && step.reward.env < 0.0) out.crash_rate += 1.0;
        break;
      }
      s = step.state;
    }
    out.mean_return += ep_return;
    out.mean_length += steps;
  }
  const double n = static_cast<double>(n_episodes);
  out.mean_return /= n;
  out.mean_length /= n;
  out.crash_rate /= n;
  return out;
}

std::vector<int> eval_points(int episodes, int eval_every) {
  if (eval_every <= 0) throw UsageError("eval_points: eval_every must be positive");
  std::vector<int> points;
  for (int e = 0; e < episodes; e += eval_every) points.push_back(e);
  points.push_back(episodes);
  return points;
}

// --- Experiment internals ---

namespace {

using Clock = std::chrono::steady_clock;

// Distinct child salts keep the RNG lineages of phase-1 training, each
// phase-2 method, and buffer seeding fully decorrelated within one seed.
constexpr std::uint64_t kMonoLineageSalt = 11;
constexpr std::uint64_t kDecLineageSalt = 12;
constexpr std::uint64_t kNaiveSalt = 21;
constexpr std::uint64_t kTransferSalt = 22;
constexpr std::uint64_t kDecoupledSalt = 23;
constexpr std::uint64_t kSeedFillSalt = 7;
constexpr std::uint64_t kEvalSalt = 31;

struct PhaseStreams {
  RngStream env;
  RngStream expl;
  RngStream replay;
  RngStream eval;
};

PhaseStreams phase_streams(const RngStream& unit, std::uint64_t salt) {
  const RngStream base = unit.child(salt);
  // Evaluation instances come from a method-independent lineage so that, at
  // any given evaluation point, every method is scored on the same episode
  // draws, the same common-yardstick principle as the fixed Q state set.
  return {base.substream(Substream::EnvSpawn), base.substream(Substream::Exploration),
          base.substream(Substream::ReplaySampling),
          unit.child(kEvalSalt).substream(Substream::EvalSpawn)};
}

struct PhaseOutput {
  std::vector<MetricsRow> rows;  // phase/episode/metrics set; method and seed blank
  std::vector<AuditEntry> audit;
  std::uint64_t explored = 0;
  std::uint64_t violations = 0;
};

PhaseOutput train_phase(GridAgent& agent, ReplayBuffer<GridTransition>& replay,
                        const GridworldEnv& env, const ExperimentConfig& cfg, int phase,
                        int episodes, PolicyType ptype, PhaseStreams streams,
                        const FixedEvalSet& fes, bool audit_enabled,
                        Clock::time_point t0) {
  const std::uint64_t auto_anneal =
      static_cast<std::uint64_t>(episodes) * static_cast<std::uint64_t>(cfg.grid.max_steps) / 2;
  Policy pol;
  pol.type = ptype;
  pol.schedule = {cfg.epsilon_start, cfg.epsilon_final,
                  cfg.anneal_steps != 0 ? cfg.anneal_steps : std::max<std::uint64_t>(auto_anneal, 1)};
  pol.tau = cfg.tau;
  const bool safe_eval = ptype == PolicyType::SafeEpsGreedy;

  PhaseOutput out;
  std::uint64_t env_steps = 0;
  int eval_index = 0;

  const auto do_eval = [&](int episode) {
    // Distinct child per (phase, point); shared by all methods of this seed.
    RngStream eval_rng = streams.eval.child(static_cast<std::uint64_t>(phase) * 1000000 +
                                            static_cast<std::uint64_t>(eval_index++));
    const EvalSummary es =
        eval_policy(agent, env, safe_eval, cfg.tau, cfg.eval_episodes, eval_rng,
                    cfg.discounted_eval_return, cfg.gamma);
    const double fq = eval_fixed_states(agent, fes);
    if (!std::isfinite(fq) || !std::isfinite(es.mean_return)) {
      throw NumericalError("training diverged: non-finite evaluation values at phase " +
                           std::to_string(phase) + ", episode " + std::to_string(episode));
    }
    MetricsRow r;
    r.phase = phase;
    r.episode = episode;
    r.mean_return = es.mean_return;
    r.mean_length = es.mean_length;
    r.crash_rate = es.crash_rate;
    r.fixed_state_mean_q = fq;
    r.epsilon = ptype == PolicyType::Greedy ? 0.0 : pol.schedule.epsilon_at(env_steps);
    r.wall_clock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
    out.rows.push_back(std::move(r));
  };

  const std::vector<int> points = eval_points(episodes, cfg.eval_every);
  std::size_t next_point = 0;
  for (int e = 0; e <= episodes; ++e) {
    if (next_point < points.size() && points[next_point] == e) {
      do_eval(e);
      ++next_point;
    }
    if (e == episodes) break;

    GridState s = env.reset(streams.env);
    for (;;) {
      const std::array<double, kNumActions> qc = agent.q_combined(s);
      const std::array<double, kNumActions> qs = agent.q_survival(s);
      const ActionChoice ch = select_action(pol, qc, qs, env_steps, streams.expl);
      const StepOutcome<GridState> step = env.step(s, ch.action, streams.env);
      replay.push(GridTransition{s, ch.action, step.reward, step.state, step.absorbing});
      ++env_steps;
      if (ch.explored) {
        ++out.explored;
        if (audit_enabled) out.audit.push_back(AuditEntry{s, ch.action});
        if (ptype == PolicyType::SafeEpsGreedy &&
            !safe_action_set(qs, cfg.tau).contains(ch.action)) {
          ++out.violations;
        }
      }
      if (replay.size() >= cfg.min_size_to_learn) {
        // The network averages its 32-sample minibatch into one optimizer
        // step; the table applies each sampled transition directly, so its
        // per-step draw count is a separate (smaller) knob.
        const std::size_t want =
            cfg.learner == LearnerKind::Tabular ? cfg.tabular_draws : cfg.minibatch;
        if (cfg.sample_without_replacement) {
          const std::size_t n = std::min(want, replay.size());
          const std::vector<GridTransition> batch =
              replay.sample_without_replacement(n, streams.replay);
          agent.learn(batch);
        } else {
          const std::vector<GridTransition> batch = replay.sample(want, streams.replay);
          agent.learn(batch);
        }
      }
      if (step.episode_over) break;
      s = step.state;
    }
  }
  return out;
}

double crash_fraction(const ReplayBuffer<GridTransition>& buf) {
  if (buf.size() == 0) return 0.0;
  std::size_t crashes = 0;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    const GridTransition& t = buf.at(i);
    if (t.terminal && t.reward.env < 0.0) ++crashes;
  }
  return static_cast<double>(crashes) / static_cast<double>(buf.size());
}

std::vector<GridTransition> buffer_contents(const ReplayBuffer<GridTransition>& buf) {
  std::vector<GridTransition> out;
  out.reserve(buf.size());
  for (std::size_t i = 0; i < buf.size(); ++i) out.push_back(buf.at(i));
  return out;
}

struct UnitResult {
  std::vector<MetricsRow> rows;
  SeedArtifacts art;
};

void label_rows(std::vector<MetricsRow> rows, const std::string& method,
                std::uint64_t seed, std::vector<MetricsRow>& sink) {
  for (MetricsRow& r : rows) {
    r.method = method;
    r.seed = seed;
    sink.push_back(std::move(r));
  }
}

UnitResult run_unit(const ExperimentConfig& cfg, std::uint64_t seed,
                    const FixedEvalSet& fes) {
  UnitResult out;
  out.art.seed = seed;
  const Clock::time_point t0 = Clock::now();

  const auto wants = [&](const char* m) {
    return std::find(cfg.methods.begin(), cfg.methods.end(), m) != cfg.methods.end();
  };
  const bool want_naive = wants("naive");
  const bool want_transfer = wants("transfer");
  const bool want_decoupled = wants("decoupled");

  const RngStream unit(seed);
  const GridworldEnv env1(cfg.grid, TaskSpec{cfg.phase1_type});
  const GridworldEnv env2(cfg.grid, TaskSpec{cfg.phase2_type});

  // Phase 1: one monolithic lineage shared by naive and transfer, one
  // decomposed lineage for decoupled.
  std::unique_ptr<GridAgent> mono1;
  PhaseOutput mono_phase1;
  if (want_naive || want_transfer) {
    RngStream init = unit.child(kMonoLineageSalt).substream(Substream::WeightInit);
    mono1 = make_grid_agent(cfg, false, init);
    ReplayBuffer<GridTransition> buf(cfg.replay_capacity);
    mono_phase1 = train_phase(*mono1, buf, env1, cfg, 1, cfg.phase1_episodes,
                              PolicyType::EpsGreedy, phase_streams(unit, kMonoLineageSalt),
                              fes, false, t0);
    for (auto& [label, snap] : mono1->snapshots()) {
      out.art.snapshots.push_back({"phase1_mono_" + label, snap});
    }
    if (cfg.dump_replay) out.art.replay_dumps["phase1_mono"] = buffer_contents(buf);
  }

  std::unique_ptr<GridAgent> dec1;
  PhaseOutput dec_phase1;
  if (want_decoupled) {
    RngStream init = unit.child(kDecLineageSalt).substream(Substream::WeightInit);
    dec1 = make_grid_agent(cfg, true, init);
    ReplayBuffer<GridTransition> buf(cfg.replay_capacity);
    dec_phase1 = train_phase(*dec1, buf, env1, cfg, 1, cfg.phase1_episodes,
                             PolicyType::EpsGreedy, phase_streams(unit, kDecLineageSalt),
                             fes, false, t0);
    for (auto& [label, snap] : dec1->snapshots()) {
      out.art.snapshots.push_back({"phase1_" + label, snap});
    }
    if (cfg.dump_replay) out.art.replay_dumps["phase1_decoupled"] = buffer_contents(buf);
  }

  // Phase 2, task flipped.
  if (want_naive) {
    const RngStream base = unit.child(kNaiveSalt);
    RngStream init = base.substream(Substream::WeightInit);
    std::unique_ptr<GridAgent> agent = mono1->fresh(init);
    ReplayBuffer<GridTransition> buf(cfg.replay_capacity);
    RngStream fill = base.child(kSeedFillSalt);
    seed_gridworld_buffer(buf, env2, cfg.seed_fill,
                          [](const GridState&, RngStream& r) {
                            return action_from_index(static_cast<int>(r.uniform_below(kNumActions)));
                          },
                          fill);
    out.art.seed_buffer_crash_fraction["naive"] = crash_fraction(buf);
    PhaseOutput p2 = train_phase(*agent, buf, env2, cfg, 2, cfg.phase2_episodes,
                                 PolicyType::EpsGreedy, phase_streams(unit, kNaiveSalt),
                                 fes, false, t0);
    label_rows(mono_phase1.rows, "naive", seed, out.rows);
    label_rows(std::move(p2.rows), "naive", seed, out.rows);
    for (auto& [label, snap] : agent->snapshots()) {
      out.art.snapshots.push_back({"naive_" + label, snap});
    }
    if (cfg.dump_replay) out.art.replay_dumps["naive"] = buffer_contents(buf);
  }

  if (want_transfer) {
    const RngStream base = unit.child(kTransferSalt);
    std::unique_ptr<GridAgent> agent = mono1->clone();
    ReplayBuffer<GridTransition> buf(cfg.replay_capacity);
    RngStream fill = base.child(kSeedFillSalt);
    const GridAgent* source = mono1.get();
    seed_gridworld_buffer(buf, env2, cfg.seed_fill,
                          [source](const GridState& s, RngStream&) {
                            return action_from_index(argmax_index(source->q_combined(s)));
                          },
                          fill);
    out.art.seed_buffer_crash_fraction["transfer"] = crash_fraction(buf);
    PhaseOutput p2 = train_phase(*agent, buf, env2, cfg, 2, cfg.phase2_episodes,
                                 PolicyType::Greedy, phase_streams(unit, kTransferSalt),
                                 fes, false, t0);
    label_rows(mono_phase1.rows, "transfer", seed, out.rows);
    label_rows(std::move(p2.rows), "transfer", seed, out.rows);
    for (auto& [label, snap] : agent->snapshots()) {
      out.art.snapshots.push_back({"transfer_" + label, snap});
    }
    if (cfg.dump_replay) out.art.replay_dumps["transfer"] = buffer_contents(buf);
  }

  if (want_decoupled) {
    const RngStream base = unit.child(kDecoupledSalt);
    RngStream init = base.substream(Substream::WeightInit);
    std::unique_ptr<GridAgent> agent = dec1->reuse_survival(init);
    out.art.frozen_survival = agent->survival_snapshot();
    out.art.survival_hash_pre = snapshot_hash(out.art.frozen_survival);

    ReplayBuffer<GridTransition> buf(cfg.replay_capacity);
    RngStream fill = base.child(kSeedFillSalt);
    const GridAgent* frozen = agent.get();
    seed_gridworld_buffer(buf, env2, cfg.seed_fill,
                          [frozen](const GridState& s, RngStream&) {
                            return action_from_index(argmax_index(frozen->q_survival(s)));
                          },
                          fill);
    out.art.seed_buffer_crash_fraction["decoupled"] = crash_fraction(buf);
    PhaseOutput p2 = train_phase(*agent, buf, env2, cfg, 2, cfg.phase2_episodes,
                                 PolicyType::SafeEpsGreedy, phase_streams(unit, kDecoupledSalt),
                                 fes, cfg.audit_safe_actions, t0);
    out.art.survival_hash_post = snapshot_hash(agent->survival_snapshot());
    out.art.audit_log = std::move(p2.audit);
    out.art.audit_explored = p2.explored;
    out.art.audit_violations = p2.violations;
    label_rows(dec_phase1.rows, "decoupled", seed, out.rows);
    label_rows(std::move(p2.rows), "decoupled", seed, out.rows);
    for (auto& [label, snap] : agent->snapshots()) {
      out.art.snapshots.push_back({"decoupled_" + label, snap});
    }
    if (cfg.dump_replay) out.art.replay_dumps["decoupled"] = buffer_contents(buf);
  }

  return out;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int parallel) {
  cfg.validate();
  if (cfg.env_type != EnvType::Gridworld) {
    throw ConfigError("the two-phase experiment runs on the gridworld; cliffwalk "
                      "configs are served by the oracle check");
  }
  ExperimentResult out;
  out.eval_set = make_fixed_eval_set(cfg);

  std::vector<UnitResult> units(cfg.seeds.size());
  if (parallel <= 1 || cfg.seeds.size() == 1) {
    for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
      log_info("seed " + std::to_string(cfg.seeds[i]) + " ...");
      units[i] = run_unit(cfg, cfg.seeds[i], out.eval_set);
    }
  } else {
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(parallel, static_cast<int>(cfg.seeds.size()));
    std::vector<std::thread> threads;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
      threads.emplace_back([&] {
        for (;;) {
          const std::size_t i = next.fetch_add(1);
          if (i >= cfg.seeds.size()) return;
          try {
            units[i] = run_unit(cfg, cfg.seeds[i], out.eval_set);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
            return;
          }
        }
      });
    }
    for (std::thread& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  for (UnitResult& u : units) {
    out.rows.insert(out.rows.end(), std::make_move_iterator(u.rows.begin()),
                    std::make_move_iterator(u.rows.end()));
    out.per_seed.push_back(std::move(u.art));
  }
  sort_rows(out.rows);
  return out;
}

// --- Cliff-walking trainer ---

CliffTrainResult run_cliff_qlearning(const CliffTrainOptions& opt, std::uint64_t seed) {
  opt.env.validate();
  if (opt.episodes < 1) throw ConfigError("cliff trainer: episodes must be at least 1");
  const CliffwalkEnv env(opt.env);
  CliffTrainResult out{QTable(static_cast<std::uint64_t>(env.n_cells()), opt.alpha,
                              opt.gamma, opt.alpha_mode),
                      {},
                      {},
                      {}};

  const RngStream base(seed);
  RngStream expl = base.substream(Substream::Exploration);
  Policy pol;
  pol.type = PolicyType::EpsGreedy;
  pol.schedule = {opt.epsilon_start, opt.epsilon_final,
                  opt.anneal_steps != 0
                      ? opt.anneal_steps
                      : static_cast<std::uint64_t>(opt.episodes) * 10};

  // Training-window statistics double as the progress series: fraction of
  // behavior episodes ending in the cliff, and their undiscounted returns.
  long window_crashes = 0;
  double window_return = 0.0;
  long window_episodes = 0;
  const auto flush_window = [&](long episode_index) {
    if (window_episodes == 0) return;
    out.eval_at.push_back(episode_index);
    out.crash_rates.push_back(static_cast<double>(window_crashes) /
                              static_cast<double>(window_episodes));
    out.mean_returns.push_back(window_return / static_cast<double>(window_episodes));
    window_crashes = 0;
    window_return = 0.0;
    window_episodes = 0;
  };

  std::uint64_t steps = 0;
  for (long e = 0; e < opt.episodes; ++e) {
    CliffState s = env.reset();
    double ep_return = 0.0;
    bool crashed = false;
    for (;;) {
      const std::uint64_t obs = env.cell_index(s.agent);
      const std::array<double, kNumActions> q = out.q.q_values(obs);
      const ActionChoice ch = select_action(pol, q, q, steps, expl);
      const StepOutcome<CliffState> step = env.step(s, ch.action);
      out.q.td_update(obs, ch.action, step.reward.total(),
                      env.cell_index(step.state.agent), step.absorbing);
      ep_return += step.reward.total();
      ++steps;
      if (step.episode_over) {
        crashed = step.absorbing && step.reward.env < 0.0;
        break;
      }
      s = step.state;
    }
    window_return += ep_return;
    if (crashed) ++window_crashes;
    ++window_episodes;
    if (opt.eval_every > 0 && (e + 1) % opt.eval_every == 0) flush_window(e + 1);
  }
  if (opt.eval_every > 0) flush_window(opt.episodes);
  return out;
}

double decomposition_equivalence_gap(const CliffConfig& env_cfg, long n_transitions,
                                     double alpha, double gamma, std::uint64_t seed) {
  const CliffwalkEnv env(env_cfg);
  const std::uint64_t n_states = static_cast<std::uint64_t>(env.n_cells());
  QTable mono(n_states, alpha, gamma, AlphaMode::Constant);
  DecomposedTable split(n_states, alpha, gamma, AlphaMode::Constant, Bootstrap::JointGreedy);

  RngStream rng = RngStream(seed).substream(Substream::Exploration);
  CliffState s = env.reset();
  for (long i = 0; i < n_transitions; ++i) {
    const Action a = action_from_index(static_cast<int>(rng.uniform_below(kNumActions)));
    const StepOutcome<CliffState> step = env.step(s, a);
    const TabularSample t{env.cell_index(s.agent), a, step.reward,
                          env.cell_index(step.state.agent), step.absorbing};
    mono.td_update(t.obs, t.action, t.reward.total(), t.next_obs, t.terminal);
    split.update(t);
    s = step.episode_over ? env.reset() : step.state;
  }

  double gap = 0.0;
  for (std::uint64_t st = 0; st < n_states; ++st) {
    for (Action a : kAllActions) {
      const double combined = split.survival().q(st, a) + split.task().q(st, a);
      gap = std::max(gap, std::abs(combined - mono.q(st, a)));
    }
  }
  return gap;
}

OracleGap oracle_gap(const CliffTrainResult& result, const CliffwalkEnv& env, double gamma,
                     int min_visits) {
  const CliffMdp cm = build_cliffwalk_mdp(env, gamma);
  const ValueIterationResult vi = value_iteration(cm.mdp);
  const std::vector<std::array<double, kNumActions>> q_star = q_from_values(cm.mdp, vi.v);

  OracleGap gap;
  for (std::size_t s = 0; s < cm.cell_of_state.size(); ++s) {
    const std::uint64_t cell = cm.cell_of_state[s];
    for (Action a : kAllActions) {
      if (result.q.visits(cell, a) < static_cast<std::uint32_t>(min_visits)) continue;
      const double err = std::abs(result.q.q(cell, a) - q_star[s][action_index(a)]);
      gap.max_abs_error = std::max(gap.max_abs_error, err);
      ++gap.compared_pairs;
    }
  }
  const std::size_t start_cell = env.cell_index(env.config().start);
  const int start_state = cm.state_of_cell[start_cell];
  gap.start_value_error =
      std::abs(result.q.max_q(start_cell) - vi.v[static_cast<std::size_t>(start_state)]);
  return gap;
}

}  // namespace dqlab
