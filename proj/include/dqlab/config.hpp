#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "dqlab/cliffwalk.hpp"
#include "dqlab/decomposed.hpp"
#include "dqlab/gridworld.hpp"
#include "dqlab/mlp.hpp"

namespace dqlab {

enum class EnvType { Gridworld, Cliffwalk };
enum class LearnerKind { Tabular, Mlp };

// One file describes a full experiment. Every field has a default, so {} is
// a valid config; unknown keys anywhere are rejected with their JSON path
// rather than silently ignored.
struct ExperimentConfig {
  int schema_version = 1;

  // Master seed: fixed evaluation set and anything that must be identical
  // across methods and seeds. Per-run streams derive from `seeds` entries.
  std::uint64_t master_seed = 1234;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::vector<std::string> methods = {"naive", "transfer", "decoupled"};

  EnvType env_type = EnvType::Gridworld;
  GridConfig grid;
  CliffConfig cliff;

  int phase1_type = 0;  // collectible type rewarded in phase 1
  int phase2_type = 1;

  LearnerKind learner = LearnerKind::Tabular;
  int window = 3;                               // tabular local-window size
  double alpha = 0.1;
  AlphaMode alpha_mode = AlphaMode::Constant;
  double gamma = 0.95;
  Bootstrap update_mode = Bootstrap::IndependentMax;
  std::vector<int> hidden = {64, 16};           // network hidden layers
  AdamConfig adam;

  std::size_t replay_capacity = 10000;
  std::size_t minibatch = 32;          // samples per network update (MLP)
  std::size_t tabular_draws = 8;       // replay samples per env step (tabular)
  bool sample_without_replacement = false;
  std::size_t seed_fill = 10000;       // transitions pushed before phase 2 training
  std::size_t min_size_to_learn = 32;  // updates start once the buffer holds this many

  double epsilon_start = 1.0;
  double epsilon_final = 0.1;
  std::uint64_t anneal_steps = 0;  // 0 = half the phase's env-step budget
  double tau = -0.5;               // survival threshold for safe exploration

  int phase1_episodes = 5000;
  int phase2_episodes = 5000;
  int eval_every = 100;
  int eval_episodes = 30;
  int fixed_eval_states = 100;

  bool save_snapshots = true;
  bool dump_replay = false;
  bool audit_safe_actions = false;
  bool discounted_eval_return = false;

  double oracle_tolerance = 0.05;
  int oracle_min_visits = 100;
  long oracle_episodes = 20000;

  void validate() const;  // throws ConfigError
};

ExperimentConfig default_experiment_config();

ExperimentConfig parse_config(const nlohmann::json& j);
// Missing file, malformed JSON (with line info) and unknown keys all raise
// ConfigError.
ExperimentConfig load_config(const std::string& path);

// Round-trip for the run manifest: defaults filled in, keys sorted.
nlohmann::json config_to_json(const ExperimentConfig& cfg);

}  // namespace dqlab
