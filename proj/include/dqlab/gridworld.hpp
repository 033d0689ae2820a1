#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqlab/core.hpp"
#include "dqlab/rng.hpp"

namespace dqlab {

// Collect-and-avoid world: random agent spawn, probabilistic obstacle and
// collectible placement, two collectible types, collect-respawn dynamics,
// crash termination, fixed step horizon.

struct GridConfig {
  int width = 11;
  int height = 11;
  double p_obstacle = 0.15;
  // Total collectible probability per cell, split evenly across types.
  // With per_type_collectible_prob the value applies to each type instead.
  double p_collectible = 0.05;
  bool per_type_collectible_prob = false;
  int collectible_types = 2;
  int max_steps = 50;

  double total_collectible_prob() const {
    return per_type_collectible_prob ? p_collectible * collectible_types : p_collectible;
  }

  int n_cells() const { return width * height; }

  void validate() const;  // throws ConfigError
};

// Cell values double as the base-4 digits of the local-window encoding;
// Empty must stay 0.
enum class Cell : std::uint8_t {
  Empty = 0,
  Obstacle = 1,
  Collectible0 = 2,
  Collectible1 = 3,
};

inline Cell collectible_cell(int type) { return static_cast<Cell>(2 + type); }
inline bool is_collectible(Cell c) { return c >= Cell::Collectible0; }
inline int collectible_type(Cell c) { return static_cast<int>(c) - 2; }

struct GridState {
  GridPos agent;
  std::vector<Cell> cells;  // row-major [row * width + col], row 0 = bottom
  int steps_elapsed = 0;
  bool terminated = false;

  friend bool operator==(const GridState&, const GridState&) = default;
};

struct TaskSpec {
  int desired_type = 0;
};

// episode_over: the episode cannot be stepped further.
// absorbing: learners must not bootstrap from `state` (crash/goal). A
// horizon timeout sets episode_over but not absorbing, so time never leaks
// into the value function.
template <class State>
struct StepOutcome {
  State state;
  DecomposedReward reward;
  bool absorbing = false;
  bool episode_over = false;
};

class GridworldEnv {
 public:
  GridworldEnv(GridConfig config, TaskSpec task);

  const GridConfig& config() const { return config_; }
  const TaskSpec& task() const { return task_; }
  GridworldEnv with_task(TaskSpec task) const { return GridworldEnv(config_, task); }

  // Agent on a uniformly random cell; every other cell independently drawn
  // as obstacle / collectible / empty. Redrawn until at least one empty
  // non-agent cell remains.
  GridState reset(RngStream& rng) const;

  // Moving off-grid leaves the agent in place (a step is still consumed).
  // Obstacle: reward (-1, 0), crash, absorbing. Collectible: picked up
  // regardless of type, a new one of the same type respawns on a random
  // empty cell, task reward +1 only for the desired type.
  StepOutcome<GridState> step(const GridState& state, Action action, RngStream& rng) const;

  std::size_t cell_index(GridPos p) const {
    return static_cast<std::size_t>(p.row) * config_.width + p.col;
  }
  bool in_bounds(GridPos p) const {
    return p.row >= 0 && p.row < config_.height && p.col >= 0 && p.col < config_.width;
  }

 private:
  GridConfig config_;
  TaskSpec task_;
};

int count_cells(const GridState& state, Cell value);

// 4 binary channels (agent, obstacle, collectible-0, collectible-1), each
// width*height, flattened channel-major.
std::vector<double> encode_onehot(const GridState& state, const GridConfig& config);
std::size_t onehot_size(const GridConfig& config);

// k x k egocentric window around the agent mapped to a base-4 integer.
// Cells outside the grid read as Obstacle; the center cell (always the
// agent) is excluded. Digits are taken top row first, left to right, most
// significant first, so the all-empty mid-grid window encodes to 0.
class LocalWindowEncoder {
 public:
  explicit LocalWindowEncoder(int k);  // k odd, window must fit 64 bits

  int window() const { return k_; }
  std::uint64_t table_size() const;  // 4^(k*k - 1)
  std::uint64_t encode(const GridState& state, const GridConfig& config) const;
  std::string encoding_id() const;

 private:
  int k_;
};

// Agent 'A', obstacle '#', collectibles '0'/'1', empty '.'. Top row first.
std::string render_grid(const GridState& state, const GridConfig& config);

}  // namespace dqlab
