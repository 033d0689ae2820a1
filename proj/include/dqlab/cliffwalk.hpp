#pragma once

#include <string>
#include <vector>

#include "dqlab/core.hpp"
#include "dqlab/gridworld.hpp"

namespace dqlab {

// Deterministic cliff-walking world with decoupled reward routing: the
// cliff penalty flows to the environment part, the goal reward to the task
// part. Fully enumerable, which makes it the verification target for the
// dynamic-programming oracle.

struct CliffConfig {
  int width = 12;
  int height = 4;
  GridPos start{0, 0};  // bottom-left
  GridPos goal{0, 11};  // bottom-right
  double goal_reward = 1.0;
  double cliff_penalty = -1.0;
  int max_steps = 100;

  void validate() const;  // throws ConfigError
};

struct CliffState {
  GridPos agent;
  int steps_elapsed = 0;
  bool terminated = false;

  friend bool operator==(const CliffState&, const CliffState&) = default;
};

class CliffwalkEnv {
 public:
  explicit CliffwalkEnv(CliffConfig config);

  const CliffConfig& config() const { return config_; }

  CliffState reset() const;

  // Deterministic single-cell move; walls leave the agent in place. Into
  // the cliff: (cliff_penalty, 0), absorbing. Onto the goal:
  // (0, goal_reward), absorbing. Timeout at max_steps ends the episode
  // without marking the transition absorbing.
  StepOutcome<CliffState> step(const CliffState& state, Action action) const;

  // Cliff cells span the bottom row strictly between the start and goal
  // columns.
  bool is_cliff(GridPos p) const;
  bool is_goal(GridPos p) const { return p == config_.goal; }
  bool in_bounds(GridPos p) const {
    return p.row >= 0 && p.row < config_.height && p.col >= 0 && p.col < config_.width;
  }

  int n_cells() const { return config_.width * config_.height; }
  std::size_t cell_index(GridPos p) const {
    return static_cast<std::size_t>(p.row) * config_.width + p.col;
  }

  // All non-terminal cells (not cliff, not goal) as cell indices, ascending.
  std::vector<std::size_t> enumerate_states() const;

  std::string encoding_id() const;

 private:
  CliffConfig config_;
};

// Shared ASCII format with the gridworld ('A' agent, '#' hazard, '.'
// empty) plus 'G' for the goal cell.
std::string render_cliff(const CliffState& state, const CliffConfig& config);

}  // namespace dqlab
