#include "dqlab/cliffwalk.hpp"

#include <algorithm>

namespace dqlab {

void CliffConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("cliff world dimensions must be positive");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  auto inside = [&](GridPos p) {
    return p.row >= 0 && p.row < height && p.col >= 0 && p.col < width;
  };
  if (!inside(start) || !inside(goal)) throw ConfigError("start/goal outside the grid");
  if (start == goal) throw ConfigError("start and goal must differ");
}

CliffwalkEnv::CliffwalkEnv(CliffConfig config) : config_(config) {
  config_.validate();
  if (is_cliff(config_.start) || is_cliff(config_.goal))
    throw ConfigError("start/goal may not lie in the cliff");
}

bool CliffwalkEnv::is_cliff(GridPos p) const {
  if (p.row != 0) return false;
  const int lo = std::min(config_.start.col, config_.goal.col);
  const int hi = std::max(config_.start.col, config_.goal.col);
  return p.col > lo && p.col < hi;
}

CliffState CliffwalkEnv::reset() const { return CliffState{config_.start, 0, false}; }

StepOutcome<CliffState> CliffwalkEnv::step(const CliffState& state, Action action) const {
  if (state.terminated) throw UsageError("step() on a terminated cliff state");

  StepOutcome<CliffState> out;
  out.state = state;
  out.state.steps_elapsed = state.steps_elapsed + 1;

  GridPos target = step_pos(state.agent, action);
  if (!in_bounds(target)) target = state.agent;
  out.state.agent = target;

  if (is_cliff(target)) {
    out.reward.env = config_.cliff_penalty;
    out.absorbing = true;
    out.episode_over = true;
    out.state.terminated = true;
    return out;
  }
  if (is_goal(target)) {
    out.reward.task = config_.goal_reward;
    out.absorbing = true;
    out.episode_over = true;
    out.state.terminated = true;
    return out;
  }
  if (out.state.steps_elapsed >= config_.max_steps) {
    out.episode_over = true;
    out.state.terminated = true;
  }
  return out;
}

std::vector<std::size_t> CliffwalkEnv::enumerate_states() const {
  std::vector<std::size_t> states;
  for (int row = 0; row < config_.height; ++row) {
    for (int col = 0; col < config_.width; ++col) {
      const GridPos p{row, col};
      if (is_cliff(p) || is_goal(p)) continue;
      states.push_back(cell_index(p));
    }
  }
  return states;
}

std::string CliffwalkEnv::encoding_id() const {
  return "cliff-cell-" + std::to_string(config_.width) + "x" + std::to_string(config_.height);
}

std::string render_cliff(const CliffState& state, const CliffConfig& config) {
  CliffwalkEnv env(config);
  std::string out;
  for (int row = config.height - 1; row >= 0; --row) {
    for (int col = 0; col < config.width; ++col) {
      const GridPos p{row, col};
      char c = '.';
      if (env.is_cliff(p)) c = '#';
      if (env.is_goal(p)) c = 'G';
      if (state.agent == p) c = 'A';
      out.push_back(c);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace dqlab
