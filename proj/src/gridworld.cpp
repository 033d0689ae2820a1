#include "dqlab/gridworld.hpp"

#include <algorithm>
#include <cmath>

namespace dqlab {

void GridConfig::validate() const {
  if (width <= 0 || height <= 0) throw ConfigError("grid dimensions must be positive");
  if (n_cells() < 2) throw ConfigError("grid needs at least 2 cells");
  if (collectible_types != 2) throw ConfigError("exactly 2 collectible types are supported");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (p_obstacle < 0.0 || p_obstacle > 1.0) throw ConfigError("p_obstacle outside [0, 1]");
  if (p_collectible < 0.0 || p_collectible > 1.0) throw ConfigError("p_collectible outside [0, 1]");
  const double occupied = p_obstacle + total_collectible_prob();
  if (occupied > 1.0) throw ConfigError("p_obstacle + collectible coverage exceeds 1");
  if (occupied >= 1.0) throw ConfigError("cell occupancy leaves no room for empty cells");
}

GridworldEnv::GridworldEnv(GridConfig config, TaskSpec task)
    : config_(config), task_(task) {
  config_.validate();
  if (task_.desired_type < 0 || task_.desired_type >= config_.collectible_types)
    throw ConfigError("desired collectible type out of range");
}

GridState GridworldEnv::reset(RngStream& rng) const {
  const double p_obs = config_.p_obstacle;
  const double p_col = config_.total_collectible_prob();
  const double p_per_type = p_col / config_.collectible_types;

  for (int attempt = 0; attempt < 10000; ++attempt) {
    GridState s;
    s.cells.assign(config_.n_cells(), Cell::Empty);
    const auto agent_cell = rng.uniform_below(config_.n_cells());
    s.agent = {static_cast<int>(agent_cell) / config_.width,
               static_cast<int>(agent_cell) % config_.width};

    bool any_empty = false;
    for (std::size_t i = 0; i < s.cells.size(); ++i) {
      if (i == agent_cell) continue;
      const double u = rng.uniform01();
      if (u < p_obs) {
        s.cells[i] = Cell::Obstacle;
      } else if (u < p_obs + p_col) {
        const int type = static_cast<int>((u - p_obs) / p_per_type);
        s.cells[i] = collectible_cell(std::min(type, config_.collectible_types - 1));
      } else {
        any_empty = true;
      }
    }
    if (any_empty) return s;
  }
  throw ConfigError("could not draw a grid with an empty non-agent cell");
}

StepOutcome<GridState> GridworldEnv::step(const GridState& state, Action action,
                                          RngStream& rng) const {
  if (state.terminated) throw UsageError("step() on a terminated grid state");

  StepOutcome<GridState> out;
  out.state = state;
  GridState& next = out.state;
  next.steps_elapsed = state.steps_elapsed + 1;

  GridPos target = step_pos(state.agent, action);
  if (!in_bounds(target)) target = state.agent;  // walls are not hazards

  const Cell content = next.cells[cell_index(target)];
  if (content == Cell::Obstacle) {
    out.reward.env = -1.0;
    out.absorbing = true;
    out.episode_over = true;
    next.agent = target;
    next.terminated = true;
    return out;
  }

  if (is_collectible(content)) {
    const int type = collectible_type(content);
    next.cells[cell_index(target)] = Cell::Empty;
    next.agent = target;
    // Respawn a collectible of the same type on a random empty cell away
    // from the agent. The vacated old agent cell guarantees a candidate.
    std::vector<std::size_t> empties;
    empties.reserve(next.cells.size());
    for (std::size_t i = 0; i < next.cells.size(); ++i) {
      if (next.cells[i] == Cell::Empty && i != cell_index(next.agent)) empties.push_back(i);
    }
    next.cells[empties[rng.uniform_below(empties.size())]] = collectible_cell(type);
    if (type == task_.desired_type) out.reward.task = 1.0;
  } else {
    next.agent = target;
  }

  if (next.steps_elapsed >= config_.max_steps) {
    out.episode_over = true;  // horizon: terminal for the episode, not for bootstrapping
    next.terminated = true;
  }
  return out;
}

int count_cells(const GridState& state, Cell value) {
  return static_cast<int>(std::count(state.cells.begin(), state.cells.end(), value));
}

std::size_t onehot_size(const GridConfig& config) {
  return 4u * static_cast<std::size_t>(config.n_cells());
}

std::vector<double> encode_onehot(const GridState& state, const GridConfig& config) {
  const std::size_t n = config.n_cells();
  std::vector<double> v(4 * n, 0.0);
  v[static_cast<std::size_t>(state.agent.row) * config.width + state.agent.col] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    switch (state.cells[i]) {
      case Cell::Empty: break;
      case Cell::Obstacle: v[n + i] = 1.0; break;
      case Cell::Collectible0: v[2 * n + i] = 1.0; break;
      case Cell::Collectible1: v[3 * n + i] = 1.0; break;
    }
  }
  return v;
}

LocalWindowEncoder::LocalWindowEncoder(int k) : k_(k) {
  if (k < 1 || k % 2 == 0) throw ConfigError("local window size must be odd and >= 1");
  // 2 bits per cell, center excluded; k = 7 would need 96 bits.
  if (k * k - 1 > 31) throw ConfigError("local window too large to index (max k = 5)");
}

std::uint64_t LocalWindowEncoder::table_size() const {
  return 1ull << (2 * (k_ * k_ - 1));
}

std::uint64_t LocalWindowEncoder::encode(const GridState& state,
                                         const GridConfig& config) const {
  const int half = k_ / 2;
  std::uint64_t index = 0;
  for (int dr = half; dr >= -half; --dr) {
    for (int dc = -half; dc <= half; ++dc) {
      if (dr == 0 && dc == 0) continue;
      const GridPos p{state.agent.row + dr, state.agent.col + dc};
      std::uint64_t digit;
      if (p.row < 0 || p.row >= config.height || p.col < 0 || p.col >= config.width) {
        digit = static_cast<std::uint64_t>(Cell::Obstacle);
      } else {
        digit = static_cast<std::uint64_t>(
            state.cells[static_cast<std::size_t>(p.row) * config.width + p.col]);
      }
      index = index * 4 + digit;
    }
  }
  return index;
}

std::string LocalWindowEncoder::encoding_id() const {
  return "local-window-k" + std::to_string(k_);
}

std::string render_grid(const GridState& state, const GridConfig& config) {
  std::string out;
  out.reserve((config.width + 1) * config.height);
  for (int row = config.height - 1; row >= 0; --row) {
    for (int col = 0; col < config.width; ++col) {
      char c = '.';
      switch (state.cells[static_cast<std::size_t>(row) * config.width + col]) {
        case Cell::Empty: c = '.'; break;
        case Cell::Obstacle: c = '#'; break;
        case Cell::Collectible0: c = '0'; break;
        case Cell::Collectible1: c = '1'; break;
      }
      if (state.agent.row == row && state.agent.col == col) c = 'A';
      out.push_back(c);
    }
    out.push_back('\n');
  }
  return out;
}

}  // namespace dqlab
