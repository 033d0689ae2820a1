#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dqlab {

// Error categories used across the library. Configuration problems (bad
// files, impossible parameters) are recoverable and reported with context;
// usage errors are caller bugs (stepping a finished episode, shape
// mismatches).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UsageError : std::logic_error {
  using std::logic_error::logic_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SnapshotError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- Actions ---

inline constexpr int kNumActions = 4;

// Encoding 0-3 is part of the on-disk and CSV contracts; do not reorder.
enum class Action : std::uint8_t { Up = 0, Down = 1, Left = 2, Right = 3 };

inline constexpr std::array<Action, kNumActions> kAllActions{
    Action::Up, Action::Down, Action::Left, Action::Right};

constexpr int action_index(Action a) { return static_cast<int>(a); }

inline Action action_from_index(int i) {
  if (i < 0 || i >= kNumActions) throw UsageError("action index out of range");
  return static_cast<Action>(i);
}

std::string_view action_name(Action a);

// Lowest index wins ties; every max/argmax in the library goes through here
// so that decomposed and monolithic learners break ties identically.
inline int argmax_index(const std::array<double, kNumActions>& q) {
  int best = 0;
  for (int i = 1; i < kNumActions; ++i) {
    if (q[i] > q[best]) best = i;
  }
  return best;
}

inline double max_value(const std::array<double, kNumActions>& q) {
  return q[argmax_index(q)];
}

// --- Grid geometry ---

// row 0 is the bottom row; Up increases the row index.
struct GridPos {
  int row = 0;
  int col = 0;

  friend bool operator==(const GridPos&, const GridPos&) = default;
};

constexpr GridPos step_pos(GridPos p, Action a) {
  switch (a) {
    case Action::Up: return {p.row + 1, p.col};
    case Action::Down: return {p.row - 1, p.col};
    case Action::Left: return {p.row, p.col - 1};
    case Action::Right: return {p.row, p.col + 1};
  }
  return p;
}

// --- Rewards and transitions ---

// One transition's reward split into the environment part (hazards, always
// <= 0 in the shipped worlds) and the task part (goals, always >= 0).
// Monolithic learners consume total(); decoupled learners route the parts
// to separate value functions.
struct DecomposedReward {
  double env = 0.0;
  double task = 0.0;

  double total() const { return env + task; }

  friend bool operator==(const DecomposedReward&, const DecomposedReward&) = default;
};

// terminal == true means next_state is absorbing and updates must not
// bootstrap from it. Horizon timeouts are recorded with terminal == false
// even though the episode ends.
template <class State>
struct Transition {
  State state;
  Action action = Action::Up;
  DecomposedReward reward;
  State next_state;
  bool terminal = false;
};

template <class State>
struct EpisodeTrace {
  std::vector<Transition<State>> steps;

  std::size_t step_count() const { return steps.size(); }

  // At most one terminal transition, and only at the last position.
  bool well_formed() const {
    for (std::size_t i = 0; i + 1 < steps.size(); ++i) {
      if (steps[i].terminal) return false;
    }
    return true;
  }
};

template <class State>
double discounted_return(const EpisodeTrace<State>& trace, double gamma) {
  double sum = 0.0;
  double weight = 1.0;
  for (const auto& t : trace.steps) {
    sum += weight * t.reward.total();
    weight *= gamma;
  }
  return sum;
}

}  // namespace dqlab
