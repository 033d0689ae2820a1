#include "dqlab/qtable.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace dqlab {

namespace {
// 2^24 states * 4 actions * 8 bytes = 512 MiB; anything past that is
// almost certainly a misconfigured encoder, not a real experiment.
constexpr std::uint64_t kMaxStates = 1ull << 24;
}  // namespace

QTable::QTable(std::uint64_t n_states, double alpha, double gamma, AlphaMode mode)
    : n_states_(n_states), alpha_(alpha), gamma_(gamma), mode_(mode) {
  if (n_states == 0) throw ConfigError("QTable: n_states must be positive");
  if (n_states > kMaxStates) {
    throw ConfigError("QTable: " + std::to_string(n_states) +
                      " states exceeds the dense-table limit of " +
                      std::to_string(kMaxStates));
  }
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("QTable: alpha must be in (0, 1]");
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("QTable: gamma must be in [0, 1)");
  values_.assign(static_cast<std::size_t>(n_states) * kNumActions, 0.0);
  visits_.assign(values_.size(), 0);
}

std::size_t QTable::offset(std::uint64_t s, Action a) const {
  if (s >= n_states_) {
    throw UsageError("QTable: state index " + std::to_string(s) +
                     " out of range (n_states = " + std::to_string(n_states_) + ")");
  }
  return static_cast<std::size_t>(s) * kNumActions + action_index(a);
}

std::array<double, kNumActions> QTable::q_values(std::uint64_t s) const {
  const std::size_t base = offset(s, Action::Up);
  return {values_[base], values_[base + 1], values_[base + 2], values_[base + 3]};
}

double QTable::td_update(std::uint64_t s, Action a, double reward,
                         std::uint64_t next, bool terminal) {
  return td_update_toward(s, a, reward, terminal ? 0.0 : max_q(next), terminal);
}

double QTable::td_update_toward(std::uint64_t s, Action a, double reward,
                                double bootstrap, bool terminal) {
  const std::size_t at = offset(s, a);
  const double target = terminal ? reward : reward + gamma_ * bootstrap;
  const double td = target - values_[at];
  visits_[at] += 1;
  // Visit-inverse decay stops at the configured alpha. A step that keeps
  // shrinking freezes stale bootstrap targets into the average; the floor
  // keeps late corrections flowing once downstream values have moved.
  const double step = mode_ == AlphaMode::Constant
                          ? alpha_
                          : std::max(alpha_, 1.0 / visits_[at]);
  values_[at] += step * td;
  ++updates_;
  return td;
}

}  // namespace dqlab
