#pragma once

#include <cstdint>

#include "dqlab/core.hpp"
#include "dqlab/rng.hpp"

namespace dqlab {

// Linear epsilon anneal over environment steps, clamped at epsilon_final.
struct ExplorationSchedule {
  double epsilon_start = 1.0;
  double epsilon_final = 0.1;
  std::uint64_t anneal_steps = 1;

  double epsilon_at(std::uint64_t step) const {
    if (anneal_steps == 0 || step >= anneal_steps) return epsilon_final;
    const double frac = static_cast<double>(step) / static_cast<double>(anneal_steps);
    return epsilon_start + frac * (epsilon_final - epsilon_start);
  }
};

// Small fixed-capacity action subset backed by a bitmask.
class ActionSet {
 public:
  ActionSet() = default;

  void add(Action a) { mask_ |= static_cast<std::uint8_t>(1u << action_index(a)); }
  bool contains(Action a) const { return (mask_ >> action_index(a)) & 1u; }
  int size() const;
  bool empty() const { return mask_ == 0; }

  // k-th contained action in index order, k in [0, size()).
  Action nth(int k) const;

 private:
  std::uint8_t mask_ = 0;
};

// Actions whose survival value clears the threshold. If none do, the set
// collapses to the single least-bad action so the agent can always move.
ActionSet safe_action_set(const std::array<double, kNumActions>& survival_q, double tau);

enum class PolicyType {
  EpsGreedy,      // uniform over all actions with prob epsilon
  Greedy,         // pure argmax, consumes no randomness
  SafeEpsGreedy,  // eps-greedy restricted to the safe action subset
};

struct Policy {
  PolicyType type = PolicyType::EpsGreedy;
  ExplorationSchedule schedule;
  double tau = -0.5;  // survival threshold for SafeEpsGreedy
};

struct ActionChoice {
  Action action = Action::Up;
  bool explored = false;  // true when the uniform branch was taken
};

// Picks an action for environment step `t`. survival_q is only consulted by
// SafeEpsGreedy; pass the combined values there too for the other types.
ActionChoice select_action(const Policy& policy,
                           const std::array<double, kNumActions>& combined_q,
                           const std::array<double, kNumActions>& survival_q,
                           std::uint64_t t, RngStream& rng);

}  // namespace dqlab
