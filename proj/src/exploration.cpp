#include "dqlab/exploration.hpp"

namespace dqlab {

int ActionSet::size() const {
  int n = 0;
  for (std::uint8_t m = mask_; m; m >>= 1) n += m & 1u;
  return n;
}

Action ActionSet::nth(int k) const {
  for (std::size_t i = 0; i < kNumActions; ++i) {
    const Action a = action_from_index(i);
    if (!contains(a)) continue;
    if (k == 0) return a;
    --k;
  }
  throw UsageError("ActionSet: nth() index out of range");
}

ActionSet safe_action_set(const std::array<double, kNumActions>& survival_q, double tau) {
  ActionSet set;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (survival_q[i] >= tau) set.add(action_from_index(i));
  }
  if (set.empty()) set.add(action_from_index(argmax_index(survival_q)));
  return set;
}

namespace {

// Argmax over the subset, lowest index winning ties.
Action greedy_in_set(const std::array<double, kNumActions>& q, const ActionSet& set) {
  bool have = false;
  std::size_t best = 0;
  for (std::size_t i = 0; i < kNumActions; ++i) {
    if (!set.contains(action_from_index(i))) continue;
    if (!have || q[i] > q[best]) {
      best = i;
      have = true;
    }
  }
  if (!have) throw UsageError("greedy_in_set: empty action set");
  return action_from_index(best);
}

}  // namespace

ActionChoice select_action(const Policy& policy,
                           const std::array<double, kNumActions>& combined_q,
                           const std::array<double, kNumActions>& survival_q,
                           std::uint64_t t, RngStream& rng) {
  switch (policy.type) {
    case PolicyType::Greedy:
      return {action_from_index(argmax_index(combined_q)), false};

    case PolicyType::EpsGreedy: {
      const double eps = policy.schedule.epsilon_at(t);
      if (eps > 0.0 && rng.uniform01() < eps) {
        return {action_from_index(rng.uniform_below(kNumActions)), true};
      }
      return {action_from_index(argmax_index(combined_q)), false};
    }

    case PolicyType::SafeEpsGreedy: {
      const ActionSet safe = safe_action_set(survival_q, policy.tau);
      const double eps = policy.schedule.epsilon_at(t);
      if (eps > 0.0 && rng.uniform01() < eps) {
        const int k = static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(safe.size())));
        return {safe.nth(k), true};
      }
      return {greedy_in_set(combined_q, safe), false};
    }
  }
  throw UsageError("select_action: unknown policy type");
}

}  // namespace dqlab
