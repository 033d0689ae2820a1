#pragma once

#include <cstdint>
#include <vector>

#include "dqlab/core.hpp"

namespace dqlab {

enum class AlphaMode {
  Constant,      // fixed step size
  VisitInverse,  // alpha = max(alpha, 1 / N(s, a)): averaging early, floored late
};

// A transition already projected onto a state encoding. The reward keeps
// both parts so the same sample can feed monolithic and decomposed updates.
struct TabularSample {
  std::uint64_t obs = 0;
  Action action = Action::Up;
  DecomposedReward reward;
  std::uint64_t next_obs = 0;
  bool terminal = false;
};

// Dense zero-initialized action-value table.
class QTable {
 public:
  QTable(std::uint64_t n_states, double alpha, double gamma,
         AlphaMode mode = AlphaMode::Constant);

  std::uint64_t n_states() const { return n_states_; }
  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  AlphaMode alpha_mode() const { return mode_; }
  std::uint64_t update_count() const { return updates_; }

  std::array<double, kNumActions> q_values(std::uint64_t s) const;
  double q(std::uint64_t s, Action a) const { return values_[offset(s, a)]; }
  double max_q(std::uint64_t s) const { return max_value(q_values(s)); }

  // Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)), bootstrap
  // dropped on terminal transitions. Returns the unscaled TD error.
  double td_update(std::uint64_t s, Action a, double reward, std::uint64_t next,
                   bool terminal);

  // Same update with a caller-chosen bootstrap value; the decomposed
  // joint-greedy rule bootstraps both component tables at one action.
  double td_update_toward(std::uint64_t s, Action a, double reward,
                          double bootstrap, bool terminal);

  std::uint32_t visits(std::uint64_t s, Action a) const { return visits_[offset(s, a)]; }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

 private:
  std::size_t offset(std::uint64_t s, Action a) const;

  std::uint64_t n_states_;
  double alpha_;
  double gamma_;
  AlphaMode mode_;
  std::uint64_t updates_ = 0;
  std::vector<double> values_;
  std::vector<std::uint32_t> visits_;
};

}  // namespace dqlab
