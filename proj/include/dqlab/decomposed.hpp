#pragma once

#include <utility>

#include "dqlab/mlp.hpp"
#include "dqlab/qtable.hpp"

namespace dqlab {

// How the two component estimators pick their bootstrap action.
enum class Bootstrap {
  IndependentMax,  // each component maxes over its own values
  JointGreedy,     // both bootstrap at argmax of the combined values
};

inline std::array<double, kNumActions> combine(
    const std::array<double, kNumActions>& a,
    const std::array<double, kNumActions>& b) {
  std::array<double, kNumActions> out{};
  for (std::size_t i = 0; i < kNumActions; ++i) out[i] = a[i] + b[i];
  return out;
}

// Pair of tables learning the environment (survival) and task components of
// the reward separately. Greedy control always reads the combined values.
class DecomposedTable {
 public:
  DecomposedTable(std::uint64_t n_states, double alpha, double gamma,
                  AlphaMode mode = AlphaMode::Constant,
                  Bootstrap bootstrap = Bootstrap::IndependentMax);

  const QTable& survival() const { return survival_; }
  const QTable& task() const { return task_; }
  QTable& survival() { return survival_; }
  QTable& task() { return task_; }
  Bootstrap bootstrap_mode() const { return bootstrap_; }
  bool survival_frozen() const { return survival_frozen_; }

  // Stops all further survival updates; the table keeps serving values.
  void freeze_survival() { survival_frozen_ = true; }

  std::array<double, kNumActions> combined(std::uint64_t s) const {
    return combine(survival_.q_values(s), task_.q_values(s));
  }

  // Routes the split reward to the two learners. Returns (survival TD error,
  // task TD error); the survival error is 0 while frozen.
  std::pair<double, double> update(const TabularSample& t);

 private:
  QTable survival_;
  QTable task_;
  Bootstrap bootstrap_;
  bool survival_frozen_ = false;
};

// Same structure over function approximators. Both networks share the input
// encoding; the survival net can be frozen and reused across tasks.
class DecomposedMlp {
 public:
  DecomposedMlp(std::vector<int> layer_sizes, AdamConfig cfg, double gamma,
                Bootstrap bootstrap = Bootstrap::IndependentMax);

  MlpLearner& survival() { return survival_; }
  MlpLearner& task() { return task_; }
  const MlpLearner& survival() const { return survival_; }
  const MlpLearner& task() const { return task_; }
  Bootstrap bootstrap_mode() const { return bootstrap_; }
  bool survival_frozen() const { return survival_frozen_; }
  void freeze_survival() { survival_frozen_ = true; }

  std::array<double, kNumActions> combined(std::span<const double> obs) const {
    return combine(survival_.q_values(obs), task_.q_values(obs));
  }

  // One minibatch against both learners with the reward split per sample.
  // rewards_env/rewards_task override the scalar reward field of the batch.
  void minibatch_update(std::span<const DenseSample> batch,
                        std::span<const double> rewards_env,
                        std::span<const double> rewards_task);

 private:
  MlpLearner survival_;
  MlpLearner task_;
  Bootstrap bootstrap_;
  bool survival_frozen_ = false;
};

}  // namespace dqlab
