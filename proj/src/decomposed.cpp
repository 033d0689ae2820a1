#include "dqlab/decomposed.hpp"

namespace dqlab {

DecomposedTable::DecomposedTable(std::uint64_t n_states, double alpha, double gamma,
                                 AlphaMode mode, Bootstrap bootstrap)
    : survival_(n_states, alpha, gamma, mode),
      task_(n_states, alpha, gamma, mode),
      bootstrap_(bootstrap) {}

std::pair<double, double> DecomposedTable::update(const TabularSample& t) {
  double boot_env = 0.0;
  double boot_task = 0.0;
  if (!t.terminal) {
    if (bootstrap_ == Bootstrap::JointGreedy) {
      const std::size_t a_star = argmax_index(combined(t.next_obs));
      const Action a = action_from_index(a_star);
      boot_env = survival_.q(t.next_obs, a);
      boot_task = task_.q(t.next_obs, a);
    } else {
      boot_env = survival_.max_q(t.next_obs);
      boot_task = task_.max_q(t.next_obs);
    }
  }
  double td_env = 0.0;
  if (!survival_frozen_) {
    td_env = survival_.td_update_toward(t.obs, t.action, t.reward.env, boot_env, t.terminal);
  }
  const double td_task =
      task_.td_update_toward(t.obs, t.action, t.reward.task, boot_task, t.terminal);
  return {td_env, td_task};
}

DecomposedMlp::DecomposedMlp(std::vector<int> layer_sizes, AdamConfig cfg, double gamma,
                             Bootstrap bootstrap)
    : survival_(layer_sizes, cfg, gamma),
      task_(std::move(layer_sizes), cfg, gamma),
      bootstrap_(bootstrap) {}

void DecomposedMlp::minibatch_update(std::span<const DenseSample> batch,
                                     std::span<const double> rewards_env,
                                     std::span<const double> rewards_task) {
  if (batch.empty()) throw UsageError("DecomposedMlp: empty minibatch");
  if (rewards_env.size() != batch.size() || rewards_task.size() != batch.size()) {
    throw UsageError("DecomposedMlp: reward vectors do not match batch size");
  }

  std::vector<double> boot_env(batch.size(), 0.0);
  std::vector<double> boot_task(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].terminal) continue;
    const std::array<double, kNumActions> qe = survival_.q_values(batch[i].next_obs);
    const std::array<double, kNumActions> qt = task_.q_values(batch[i].next_obs);
    if (bootstrap_ == Bootstrap::JointGreedy) {
      const std::size_t a_star = argmax_index(combine(qe, qt));
      boot_env[i] = qe[a_star];
      boot_task[i] = qt[a_star];
    } else {
      boot_env[i] = max_value(qe);
      boot_task[i] = max_value(qt);
    }
  }

  // Rebuild per-learner batches with the routed reward component.
  std::vector<DenseSample> env_batch(batch.begin(), batch.end());
  std::vector<DenseSample> task_batch(batch.begin(), batch.end());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    env_batch[i].reward = rewards_env[i];
    task_batch[i].reward = rewards_task[i];
  }
  if (!survival_frozen_) survival_.minibatch_update_toward(env_batch, boot_env);
  task_.minibatch_update_toward(task_batch, boot_task);
}

}  // namespace dqlab
