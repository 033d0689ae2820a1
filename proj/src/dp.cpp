#include "dqlab/dp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dqlab {

CliffMdp build_cliffwalk_mdp(const CliffwalkEnv& env, double gamma) {
  CliffMdp out;
  out.mdp.gamma = gamma;
  out.cell_of_state = env.enumerate_states();
  out.state_of_cell.assign(static_cast<std::size_t>(env.n_cells()), -1);
  for (std::size_t i = 0; i < out.cell_of_state.size(); ++i) {
    out.state_of_cell[out.cell_of_state[i]] = static_cast<int>(i);
  }

  out.mdp.n_states = out.cell_of_state.size();
  out.mdp.arcs.resize(out.mdp.n_states * kNumActions);
  const int width = env.config().width;
  for (std::size_t s = 0; s < out.cell_of_state.size(); ++s) {
    const int cell = static_cast<int>(out.cell_of_state[s]);
    const CliffState from{GridPos{cell / width, cell % width}, 0, false};
    for (Action a : kAllActions) {
      const StepOutcome<CliffState> step = env.step(from, a);
      Arc& arc = out.mdp.arcs[s * kNumActions + action_index(a)];
      arc.reward = step.reward;
      arc.terminal = step.absorbing;
      if (!step.absorbing) {
        const std::size_t next_cell = env.cell_index(step.state.agent);
        arc.next = static_cast<std::uint32_t>(out.state_of_cell[next_cell]);
      }
    }
  }
  return out;
}

ValueIterationResult value_iteration(const EnumerableMdp& mdp, double tol, int max_iters) {
  std::vector<double> v(mdp.n_states, 0.0);
  for (int it = 1; it <= max_iters; ++it) {
    double delta = 0.0;
    for (std::uint64_t s = 0; s < mdp.n_states; ++s) {
      double best = -std::numeric_limits<double>::infinity();
      for (Action a : kAllActions) {
        const Arc& arc = mdp.arc(s, a);
        const double q = arc.reward.total() + (arc.terminal ? 0.0 : mdp.gamma * v[arc.next]);
        if (q > best) best = q;
      }
      delta = std::max(delta, std::abs(best - v[s]));
      v[s] = best;
    }
    if (delta < tol) return {std::move(v), it};
  }
  throw NumericalError("value_iteration: no convergence within iteration cap");
}

DecomposedValueResult decomposed_value_iteration(const EnumerableMdp& mdp, double tol,
                                                 int max_iters) {
  std::vector<double> ve(mdp.n_states, 0.0);
  std::vector<double> vt(mdp.n_states, 0.0);
  for (int it = 1; it <= max_iters; ++it) {
    double delta = 0.0;
    for (std::uint64_t s = 0; s < mdp.n_states; ++s) {
      std::array<double, kNumActions> qe{};
      std::array<double, kNumActions> qt{};
      for (Action a : kAllActions) {
        const Arc& arc = mdp.arc(s, a);
        const double boot_e = arc.terminal ? 0.0 : mdp.gamma * ve[arc.next];
        const double boot_t = arc.terminal ? 0.0 : mdp.gamma * vt[arc.next];
        qe[action_index(a)] = arc.reward.env + boot_e;
        qt[action_index(a)] = arc.reward.task + boot_t;
      }
      std::array<double, kNumActions> sum{};
      for (std::size_t i = 0; i < kNumActions; ++i) sum[i] = qe[i] + qt[i];
      const std::size_t a_star = argmax_index(sum);
      delta = std::max(delta, std::abs(qe[a_star] - ve[s]));
      delta = std::max(delta, std::abs(qt[a_star] - vt[s]));
      ve[s] = qe[a_star];
      vt[s] = qt[a_star];
    }
    if (delta < tol) return {std::move(ve), std::move(vt), it};
  }
  throw NumericalError("decomposed_value_iteration: no convergence within iteration cap");
}

std::vector<std::array<double, kNumActions>> q_from_values(const EnumerableMdp& mdp,
                                                           const std::vector<double>& v) {
  std::vector<std::array<double, kNumActions>> q(mdp.n_states);
  for (std::uint64_t s = 0; s < mdp.n_states; ++s) {
    for (Action a : kAllActions) {
      const Arc& arc = mdp.arc(s, a);
      q[s][action_index(a)] =
          arc.reward.total() + (arc.terminal ? 0.0 : mdp.gamma * v[arc.next]);
    }
  }
  return q;
}

std::vector<Action> greedy_policy(const EnumerableMdp& mdp, const std::vector<double>& v) {
  const std::vector<std::array<double, kNumActions>> q = q_from_values(mdp, v);
  std::vector<Action> pi(mdp.n_states, Action::Up);
  for (std::uint64_t s = 0; s < mdp.n_states; ++s) {
    pi[s] = action_from_index(argmax_index(q[s]));
  }
  return pi;
}

}  // namespace dqlab
