#pragma once

#include <cstdint>
#include <vector>

#include "dqlab/cliffwalk.hpp"
#include "dqlab/core.hpp"

namespace dqlab {

// Deterministic finite MDP with dense state indices. Terminal arcs carry a
// reward but no successor; `next` is ignored on them.
struct Arc {
  std::uint32_t next = 0;
  DecomposedReward reward;
  bool terminal = false;
};

struct EnumerableMdp {
  std::uint64_t n_states = 0;
  std::vector<Arc> arcs;  // arcs[s * kNumActions + action]
  double gamma = 0.95;

  const Arc& arc(std::uint64_t s, Action a) const {
    return arcs[s * kNumActions + action_index(a)];
  }
};

// Dense enumeration of the cliff world. States are the non-absorbing cells
// in cell-index order; the mapping back to cells is returned alongside.
struct CliffMdp {
  EnumerableMdp mdp;
  std::vector<std::size_t> cell_of_state;  // dense id -> cell index
  std::vector<int> state_of_cell;          // cell index -> dense id, -1 if absorbing
};
CliffMdp build_cliffwalk_mdp(const CliffwalkEnv& env, double gamma);

struct ValueIterationResult {
  std::vector<double> v;
  int iterations = 0;
};

// Sup-norm fixed-point iteration on V. Throws NumericalError if the sweep
// cap is hit before the residual drops below tol.
ValueIterationResult value_iteration(const EnumerableMdp& mdp, double tol = 1e-10,
                                     int max_iters = 100000);

// Joint backup of the split values: both components evaluate at the action
// maximizing their sum. The summed fixed point matches plain value iteration.
struct DecomposedValueResult {
  std::vector<double> v_env;
  std::vector<double> v_task;
  int iterations = 0;
};
DecomposedValueResult decomposed_value_iteration(const EnumerableMdp& mdp,
                                                 double tol = 1e-10,
                                                 int max_iters = 100000);

// Action values induced by a state-value vector.
std::vector<std::array<double, kNumActions>> q_from_values(const EnumerableMdp& mdp,
                                                           const std::vector<double>& v);

// Greedy policy w.r.t. v, lowest action index on ties.
std::vector<Action> greedy_policy(const EnumerableMdp& mdp, const std::vector<double>& v);

}  // namespace dqlab
