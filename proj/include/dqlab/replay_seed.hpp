#pragma once

#include <functional>

#include "dqlab/gridworld.hpp"
#include "dqlab/replay.hpp"

namespace dqlab {

using GridTransition = Transition<GridState>;
using GridPolicyFn = std::function<Action(const GridState&, RngStream&)>;

// Rolls episodes of `env` under `policy` and pushes exactly n transitions.
// Rewards carry the task wired into `env`, so seeding for a new phase must
// use the environment configured for that phase. Timeouts end the episode
// but are stored as non-terminal, matching how the learners bootstrap.
std::size_t seed_gridworld_buffer(ReplayBuffer<GridTransition>& buffer,
                                  const GridworldEnv& env, std::size_t n,
                                  const GridPolicyFn& policy, RngStream& rng);

}  // namespace dqlab
