#include "dqlab/replay_seed.hpp"

namespace dqlab {

std::size_t seed_gridworld_buffer(ReplayBuffer<GridTransition>& buffer,
                                  const GridworldEnv& env, std::size_t n,
                                  const GridPolicyFn& policy, RngStream& rng) {
  if (n > buffer.capacity()) {
    throw ConfigError("seed_gridworld_buffer: seeding more transitions than the "
                      "buffer holds would silently evict the earliest ones");
  }
  std::size_t pushed = 0;
  while (pushed < n) {
    GridState state = env.reset(rng);
    while (pushed < n) {
      const Action a = policy(state, rng);
      const StepOutcome<GridState> out = env.step(state, a, rng);
      buffer.push(GridTransition{state, a, out.reward, out.state, out.absorbing});
      ++pushed;
      if (out.episode_over) break;
      state = out.state;
    }
  }
  return pushed;
}

}  // namespace dqlab
