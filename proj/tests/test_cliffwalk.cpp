#include <doctest.h>

#include <cmath>
#include <vector>

#include "dqlab/cliffwalk.hpp"

using namespace dqlab;

TEST_CASE("default geometry: 12x4, cliff along the bottom interior") {
  const CliffwalkEnv env(CliffConfig{});
  CHECK(env.n_cells() == 48);
  CHECK(env.is_goal({0, 11}));
  CHECK_FALSE(env.is_cliff({0, 0}));
  CHECK_FALSE(env.is_cliff({0, 11}));
  for (int col = 1; col <= 10; ++col) CHECK(env.is_cliff({0, col}));
  CHECK_FALSE(env.is_cliff({1, 5}));
  // 48 cells minus 10 cliff cells minus the goal.
  CHECK(env.enumerate_states().size() == 37);
}

TEST_CASE("reset starts at the bottom-left corner") {
  const CliffwalkEnv env(CliffConfig{});
  const CliffState s = env.reset();
  CHECK(s.agent == GridPos{0, 0});
  CHECK(s.steps_elapsed == 0);
  CHECK_FALSE(s.terminated);
}

TEST_CASE("stepping is deterministic and walls hold the agent") {
  const CliffwalkEnv env(CliffConfig{});
  CliffState s = env.reset();

  StepOutcome<CliffState> out = env.step(s, Action::Left);
  CHECK(out.state.agent == GridPos{0, 0});
  CHECK(out.reward == DecomposedReward{0.0, 0.0});
  CHECK_FALSE(out.episode_over);

  out = env.step(s, Action::Up);
  CHECK(out.state.agent == GridPos{1, 0});
  CHECK(out.reward == DecomposedReward{0.0, 0.0});
}

TEST_CASE("the cliff penalizes through the environment reward") {
  const CliffwalkEnv env(CliffConfig{});
  const CliffState s = env.reset();
  const StepOutcome<CliffState> out = env.step(s, Action::Right);  // (0,1) is cliff
  CHECK(out.reward.env == -1.0);
  CHECK(out.reward.task == 0.0);
  CHECK(out.absorbing);
  CHECK(out.episode_over);
  CHECK(out.state.terminated);
  CHECK_THROWS_AS(env.step(out.state, Action::Up), UsageError);
}

TEST_CASE("the goal pays through the task reward") {
  const CliffwalkEnv env(CliffConfig{});
  CliffState s = env.reset();
  s.agent = {1, 11};
  const StepOutcome<CliffState> out = env.step(s, Action::Down);
  CHECK(out.reward.env == 0.0);
  CHECK(out.reward.task == 1.0);
  CHECK(out.absorbing);
  CHECK(out.episode_over);
}

TEST_CASE("timeout ends the episode without absorbing") {
  CliffConfig cfg;
  cfg.max_steps = 3;
  const CliffwalkEnv env(cfg);
  CliffState s = env.reset();
  s.agent = {2, 5};
  s.steps_elapsed = 2;
  const StepOutcome<CliffState> out = env.step(s, Action::Up);
  CHECK(out.episode_over);
  CHECK_FALSE(out.absorbing);
  CHECK(out.state.terminated);
}

TEST_CASE("the optimal start return is gamma^12 by direct path enumeration") {
  // The shortest safe route from (0,0) to the goal is up, 11 right, down:
  // 13 moves, but the reward arrives on the 13th transition so the
  // discounted return is gamma^12. Verify by brute force over short action
  // sequences that no policy does better at gamma = 0.95.
  const CliffwalkEnv env(CliffConfig{});
  const double gamma = 0.95;
  const double expected = std::pow(gamma, 12);

  // Breadth-first search over safe cells. A goal arrival as the (d+1)-th
  // move earns reward discounted by gamma^d, so the best return is
  // gamma^(shortest safe distance of a goal-adjacent cell).
  std::vector<int> dist(static_cast<std::size_t>(env.n_cells()), -1);
  std::vector<GridPos> frontier{env.reset().agent};
  dist[env.cell_index(frontier[0])] = 0;
  int best_goal_moves = -1;
  while (!frontier.empty()) {
    std::vector<GridPos> next;
    for (const GridPos p : frontier) {
      const int d = dist[env.cell_index(p)];
      for (Action a : kAllActions) {
        GridPos q = step_pos(p, a);
        if (!env.in_bounds(q)) continue;
        if (env.is_cliff(q)) continue;
        if (env.is_goal(q)) {
          if (best_goal_moves < 0) best_goal_moves = d + 1;
          continue;
        }
        if (dist[env.cell_index(q)] == -1) {
          dist[env.cell_index(q)] = d + 1;
          next.push_back(q);
        }
      }
    }
    if (best_goal_moves >= 0) break;  // BFS order: first arrival is shortest
    frontier = std::move(next);
  }
  REQUIRE(best_goal_moves == 13);
  CHECK(std::pow(gamma, best_goal_moves - 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.54036).epsilon(1e-4));
}

TEST_CASE("rendering marks the hazard row and the goal") {
  CliffConfig cfg;
  cfg.width = 4;
  cfg.height = 2;
  cfg.goal = {0, 3};
  const CliffwalkEnv env(cfg);
  const CliffState s = env.reset();
  CHECK(render_cliff(s, cfg) ==
        "....\n"
        "A##G\n");
}

TEST_CASE("config validation rejects degenerate layouts") {
  CliffConfig cfg;
  cfg.width = 1;
  CHECK_THROWS_AS(CliffwalkEnv{cfg}, ConfigError);
  cfg = CliffConfig{};
  cfg.start = cfg.goal;
  CHECK_THROWS_AS(CliffwalkEnv{cfg}, ConfigError);
}
