#include <doctest.h>

#include <array>
#include <cmath>
#include <set>
#include <vector>

#include "dqlab/core.hpp"
#include "dqlab/rng.hpp"

using namespace dqlab;

TEST_CASE("action encoding is pinned") {
  CHECK(action_index(Action::Up) == 0);
  CHECK(action_index(Action::Down) == 1);
  CHECK(action_index(Action::Left) == 2);
  CHECK(action_index(Action::Right) == 3);
  CHECK(action_from_index(2) == Action::Left);
  CHECK_THROWS_AS(action_from_index(4), UsageError);
  CHECK_THROWS_AS(action_from_index(-1), UsageError);
  CHECK(action_name(Action::Right) == "right");
}

TEST_CASE("argmax breaks ties toward the lowest index") {
  CHECK(argmax_index({0.0, 0.0, 0.0, 0.0}) == 0);
  CHECK(argmax_index({-1.0, 2.0, 2.0, 1.0}) == 1);
  CHECK(argmax_index({1.0, 1.0, 1.0, 2.0}) == 3);
  CHECK(max_value({-3.0, -1.0, -2.0, -1.0}) == -1.0);
}

TEST_CASE("step_pos geometry: row 0 is the bottom row") {
  GridPos p{2, 3};
  CHECK(step_pos(p, Action::Up) == GridPos{3, 3});
  CHECK(step_pos(p, Action::Down) == GridPos{1, 3});
  CHECK(step_pos(p, Action::Left) == GridPos{2, 2});
  CHECK(step_pos(p, Action::Right) == GridPos{2, 4});
}

TEST_CASE("decomposed reward total") {
  DecomposedReward r{-1.0, 0.0};
  CHECK(r.total() == -1.0);
  CHECK(DecomposedReward{0.0, 1.0}.total() == 1.0);
  CHECK(DecomposedReward{}.total() == 0.0);
}

TEST_CASE("episode trace well-formedness and discounted return") {
  EpisodeTrace<int> trace;
  trace.steps.push_back({0, Action::Up, {0.0, 0.0}, 1, false});
  trace.steps.push_back({1, Action::Up, {0.0, 1.0}, 2, false});
  trace.steps.push_back({2, Action::Up, {-1.0, 0.0}, 3, true});
  CHECK(trace.well_formed());
  // 0 + 0.5*1 + 0.25*(-1)
  CHECK(discounted_return(trace, 0.5) == doctest::Approx(0.25));

  EpisodeTrace<int> bad;
  bad.steps.push_back({0, Action::Up, {-1.0, 0.0}, 1, true});
  bad.steps.push_back({1, Action::Up, {0.0, 0.0}, 2, false});
  CHECK_FALSE(bad.well_formed());
}

TEST_CASE("rng streams are deterministic per (seed, lineage)") {
  RngStream a(42);
  RngStream b(42);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  RngStream c(42);
  RngStream d(43);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += c.next_u64() == d.next_u64();
  CHECK(same == 0);
}

TEST_CASE("substreams and children are reproducible and decorrelated") {
  RngStream root(7);
  RngStream e1 = root.substream(Substream::EnvSpawn);
  RngStream e2 = root.substream(Substream::EnvSpawn);
  CHECK(e1.next_u64() == e2.next_u64());

  RngStream x = root.substream(Substream::Exploration);
  RngStream y = root.substream(Substream::ReplaySampling);
  int same = 0;
  for (int i = 0; i < 64; ++i) same += x.next_u64() == y.next_u64();
  CHECK(same == 0);

  // Sibling children with distinct salts disagree; same salt agrees.
  RngStream c0 = root.child(0);
  RngStream c0b = root.child(0);
  RngStream c1 = root.child(1);
  CHECK(c0.next_u64() == c0b.next_u64());
  CHECK(c0.next_u64() != c1.next_u64());
}

TEST_CASE("drawing from a parent does not disturb derived streams") {
  RngStream a(99);
  RngStream before = a.substream(Substream::WeightInit);
  const std::uint64_t first = before.next_u64();
  a.next_u64();
  a.next_u64();
  RngStream after = a.substream(Substream::WeightInit);
  CHECK(after.next_u64() == first);
}

TEST_CASE("uniform_below covers [0, n) and rejects n = 0") {
  RngStream r(5);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 400; ++i) {
    const std::uint64_t v = r.uniform_below(4);
    CHECK(v < 4);
    seen.insert(v);
  }
  CHECK(seen.size() == 4);
  CHECK_THROWS_AS(r.uniform_below(0), UsageError);
}

TEST_CASE("uniform01 lies in [0, 1) with a sane mean") {
  RngStream r(11);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = r.uniform01();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    sum += v;
  }
  // 3 standard errors of the mean of U[0,1): 3 * (1/sqrt(12)) / sqrt(n).
  CHECK(std::abs(sum / n - 0.5) < 3.0 * 0.288675 / std::sqrt(double(n)));
}

TEST_CASE("uniform(lo, hi) respects its bounds") {
  RngStream r(13);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.uniform(-0.25, 0.25);
    CHECK(v >= -0.25);
    CHECK(v < 0.25);
  }
}

TEST_CASE("substream names round-trip; unknown names are rejected") {
  CHECK(substream_from_name("env-spawn") == Substream::EnvSpawn);
  CHECK(substream_from_name(substream_name(Substream::Exploration)) == Substream::Exploration);
  CHECK_THROWS_AS(substream_from_name("no-such-stream"), ConfigError);
}
