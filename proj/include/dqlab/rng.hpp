#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "dqlab/core.hpp"

namespace dqlab {

// Named substreams. Deriving every consumer's stream from a labeled child
// keeps a fixed seed reproducible when unrelated code adds or removes draws:
// changing exploration cannot perturb environment spawns.
enum class Substream : std::uint64_t {
  EnvSpawn = 1,
  Exploration = 2,
  ReplaySampling = 3,
  WeightInit = 4,
  EvalSpawn = 5,
  FixedEvalSet = 6,
};

Substream substream_from_name(std::string_view name);  // throws ConfigError
std::string_view substream_name(Substream s);

// Deterministic seeded stream. Draw helpers avoid std::*_distribution on
// purpose: their output is implementation-defined, and metric files must be
// byte-identical for a given seed regardless of the standard library.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  // Same (seed, label) always yields the same child; distinct labels and
  // distinct seeds yield decorrelated children.
  RngStream substream(Substream label) const;
  RngStream child(std::uint64_t salt) const;

  std::uint64_t next_u64();

  // [0, n); n must be positive. Modulo of a 64-bit draw: the bias is
  // below 2^-32 for every n used here.
  std::uint64_t uniform_below(std::uint64_t n);

  double uniform01();  // [0, 1), 53-bit resolution
  double uniform(double lo, double hi);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace dqlab
