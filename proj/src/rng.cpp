#include "dqlab/rng.hpp"

namespace dqlab {
namespace {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Disjoint salt spaces for labeled substreams vs numbered children.
constexpr std::uint64_t kSubstreamSpace = 0x5353'0000'0000'0000ull;
constexpr std::uint64_t kChildSpace = 0x4348'0000'0000'0000ull;

}  // namespace

Substream substream_from_name(std::string_view name) {
  if (name == "env-spawn") return Substream::EnvSpawn;
  if (name == "exploration") return Substream::Exploration;
  if (name == "replay-sampling") return Substream::ReplaySampling;
  if (name == "weight-init") return Substream::WeightInit;
  if (name == "eval-spawn") return Substream::EvalSpawn;
  if (name == "fixed-eval-set") return Substream::FixedEvalSet;
  throw ConfigError("unknown rng substream label: " + std::string(name));
}

std::string_view substream_name(Substream s) {
  switch (s) {
    case Substream::EnvSpawn: return "env-spawn";
    case Substream::Exploration: return "exploration";
    case Substream::ReplaySampling: return "replay-sampling";
    case Substream::WeightInit: return "weight-init";
    case Substream::EvalSpawn: return "eval-spawn";
    case Substream::FixedEvalSet: return "fixed-eval-set";
  }
  throw ConfigError("unknown rng substream value");
}

RngStream::RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

RngStream RngStream::substream(Substream label) const {
  const std::uint64_t salt = kSubstreamSpace | static_cast<std::uint64_t>(label);
  return RngStream(splitmix64(seed_ ^ splitmix64(salt)));
}

RngStream RngStream::child(std::uint64_t salt) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(kChildSpace ^ salt)));
}

std::uint64_t RngStream::next_u64() { return engine_(); }

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
  if (n == 0) throw UsageError("uniform_below(0)");
  return next_u64() % n;
}

double RngStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

}  // namespace dqlab
