#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace dqlab {

// FNV-1a 64: cheap content hash for determinism checks (snapshot identity,
// frozen-weight audits, manifest entries). Not cryptographic.
class Fnv1a64 {
 public:
  void update(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001B3ull;
    }
  }

  void update_u64(std::uint64_t v) { update(&v, sizeof(v)); }
  void update_f64(double v) { update_u64(std::bit_cast<std::uint64_t>(v)); }
  void update_str(std::string_view s) { update(s.data(), s.size()); }

  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xCBF29CE484222325ull;
};

std::string hash_hex(std::uint64_t h);

inline std::uint64_t hash_bytes(std::string_view bytes) {
  Fnv1a64 h;
  h.update_str(bytes);
  return h.digest();
}

}  // namespace dqlab
