#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

#include "ol/common/matrix.hpp"

namespace ol::backends {

// Deterministic unit-norm embedding of an arbitrary key; the stand-in for
// learned embeddings in every reference backend. The full construction is
// documented in docs/hashed_vector.md so that independent implementations
// agree bit for bit:
//
//   seed   = FNV-1a 64 of the key bytes
//   draws  = splitmix64 stream seeded with `seed`
//   u      = (draw >> 11) * 2^-53
//   x_i    = (u_1 + u_2 + u_3 + u_4 - 2) * sqrt(3)   (four draws per value)
//   v      = x / ||x||_2                              (sums in index order)
Vector hashed_vector(std::string_view key, std::size_t channels);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

}  // namespace ol::backends
