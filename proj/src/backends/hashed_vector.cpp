#include "ol/backends/hashed_vector.hpp"

#include <cmath>

#include "ol/common/error.hpp"

namespace ol::backends {

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Vector hashed_vector(std::string_view key, std::size_t channels) {
  if (channels < 2) throw ArgumentError("hashed_vector: channel count must be at least 2");
  SplitMix64 rng(fnv1a64(key));
  static const double kScale = std::sqrt(3.0);
  Vector x(channels);
  for (auto& v : x) {
    // Separate statements fix the draw order; operands of + are unsequenced.
    double s = rng.uniform();
    s += rng.uniform();
    s += rng.uniform();
    s += rng.uniform();
    v = (s - 2.0) * kScale;
  }
  return normalized(x);
}

}  // namespace ol::backends
