#pragma once

#include <cmath>
#include <cstdint>

#include "meshfit/types.hpp"

namespace meshfit {

/// splitmix64 finalizer; full-period bijection on 64-bit integers.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and a tag.
inline seed_t derive_seed(seed_t seed, std::uint64_t tag) {
  return mix64(mix64(seed) ^ mix64(tag ^ 0xD1B54A32D192ED03ull));
}

/// Counter-based uniform generator: draw i of a keyed stream is a pure
/// function of (key, i), so results do not depend on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(seed_t seed) : key_(mix64(seed ^ 0xA0761D6478BD642Full)) {}

  /// Uniform double in [0, 1).
  double uniform(std::uint64_t counter) const {
    const std::uint64_t z = mix64(key_ ^ mix64(counter));
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller on two counter draws.
  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1 + 0x1.0p-60));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace meshfit
