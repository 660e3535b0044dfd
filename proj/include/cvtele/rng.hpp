#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace cvtele::rng {

/// SplitMix64 finaliser; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, run, slot), so results never depend on execution order.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : base_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ull))) {}

  constexpr std::uint64_t bits(std::uint64_t run, std::uint64_t slot) const {
    return mix64(mix64(base_ ^ mix64(run)) + slot);
  }

  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t run, std::uint64_t slot) const {
    return (static_cast<double>(bits(run, slot) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Two independent standard normals (Box-Muller) for counter (run, pair).
  std::pair<double, double> normal_pair(std::uint64_t run, std::uint64_t pair) const {
    const double u1 = uniform(run, 2 * pair);
    const double u2 = uniform(run, 2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    return {r * std::cos(theta), r * std::sin(theta)};
  }

 private:
  std::uint64_t base_;
};

}  // namespace cvtele::rng
