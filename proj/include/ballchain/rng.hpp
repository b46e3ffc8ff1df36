#pragma once

// Reproducible random streams for the Monte Carlo studies.
//
// Engine: std::mt19937_64, whose output sequence is fixed by the C++
// standard. Uniforms take the top 53 bits of each draw. Normal deviates come
// from the Box-Muller transform (both outputs of a pair are used, cosine
// branch first), so a stream's values depend only on its seed, never on the
// standard library's distribution implementations.
//
// Each Monte Carlo worker derives its own stream seed from
// (run seed, cell index, sample index) with splitmix64 so results do not
// depend on scheduling.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace ballchain {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t a,
                                           std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal deviate.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ballchain
