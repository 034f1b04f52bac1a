#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace swarm {

inline constexpr double kPi = 3.14159265358979323846;

// Seeded random source with hand-pinned output transforms so that a given
// seed produces the same stream on every build of this project.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform draw in [0, 1), 53-bit resolution.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform angle in (-pi, pi].
  double angle() { return kPi - 2.0 * kPi * uniform(); }

  // Gaussian via Box-Muller; consumes exactly two uniforms per draw.
  double normal(double mean, double stddev) {
    double u1 = 1.0 - uniform();  // (0, 1], keeps the log finite
    double u2 = uniform();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    return mean + stddev * z;
  }

  // Unbiased uniform index in [0, n) (Lemire's method).
  std::size_t index(std::size_t n) {
    using u128 = unsigned __int128;
    std::uint64_t x = engine_();
    u128 m = static_cast<u128>(x) * static_cast<u128>(n);
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = engine_();
        m = static_cast<u128>(x) * static_cast<u128>(n);
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

// Splitmix64 step, used to derive independent sub-seeds from a base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace swarm
