#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace spherekit {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic stream derived from (seed, counter). Every sample, command or
// ladder rung draws from its own stream so results do not depend on the order
// in which independent work items are evaluated.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t counter = 0)
      : engine_(splitmix64(splitmix64(seed) ^ splitmix64(counter + 0x5851f42d4c957f2dULL))) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) {
    return std::exp(uniform(std::log(lo), std::log(hi)));
  }

  // Uniform index in [0, n), rejection sampled so it is unbiased.
  std::size_t index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace spherekit
