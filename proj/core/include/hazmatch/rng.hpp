#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hazmatch {

// Reproducible random streams. A stream is identified by a 64-bit seed;
// child streams are derived from (seed, index) through a SplitMix64 mix,
// so replicate k sees the same stream regardless of worker count or task
// scheduling. Variate transforms are hand-rolled on top of the raw 64-bit
// engine output because std:: distributions are implementation-defined.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(mix(seed ^ kPhi)) {}

  // Independent stream for sub-task `index` of this stream.
  RngStream child(std::uint64_t index) const { return RngStream(child_seed(index)); }

  // Seed the child stream would use; pure, does not advance the stream.
  std::uint64_t child_seed(std::uint64_t index) const { return mix(seed_ ^ mix(index + 1)); }

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1), 53-bit resolution
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform on (0, 1), never exactly 0
  double uniform01_open() {
    double u;
    do {
      u = uniform01();
    } while (u == 0.0);
    return u;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double exponential(double rate) { return -std::log(uniform01_open()) / rate; }

  int bernoulli(double p) { return uniform01() < p ? 1 : 0; }

  // uniform over {0, 1, ..., n-1} by rejection (unbiased)
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Box-Muller, one value per call
  double normal() {
    const double u1 = uniform01_open();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  static constexpr std::uint64_t kPhi = 0x9E3779B97F4A7C15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z += kPhi;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace hazmatch
