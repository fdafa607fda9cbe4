#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace promptrel {

// Deterministic random source shared by training, sampling, and evaluation.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the C++
// standard. The value transforms below (unit uniform, bounded integer,
// normal) are spelled out explicitly instead of going through <random>
// distributions, because distribution algorithms are implementation-defined
// and would break cross-toolchain reproducibility of seeded runs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1): the top 53 bits of one engine output.
  double uniform_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Unbiased uniform integer in [0, n), n >= 1. Masked rejection sampling:
  // draw 64-bit words, keep the low bits that cover n, retry on overshoot.
  std::uint64_t uniform_below(std::uint64_t n) {
    assert(n > 0);
    if (n == 1) return 0;
    std::uint64_t mask = n - 1;
    mask |= mask >> 1;
    mask |= mask >> 2;
    mask |= mask >> 4;
    mask |= mask >> 8;
    mask |= mask >> 16;
    mask |= mask >> 32;
    while (true) {
      std::uint64_t v = next_u64() & mask;
      if (v < n) return v;
    }
  }

  // Normal(mean, stddev) via the Box-Muller transform. Consumes exactly two
  // engine outputs per call; the sine branch of the pair is discarded so the
  // generator carries no hidden state between calls.
  double normal(double mean, double stddev) {
    double u1 = 1.0 - uniform_unit();  // (0, 1]; keeps the log finite
    double u2 = uniform_unit();
    double radius = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * radius * std::cos(2.0 * kPi * u2);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 engine_;
};

// In-place Fisher-Yates shuffle driven by Rng::uniform_below.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace promptrel
