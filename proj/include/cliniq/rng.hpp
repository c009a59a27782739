#pragma once

#include <cstdint>

namespace cliniq {

// SplitMix64 (Steele, Lea & Flood 2014). Used everywhere a seed appears:
// unlike std::mt19937 + std::uniform_int_distribution, its output for a given
// seed is fully pinned by the algorithm, so fixtures, cohorts and generated
// suites are byte-identical across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Unbiased draw in [0, n). n must be nonzero.
  uint64_t below(uint64_t n) {
    uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      uint64_t x = next();
      if (x >= threshold) return x % n;
    }
  }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Child seed for an independent derived stream.
  uint64_t fork() { return next(); }

 private:
  uint64_t state_;
};

}  // namespace cliniq
