#pragma once

#include <cstdint>
#include <random>

namespace corefine {

// Deterministic randomness. mt19937_64 output is fully specified by the
// standard; the helpers below avoid std distributions, whose mapping from
// engine output is implementation-defined.
class Rng {
 public:
  explicit Rng(uint64_t seed) : g_(seed) {}

  uint64_t next() { return g_(); }

  // uniform in [0, n), n > 0; rejection sampling, no modulo bias
  uint64_t below(uint64_t n) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x;
    do {
      x = g_();
    } while (x >= limit);
    return x % n;
  }

  // uniform double in [0, 1), 53-bit resolution
  double u01() { return static_cast<double>(g_() >> 11) * 0x1.0p-53; }

  // uniform double in (0, 1): safe under log()/pow()
  double u01_open() { return (static_cast<double>(g_() >> 12) + 0.5) * 0x1.0p-52; }

 private:
  std::mt19937_64 g_;
};

}  // namespace corefine
