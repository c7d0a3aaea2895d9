#pragma once

// Deterministic splitmix64 generator so runs reproduce bit-for-bit across
// platforms and standard libraries.

#include <cstdint>

namespace heapguard::support {

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ull) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n); n must be positive.
  uint64_t below(uint64_t n) { return next() % n; }
  uint32_t range(uint32_t lo, uint32_t hi_inclusive) {
    return lo + static_cast<uint32_t>(below(hi_inclusive - lo + 1));
  }
  bool coin() { return next() & 1; }
  bool chance(uint32_t percent) { return below(100) < percent; }

  Rng split() { return Rng(next()); }

 private:
  uint64_t state_;
};

}  // namespace heapguard::support
