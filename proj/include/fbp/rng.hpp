#pragma once

#include <cstdint>

#include "fbp/error.hpp"

namespace fbp {

// SplitMix64 (Steele, Lea & Flood 2014; the seeding generator of the
// xoshiro family). State is a single 64-bit counter advanced by the golden
// gamma; each output is a bijective mix of the counter, so the stream is
// fully determined by the seed on every platform. Reference outputs are
// listed in docs/rng.md and pinned in tests/unit/test_tensor.cpp.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n), unbiased (rejection of the short tail).
  std::uint64_t next_below(std::uint64_t n) {
    if (n == 0) throw ArgumentError("rng: next_below requires n >= 1");
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  // Derives an independent child stream; used to give each subsystem
  // (shuffles, crops, dropout) its own sequence from one run seed.
  Rng split() { return Rng(next_u64()); }

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace fbp
