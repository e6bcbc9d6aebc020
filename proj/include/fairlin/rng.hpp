// Deterministic random streams.
//
// All randomness in the library flows through RandomStream, a thin wrapper
// over std::mt19937_64 (whose output sequence is fixed by the C++ standard).
// Uniforms and normals are derived by hand rather than through the
// <random> distributions, whose algorithms are implementation-defined, so
// identical seeds give identical streams on every platform.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace fairlin {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of run `run_index` under `master_seed`.
constexpr std::uint64_t derive_seed(std::uint64_t master_seed, std::uint64_t run_index) {
  return splitmix64(splitmix64(master_seed) ^ splitmix64(run_index + 0x632be59bd9b4e019ULL));
}

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed), seed_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_open_zero() { return 1.0 - uniform(); }

  bool fair_coin() { return (engine_() >> 63) != 0; }

  /// Uniform index in [0, n) by rejection (unbiased).
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return v % n;
  }

  /// Standard normal via Box-Muller; consumes exactly two draws.
  double normal() {
    const double u1 = uniform_open_zero();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t seed_;
};

}  // namespace fairlin
