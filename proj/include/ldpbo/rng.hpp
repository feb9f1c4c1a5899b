#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ldpbo {

/// Seeded random source. Uniform draws are built from raw 64-bit output so
/// sequences are reproducible across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on the open interval (0, 1).
  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform on [lo, hi].
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_open(); }

  /// Uniform integer on [0, n).
  std::size_t index(std::size_t n);

  bool bernoulli(double p) { return uniform_open() < p; }

  double normal();
  double student_t(double dof);

  std::uint64_t next_u64() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Deterministic seed derivation used to give each (algorithm, trial, purpose)
/// its own independent stream.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag, std::uint64_t a = 0,
                          std::uint64_t b = 0);

}  // namespace ldpbo
