#pragma once

#include <cstdint>
#include <random>

namespace strategio {

/// SplitMix64 finalizer; used to derive independent stream seeds.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seedable 64-bit generator (mt19937_64) with stream splitting.
///
/// Distributions are implemented here rather than through <random>'s
/// distribution classes so that draws are bit-identical across standard
/// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  /// Child generator for (seed, stream). Streams with different indices are
  /// decorrelated, and adding streams never perturbs existing ones.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  double normal();
  /// Gaussian with standard deviation `sd`, rejected outside +-`clip` * sd.
  double truncated_normal(double sd, double clip = 4.0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace strategio
