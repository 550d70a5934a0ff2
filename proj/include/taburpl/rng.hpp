#pragma once

#include <cstdint>
#include <random>

namespace taburpl {

/// splitmix64 finalizer; used to derive independent stream seeds from one
/// user seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) noexcept;

/// Deterministic random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions are implemented here rather than taken from
/// <random> because the standard leaves their algorithms unspecified, and
/// every output of this project must be reproducible across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal (Marsaglia polar method).
  double normal();

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  double exponential();

  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace taburpl
