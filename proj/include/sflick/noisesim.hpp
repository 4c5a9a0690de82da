#pragma once

#include <cstdint>

#include "sflick/core.hpp"
#include "sflick/rng.hpp"

namespace sflick {

inline constexpr double kPoissonNormalThreshold = 1000.0;

struct NoiseConfig {
  double i0 = 2.5e4;          // expected photons per ray
  std::uint64_t seed = 0;
  double count_floor = 1.0;   // counts are floored here before the log
  /// One child stream per sinogram row (derive_seed(seed, row)) instead of a
  /// single row-major stream. Deterministic either way, but the two modes
  /// give different realizations.
  bool per_row_streams = false;

  void validate() const;
};

/// lambda == 0 -> 0; lambda < 1000 -> Knuth's product-of-uniforms method
/// (evaluated as a sum of -log(u) so large lambda does not underflow);
/// otherwise round(normal(lambda, sqrt(lambda))) clamped at 0.
std::uint64_t poisson_sample(double lambda, Pcg32& rng);

/// Beer-Lambert photon counting: c ~ Poisson(i0 exp(-p)),
/// p' = -log(max(c, floor) / i0). Negative inputs are clamped to 0.
Sinogram apply_low_dose(const Sinogram& clean, const NoiseConfig& cfg);

}  // namespace sflick
