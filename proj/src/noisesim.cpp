#include "sflick/noisesim.hpp"

#include <cmath>

#include "sflick/log.hpp"

namespace sflick {

void NoiseConfig::validate() const {
  if (!(i0 > 0.0) || !std::isfinite(i0)) throw Error(ErrorCode::invalid_argument, "i0 must be positive");
  if (!(count_floor >= 1.0)) throw Error(ErrorCode::invalid_argument, "count_floor must be at least 1");
}

std::uint64_t poisson_sample(double lambda, Pcg32& rng) {
  if (!(lambda > 0.0)) return 0;
  if (lambda < kPoissonNormalThreshold) {
    // Knuth: count uniforms until their product drops below exp(-lambda).
    std::uint64_t k = 0;
    double sum = 0.0;
    for (;;) {
      sum += -std::log(1.0 - rng.uniform());
      if (sum > lambda) return k;
      ++k;
    }
  }
  const double v = std::round(lambda + std::sqrt(lambda) * rng.normal());
  return v <= 0.0 ? 0 : static_cast<std::uint64_t>(v);
}

namespace {
double measure(double p, const NoiseConfig& cfg, Pcg32& rng) {
  const double lambda = cfg.i0 * std::exp(-p);
  const double c = static_cast<double>(poisson_sample(lambda, rng));
  return -std::log(std::max(c, cfg.count_floor) / cfg.i0);
}
}  // namespace

Sinogram apply_low_dose(const Sinogram& clean, const NoiseConfig& cfg) {
  cfg.validate();
  if (!all_finite(clean.data.values())) throw Error(ErrorCode::non_finite, "sinogram has non-finite values");
  Sinogram out = clean;
  std::size_t clamped = 0;
  for (double& v : out.data.values()) {
    if (v < 0.0) {
      v = 0.0;
      ++clamped;
    }
  }
  if (clamped > 0) log_line("noise: clamped " + std::to_string(clamped) + " negative line integrals to 0");

  const std::size_t rows = out.data.rows();
  if (cfg.per_row_streams) {
#pragma omp parallel for schedule(static)
    for (std::size_t r = 0; r < rows; ++r) {
      Pcg32 rng(derive_seed(cfg.seed, r));
      for (double& v : out.data.row(r)) v = measure(v, cfg, rng);
    }
  } else {
    Pcg32 rng(cfg.seed);
    for (std::size_t r = 0; r < rows; ++r)
      for (double& v : out.data.row(r)) v = measure(v, cfg, rng);
  }
  return out;
}

}  // namespace sflick
