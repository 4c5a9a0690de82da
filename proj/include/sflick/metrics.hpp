#pragma once

#include <optional>

#include "sflick/core.hpp"

namespace sflick {

/// PSNR in dB; `identical` is set (and db left at +inf) when MSE is exactly 0.
struct PsnrResult {
  bool identical = false;
  double db = 0.0;
};

/// R = max(ref) - min(ref) unless an explicit range is given.
PsnrResult psnr(const Image& ref, const Image& test, std::optional<double> range = std::nullopt);

struct SsimParams {
  double k1 = 0.01;
  double k2 = 0.03;
  int window = 11;
  double sigma = 1.5;
  double range = 1.0;  // dynamic range R
};

/// Mean SSIM over every position where the Gaussian window fits inside the
/// image (no padding). Symmetric in its arguments for a fixed range.
double ssim(const Image& ref, const Image& test, const SsimParams& params);

/// SSIM with R taken from the reference image's range.
double ssim(const Image& ref, const Image& test);

double image_range(const Image& img);

}  // namespace sflick
