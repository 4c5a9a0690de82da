#include "sflick/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace sflick {
namespace {
void require_same_shape(const Image& a, const Image& b) {
  if (!a.data.same_shape(b.data)) throw Error(ErrorCode::dims_mismatch, "images differ in size");
}
}  // namespace

double image_range(const Image& img) {
  const auto v = img.data.values();
  if (v.empty()) return 0.0;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi - *lo;
}

PsnrResult psnr(const Image& ref, const Image& test, std::optional<double> range) {
  require_same_shape(ref, test);
  const double r = range ? *range : image_range(ref);
  if (!(r > 0.0)) throw Error(ErrorCode::invalid_argument, "reference image is constant (zero dynamic range)");
  const auto a = ref.data.values();
  const auto b = test.data.values();
  double se = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    se += d * d;
  }
  PsnrResult out;
  if (se == 0.0) {
    out.identical = true;
    out.db = std::numeric_limits<double>::infinity();
    return out;
  }
  const double mse = se / static_cast<double>(a.size());
  out.db = 10.0 * std::log10(r * r / mse);
  return out;
}

namespace {

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(size);
  const double c = 0.5 * (size - 1);
  double total = 0.0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// Separable "valid" filtering: out has (n - size + 1)^2 entries.
std::vector<double> filter_valid(const std::vector<double>& img, int n, const std::vector<double>& w) {
  const int k = static_cast<int>(w.size());
  const int m = n - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(n) * m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += w[t] * img[static_cast<std::size_t>(r) * n + c + t];
      tmp[static_cast<std::size_t>(r) * m + c] = s;
    }
  std::vector<double> out(static_cast<std::size_t>(m) * m);
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += w[t] * tmp[static_cast<std::size_t>(r + t) * m + c];
      out[static_cast<std::size_t>(r) * m + c] = s;
    }
  return out;
}

}  // namespace

double ssim(const Image& ref, const Image& test, const SsimParams& p) {
  require_same_shape(ref, test);
  if (p.window < 1 || p.window % 2 == 0) throw Error(ErrorCode::invalid_argument, "SSIM window must be odd");
  if (!(p.sigma > 0.0) || !(p.range > 0.0)) throw Error(ErrorCode::invalid_argument, "SSIM sigma and range must be positive");
  const int n = ref.size();
  if (n < p.window) throw Error(ErrorCode::dims_mismatch, "image smaller than the SSIM window");

  const auto w = gaussian_window(p.window, p.sigma);
  const auto a = ref.data.values();
  const auto b = test.data.values();
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    xx[k] = x[k] * x[k];
    yy[k] = y[k] * y[k];
    xy[k] = x[k] * y[k];
  }
  const auto mx = filter_valid(x, n, w);
  const auto my = filter_valid(y, n, w);
  const auto sxx = filter_valid(xx, n, w);
  const auto syy = filter_valid(yy, n, w);
  const auto sxy = filter_valid(xy, n, w);

  const double c1 = (p.k1 * p.range) * (p.k1 * p.range);
  const double c2 = (p.k2 * p.range) * (p.k2 * p.range);
  double total = 0.0;
  for (std::size_t k = 0; k < mx.size(); ++k) {
    const double vx = sxx[k] - mx[k] * mx[k];
    const double vy = syy[k] - my[k] * my[k];
    const double cov = sxy[k] - mx[k] * my[k];
    const double num = (2.0 * mx[k] * my[k] + c1) * (2.0 * cov + c2);
    const double den = (mx[k] * mx[k] + my[k] * my[k] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / static_cast<double>(mx.size());
}

double ssim(const Image& ref, const Image& test) {
  SsimParams p;
  p.range = image_range(ref);
  if (!(p.range > 0.0)) throw Error(ErrorCode::invalid_argument, "reference image is constant (zero dynamic range)");
  return ssim(ref, test, p);
}

}  // namespace sflick
