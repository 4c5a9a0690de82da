#pragma once

#include <optional>
#include <span>
#include <vector>

#include "sflick/core.hpp"

namespace sflick {

/// Ray-driven parallel-beam projector with bilinear interpolation.
///
/// Ray (view i, bin j) is the line s_j * n + t * d with n = (cos th, sin th),
/// d = (-sin th, cos th). It is sampled at t = k * h, h = pixel_spacing / 2,
/// for every integer k whose sample falls within one pixel of the grid, and
/// each sample is weighted by h. Because the sample grid is symmetric in t,
/// a ray and its conjugate (view + M/2, bin N-1-j) visit the same points.
/// The backprojector scatters exactly the same weights, so it is the matrix
/// transpose of the forward operator.
///
/// Internally images live in a zero-bordered buffer of side size + 2*kPad.
class ParallelProjector {
 public:
  static constexpr int kPad = 2;

  explicit ParallelProjector(const ScanGeometry& geometry);

  const ScanGeometry& geometry() const noexcept { return geom_; }
  int padded_side() const noexcept { return side_; }
  std::size_t padded_size() const noexcept { return static_cast<std::size_t>(side_) * side_; }

  std::vector<double> pad(const Matrix& img) const;
  Matrix crop(std::span<const double> padded) const;

  /// out[j] = sum of weighted samples along ray (view, j).
  void forward_view(int view, std::span<const double> padded_img, std::span<double> out) const;
  /// padded_img += A_view^T row.
  void back_view(int view, std::span<const double> row, std::span<double> padded_img) const;
  /// num += A_view^T row and den += A_view^T 1 in one sweep.
  void back_view_pair(int view, std::span<const double> row, std::span<double> num,
                      std::span<double> den) const;

  Matrix forward(const Matrix& img) const;
  Matrix back(const Matrix& sino) const;

 private:
  struct Ray {
    double u0, v0;  // padded fractional pixel coords at t = 0
    long kmin, kmax;
  };
  const Ray& ray(int view, int det) const { return rays_[static_cast<std::size_t>(view) * geom_.n_dets + det]; }
  // Rays j, j + q, j + 2q, ... are walked together; q = 0 disables grouping.
  static constexpr int kRayLanes = 2;
  int lane_stride() const noexcept;

  ScanGeometry geom_;
  int side_;
  double step_;  // sample spacing along the ray, mm
  std::vector<double> du_, dv_;  // per-view increments per sample in pixel units
  std::vector<Ray> rays_;
};

Sinogram forward_project(const Image& mu, const ScanGeometry& geom);
Image back_project(const Sinogram& sino, const ScanGeometry& geom);

struct SartConfig {
  int iterations = 50;
  double relaxation = 1.0;
  bool nonneg = true;
  double epsilon = 1e-8;
  /// Record ||p - A x|| before the first sweep and after each sweep.
  bool track_residual = false;

  void validate() const;
};

struct SartResult {
  Image image;  // mu_per_mm
  std::vector<double> residual_norms;
};

SartResult sart(const Sinogram& sino, const ScanGeometry& geom, const SartConfig& cfg,
                const std::optional<Image>& init = std::nullopt);

}  // namespace sflick
