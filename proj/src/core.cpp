#include "sflick/core.hpp"

#include <cmath>
#include <numbers>

namespace sflick {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::io: return "io";
    case ErrorCode::bad_magic: return "bad_magic";
    case ErrorCode::unsupported_version: return "unsupported_version";
    case ErrorCode::truncated_payload: return "truncated_payload";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::unit_mismatch: return "unit_mismatch";
    case ErrorCode::dims_mismatch: return "dims_mismatch";
    case ErrorCode::kind_mismatch: return "kind_mismatch";
    case ErrorCode::odd_views: return "odd_views";
    case ErrorCode::config: return "config";
    case ErrorCode::numeric: return "numeric";
  }
  return "unknown";
}

const char* unit_name(Unit u) noexcept {
  switch (u) {
    case Unit::relative_intensity: return "relative";
    case Unit::hu: return "hu";
    case Unit::mu_per_mm: return "mu";
  }
  return "unknown";
}

bool all_finite(std::span<const double> v) noexcept {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double ScanGeometry::view_angle_rad(int view) const {
  return view * (2.0 * std::numbers::pi / n_views);
}

void ScanGeometry::validate() const {
  if (n_views <= 0 || n_dets <= 0)
    throw Error(ErrorCode::invalid_argument, "geometry needs positive view and detector counts");
  if (n_views % 2 != 0)
    throw Error(ErrorCode::odd_views, "number of views must be even");
  if (!(det_spacing > 0.0) || !std::isfinite(det_spacing))
    throw Error(ErrorCode::invalid_argument, "detector spacing must be positive");
}

void ScanGeometry::validate_with_image() const {
  validate();
  if (!has_image_grid())
    throw Error(ErrorCode::invalid_argument, "geometry has no image grid (size / pixel spacing)");
}

Sinogram::Sinogram(ScanGeometry g, Matrix d) : geometry(g), data(std::move(d)) {
  if (data.rows() != static_cast<std::size_t>(g.n_views) ||
      data.cols() != static_cast<std::size_t>(g.n_dets))
    throw Error(ErrorCode::dims_mismatch, "sinogram data does not match geometry");
}

Sinogram::Sinogram(ScanGeometry g)
    : Sinogram(g, Matrix(static_cast<std::size_t>(g.n_views), static_cast<std::size_t>(g.n_dets))) {}

Image::Image(double spacing, Unit u, Matrix d) : pixel_spacing(spacing), unit(u), data(std::move(d)) {
  if (data.rows() != data.cols())
    throw Error(ErrorCode::dims_mismatch, "image must be square");
}

Image::Image(int size, double spacing, Unit u)
    : Image(spacing, u, Matrix(static_cast<std::size_t>(size), static_cast<std::size_t>(size))) {}

}  // namespace sflick
