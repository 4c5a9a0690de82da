#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sflick {

enum class ErrorCode : int {
  invalid_argument = 1,
  io,
  bad_magic,
  unsupported_version,
  truncated_payload,
  non_finite,
  unit_mismatch,
  dims_mismatch,
  kind_mismatch,
  odd_views,
  config,
  numeric,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Unit codes match the on-disk SFLK unit field.
enum class Unit : std::uint32_t {
  relative_intensity = 0,  // also "dimensionless" for sinograms
  hu = 1,
  mu_per_mm = 2,
};

const char* unit_name(Unit u) noexcept;

/// Dense row-major 2-D array.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Grid(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw Error(ErrorCode::dims_mismatch, "grid data size does not match dimensions");
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  bool same_shape(const Grid& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = Grid<double>;

bool all_finite(std::span<const double> v) noexcept;

/// Parallel-beam acquisition over a full circle.
///
/// View i sits at angle i * 360/n_views degrees; detector bin j is centred at
/// (j - (n_dets-1)/2) * det_spacing. The image grid fields may be left at zero
/// when a sinogram is loaded from disk; projector entry points require them.
struct ScanGeometry {
  int n_views = 0;
  int n_dets = 0;
  double det_spacing = 0.0;    // mm
  double pixel_spacing = 0.0;  // mm
  int image_size = 0;          // pixels per side

  double view_step_deg() const { return 360.0 / n_views; }
  double view_angle_deg(int view) const { return view * view_step_deg(); }
  double view_angle_rad(int view) const;
  double det_offset(int det) const { return (det - 0.5 * (n_dets - 1)) * det_spacing; }
  bool has_image_grid() const { return image_size > 0 && pixel_spacing > 0.0; }

  /// Checks the sinogram-side fields (views, detectors, spacing).
  void validate() const;
  /// Also checks the image grid; throws if it is unset.
  void validate_with_image() const;

  friend bool operator==(const ScanGeometry&, const ScanGeometry&) = default;
};

struct Sinogram {
  ScanGeometry geometry;
  Matrix data;  // rows = views, cols = detector bins

  Sinogram() = default;
  Sinogram(ScanGeometry g, Matrix d);
  explicit Sinogram(ScanGeometry g);  // zero-filled
};

struct Image {
  double pixel_spacing = 1.0;
  Unit unit = Unit::relative_intensity;
  Matrix data;  // size x size

  Image() = default;
  Image(double spacing, Unit u, Matrix d);
  Image(int size, double spacing, Unit u);  // zero-filled
  int size() const noexcept { return static_cast<int>(data.rows()); }
};

}  // namespace sflick
