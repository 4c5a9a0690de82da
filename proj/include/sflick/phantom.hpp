#pragma once

#include <filesystem>
#include <istream>
#include <vector>

#include "sflick/core.hpp"

namespace sflick {

/// One ellipse of an additive phantom, in normalized [-1, 1] coordinates.
struct EllipseSpec {
  double cx = 0.0;
  double cy = 0.0;
  double a = 1.0;  // semi-axis along the rotated x direction
  double b = 1.0;
  double angle_deg = 0.0;  // counter-clockwise
  double intensity = 0.0;

  bool contains(double x, double y) const;
};

inline constexpr double kDefaultMuWater = 0.0227;  // mm^-1, roughly 50 keV

/// The 10-ellipse modified Shepp-Logan table (enhanced soft-tissue contrast).
std::vector<EllipseSpec> modified_shepp_logan();

/// Parses "cx cy a b angle intensity" lines; '#' starts a comment.
std::vector<EllipseSpec> parse_ellipse_table(std::istream& in);
std::vector<EllipseSpec> load_ellipse_table(const std::filesystem::path& path);

/// Point-samples the ellipses at pixel centres. Pixel (r, c) has centre
/// x = -1 + (2c+1)/n, y = 1 - (2r+1)/n (row 0 at the top).
Image rasterize(const std::vector<EllipseSpec>& ellipses, int n, double pixel_spacing = 1.0);

double pixel_center_coord(int index, int n);

Image intensity_to_hu(const Image& img);
Image hu_to_mu(const Image& img, double mu_water = kDefaultMuWater);
Image mu_to_hu(const Image& img, double mu_water = kDefaultMuWater);

}  // namespace sflick
