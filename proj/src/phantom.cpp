#include "sflick/phantom.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sflick {

bool EllipseSpec::contains(double x, double y) const {
  const double t = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(t), s = std::sin(t);
  const double dx = x - cx, dy = y - cy;
  const double u = (dx * c + dy * s) / a;
  const double v = (-dx * s + dy * c) / b;
  return u * u + v * v <= 1.0;
}

std::vector<EllipseSpec> modified_shepp_logan() {
  //       cx      cy      a       b     angle  intensity
  return {
      {0.0, 0.0, 0.69, 0.92, 0.0, 1.0},
      {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.8},
      {0.22, 0.0, 0.11, 0.31, -18.0, -0.2},
      {-0.22, 0.0, 0.16, 0.41, 18.0, -0.2},
      {0.0, 0.35, 0.21, 0.25, 0.0, 0.1},
      {0.0, 0.1, 0.046, 0.046, 0.0, 0.1},
      {0.0, -0.1, 0.046, 0.046, 0.0, 0.1},
      {-0.08, -0.605, 0.046, 0.023, 0.0, 0.1},
      {0.0, -0.606, 0.023, 0.023, 0.0, 0.1},
      {0.06, -0.605, 0.023, 0.046, 0.0, 0.1},
  };
}

std::vector<EllipseSpec> parse_ellipse_table(std::istream& in) {
  std::vector<EllipseSpec> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    EllipseSpec e;
    if (!(ls >> e.cx)) continue;  // blank or comment-only
    if (!(ls >> e.cy >> e.a >> e.b >> e.angle_deg >> e.intensity))
      throw Error(ErrorCode::invalid_argument, "ellipse table line " + std::to_string(lineno) + ": expected 6 fields");
    std::string extra;
    if (ls >> extra)
      throw Error(ErrorCode::invalid_argument, "ellipse table line " + std::to_string(lineno) + ": trailing data");
    if (!(e.a > 0.0) || !(e.b > 0.0))
      throw Error(ErrorCode::invalid_argument, "ellipse table line " + std::to_string(lineno) + ": semi-axes must be positive");
    out.push_back(e);
  }
  return out;
}

std::vector<EllipseSpec> load_ellipse_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open ellipse table " + path.string());
  return parse_ellipse_table(in);
}

double pixel_center_coord(int index, int n) { return -1.0 + (2.0 * index + 1.0) / n; }

Image rasterize(const std::vector<EllipseSpec>& ellipses, int n, double pixel_spacing) {
  if (n < 16) throw Error(ErrorCode::invalid_argument, "phantom size must be at least 16");
  Image img(n, pixel_spacing, Unit::relative_intensity);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < n; ++r) {
    const double y = -pixel_center_coord(r, n);
    for (int c = 0; c < n; ++c) {
      const double x = pixel_center_coord(c, n);
      double v = 0.0;
      for (const auto& e : ellipses)
        if (e.contains(x, y)) v += e.intensity;
      img.data(r, c) = v;
    }
  }
  return img;
}

namespace {
void require_unit(const Image& img, Unit u) {
  if (img.unit != u)
    throw Error(ErrorCode::unit_mismatch,
                std::string("expected ") + unit_name(u) + " image, got " + unit_name(img.unit));
}

void require_mu_water(double mu_water) {
  if (!(mu_water > 0.0) || !std::isfinite(mu_water))
    throw Error(ErrorCode::invalid_argument, "mu_water must be positive");
}
}  // namespace

Image intensity_to_hu(const Image& img) {
  require_unit(img, Unit::relative_intensity);
  Image out = img;
  out.unit = Unit::hu;
  for (double& v : out.data.values()) v = 1000.0 * (v - 1.0);
  return out;
}

Image hu_to_mu(const Image& img, double mu_water) {
  require_unit(img, Unit::hu);
  require_mu_water(mu_water);
  Image out = img;
  out.unit = Unit::mu_per_mm;
  for (double& v : out.data.values()) v = std::max(0.0, mu_water * (1.0 + v / 1000.0));
  return out;
}

Image mu_to_hu(const Image& img, double mu_water) {
  require_unit(img, Unit::mu_per_mm);
  require_mu_water(mu_water);
  Image out = img;
  out.unit = Unit::hu;
  for (double& v : out.data.values()) v = 1000.0 * (v / mu_water - 1.0);
  return out;
}

}  // namespace sflick
