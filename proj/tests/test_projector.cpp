#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sflick/flick.hpp"
#include "sflick/metrics.hpp"
#include "sflick/phantom.hpp"
#include "sflick/projector.hpp"
#include "sflick/rng.hpp"

using namespace sflick;

namespace {

ScanGeometry make_geom(int views, int dets, double ds, double ps, int n) { return {views, dets, ds, ps, n}; }

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Pcg32 rng(seed);
  Matrix m(r, c);
  for (double& v : m.values()) v = rng.uniform() - 0.5;
  return m;
}

double dot(const Matrix& a, const Matrix& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

double norm(const Matrix& a) { return std::sqrt(dot(a, a)); }

// Independent line integral: bilinear samples of the unpadded image (zero
// outside) at spacing h along the ray, over a range that covers the grid.
double oracle_ray(const Matrix& img, const ScanGeometry& g, int view, int det, double h) {
  const double th = view * 2.0 * std::numbers::pi / g.n_views;
  const double s = g.det_offset(det);
  const int n = g.image_size;
  const double ps = g.pixel_spacing;
  const double half = 0.5 * (n - 1);
  auto at = [&](long r, long c) { return (r < 0 || c < 0 || r >= n || c >= n) ? 0.0 : img(r, c); };
  const long kmax = static_cast<long>(std::ceil((n + 4) * ps / h));
  double sum = 0.0;
  for (long k = -kmax; k <= kmax; ++k) {
    const double t = k * h;
    const double x = s * std::cos(th) - t * std::sin(th);
    const double y = s * std::sin(th) + t * std::cos(th);
    const double cf = x / ps + half;
    const double rf = half - y / ps;
    const long c0 = static_cast<long>(std::floor(cf)), r0 = static_cast<long>(std::floor(rf));
    const double fc = cf - c0, fr = rf - r0;
    sum += (1 - fr) * ((1 - fc) * at(r0, c0) + fc * at(r0, c0 + 1)) + fr * ((1 - fc) * at(r0 + 1, c0) + fc * at(r0 + 1, c0 + 1));
  }
  return sum * h;
}

Image disk_mu(int n, double ps, double radius_mm, double mu) {
  const double rn = radius_mm / (0.5 * n * ps);
  Image rel = rasterize({{0.0, 0.0, rn, rn, 0.0, 1.0}}, n, ps);
  for (double& v : rel.data.values()) v *= mu;
  return Image(ps, Unit::mu_per_mm, rel.data);
}

}  // namespace

TEST_CASE("zero image projects to zero") {
  const auto g = make_geom(36, 41, 1.0, 1.0, 32);
  const Sinogram s = forward_project(Image(32, 1.0, Unit::mu_per_mm), g);
  for (double v : s.data.values()) CHECK(v == 0.0);
}

TEST_CASE("projector matches an independent ray oracle") {
  const auto g = make_geom(24, 37, 0.9, 1.0, 32);
  const Matrix img = random_matrix(32, 32, 5);
  const ParallelProjector p(g);
  const Matrix sino = p.forward(img);
  double worst = 0.0;
  for (int v = 0; v < g.n_views; ++v)
    for (int d = 0; d < g.n_dets; ++d) worst = std::max(worst, std::abs(sino(v, d) - oracle_ray(img, g, v, d, 0.5)));
  CHECK(worst < 1e-9);
}

TEST_CASE("halving the sample step barely changes projections") {
  const int n = 128;
  const auto g = make_geom(30, 185, 1.0, 1.0, n);
  const Image mu = hu_to_mu(intensity_to_hu(rasterize(modified_shepp_logan(), n, 1.0)));
  const Matrix coarse = ParallelProjector(g).forward(mu.data);
  Matrix fine(g.n_views, g.n_dets);
  for (int v = 0; v < g.n_views; ++v)
    for (int d = 0; d < g.n_dets; ++d) fine(v, d) = oracle_ray(mu.data, g, v, d, 0.25);
  Matrix diff = coarse;
  for (std::size_t i = 0; i < diff.size(); ++i) diff.values()[i] -= fine.values()[i];
  CHECK(norm(diff) / norm(fine) < 0.002);
}

TEST_CASE("disk chord lengths") {
  const double ps = 0.5, r = 30.0, mu = 0.02;
  const int n = 160;
  const auto g = make_geom(8, 121, 0.5, ps, n);
  const Sinogram s = forward_project(disk_mu(n, ps, r, mu), g);
  for (int v = 0; v < g.n_views; ++v)
    for (int d = 0; d < g.n_dets; ++d) {
      const double off = g.det_offset(d);
      if (std::abs(off) > 0.5 * r) continue;
      const double want = 2.0 * mu * std::sqrt(r * r - off * off);
      CHECK(std::abs(s.data(v, d) - want) < 0.01 * want);
    }
}

TEST_CASE("rotationally symmetric object gives identical view profiles") {
  const int n = 96;
  Image g_img(n, 1.0, Unit::mu_per_mm);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double x = c - 0.5 * (n - 1), y = r - 0.5 * (n - 1);
      g_img.data(r, c) = std::exp(-(x * x + y * y) / (2 * 10.0 * 10.0));
    }
  const auto g = make_geom(72, 99, 1.0, 1.0, n);
  const Sinogram s = forward_project(g_img, g);
  double peak = 0.0;
  for (double v : s.data.values()) peak = std::max(peak, v);
  double worst = 0.0;
  for (int v = 1; v < g.n_views; ++v)
    for (int d = 0; d < g.n_dets; ++d) worst = std::max(worst, std::abs(s.data(v, d) - s.data(0, d)));
  CHECK(worst / peak < 1e-3);
}

TEST_CASE("backprojector is the adjoint of the projector") {
  const auto g = make_geom(90, 95, 1.0, 1.0, 64);
  const ParallelProjector p(g);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = random_matrix(64, 64, 2 * seed);
    const Matrix y = random_matrix(90, 95, 2 * seed + 1);
    const double lhs = dot(p.forward(x), y);
    const double rhs = dot(x, p.back(y));
    CHECK(std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs)) < 1e-6);
  }
}

TEST_CASE("single pixel only reaches nearby bins") {
  const int n = 48;
  const auto g = make_geom(36, 71, 1.0, 1.0, n);
  Matrix img(n, n);
  const int pr = 10, pc = 30;
  img(pr, pc) = 1.0;
  const Matrix s = ParallelProjector(g).forward(img);
  const double x = pc - 0.5 * (n - 1), y = 0.5 * (n - 1) - pr;
  for (int v = 0; v < g.n_views; ++v) {
    const double th = v * 2.0 * std::numbers::pi / g.n_views;
    const double centre = x * std::cos(th) + y * std::sin(th);
    double total = 0.0;
    for (int d = 0; d < g.n_dets; ++d) {
      total += s(v, d);
      if (std::abs(g.det_offset(d) - centre) > std::sqrt(2.0) + 1e-9) CHECK(s(v, d) == 0.0);
    }
    CHECK(total > 0.0);
  }
}

TEST_CASE("projection is linear") {
  const auto g = make_geom(20, 45, 1.0, 1.0, 32);
  const ParallelProjector p(g);
  const Matrix a = random_matrix(32, 32, 1), b = random_matrix(32, 32, 2);
  Matrix combo(32, 32);
  for (std::size_t i = 0; i < combo.size(); ++i) combo.values()[i] = 2.5 * a.values()[i] - 0.75 * b.values()[i];
  const Matrix pa = p.forward(a), pb = p.forward(b), pc = p.forward(combo);
  for (std::size_t i = 0; i < pc.size(); ++i)
    CHECK(pc.values()[i] == doctest::Approx(2.5 * pa.values()[i] - 0.75 * pb.values()[i]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("conjugate rays agree on a noiseless phantom") {
  const int n = 256;
  const auto g = make_geom(360, 363, 1.0, 200.0 / n, n);
  const Image mu = hu_to_mu(intensity_to_hu(rasterize(modified_shepp_logan(), n, g.pixel_spacing)));
  const Sinogram s = forward_project(mu, g);
  const auto stats = conjugate_discrepancy(s);
  double peak = 0.0;
  for (double v : s.data.values()) peak = std::max(peak, std::abs(v));
  REQUIRE(peak > 0.0);
  CHECK(stats.max_abs / peak < 0.02);
}

TEST_CASE("dimension and unit checks") {
  const auto g = make_geom(8, 9, 1.0, 1.0, 16);
  CHECK_THROWS_AS(forward_project(Image(17, 1.0, Unit::mu_per_mm), g), Error);
  CHECK_THROWS_AS(forward_project(Image(16, 1.0, Unit::hu), g), Error);
  CHECK_THROWS_AS(back_project(Sinogram(make_geom(8, 10, 1.0, 0, 0)), g), Error);
  SartConfig bad;
  bad.relaxation = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("SART on a zero sinogram stays at zero") {
  const auto g = make_geom(36, 45, 1.0, 1.0, 32);
  SartConfig cfg;
  cfg.iterations = 3;
  const auto res = sart(Sinogram(g), g, cfg);
  CHECK(res.image.unit == Unit::mu_per_mm);
  for (double v : res.image.data.values()) CHECK(v == 0.0);
}

TEST_CASE("SART reconstructs a clean phantom") {
  const int n = 128;
  const auto g = make_geom(360, 185, 200.0 / n, 200.0 / n, n);
  const Image hu = intensity_to_hu(rasterize(modified_shepp_logan(), n, g.pixel_spacing));
  const Image mu = hu_to_mu(hu);
  const Sinogram s = forward_project(mu, g);
  SartConfig cfg;
  cfg.iterations = 20;
  cfg.track_residual = true;
  const auto res = sart(s, g, cfg);
  const auto p = psnr(hu, mu_to_hu(res.image));
  CHECK(p.db > 28.0);
  REQUIRE(res.residual_norms.size() == 21);
  for (std::size_t i = 1; i < res.residual_norms.size(); ++i)
    CHECK(res.residual_norms[i] <= res.residual_norms[i - 1] * (1.0 + 1e-9));
}

TEST_CASE("cached and per-view SART normalisers agree") {
  // One sweep never caches, so two chained single sweeps take the other path.
  const int n = 48;
  const auto g = make_geom(60, 71, 1.0, 1.0, n);
  const Image mu = hu_to_mu(intensity_to_hu(rasterize(modified_shepp_logan(), n, 1.0)));
  const Sinogram s = forward_project(mu, g);
  SartConfig one;
  one.iterations = 1;
  SartConfig two = one;
  two.iterations = 2;
  const Image chained = sart(s, g, one, sart(s, g, one).image).image;
  const Image direct = sart(s, g, two).image;
  // The cache holds float32 weights; water is about 0.02 per mm.
  double worst = 0.0;
  for (std::size_t i = 0; i < direct.data.size(); ++i)
    worst = std::max(worst, std::abs(chained.data.values()[i] - direct.data.values()[i]));
  CHECK(worst < 1e-8);
}
