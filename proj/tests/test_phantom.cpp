#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sflick/phantom.hpp"

using namespace sflick;

namespace {

// Independent membership test: map the point into the ellipse frame by
// rotating by -angle, then compare the normalized radius.
double oracle_value(const std::vector<EllipseSpec>& es, double x, double y) {
  const double deg = 3.14159265358979323846 / 180.0;
  double v = 0.0;
  for (const auto& e : es) {
    const double ca = std::cos(-e.angle_deg * deg), sa = std::sin(-e.angle_deg * deg);
    const double px = x - e.cx, py = y - e.cy;
    const double rx = ca * px - sa * py;
    const double ry = sa * px + ca * py;
    if ((rx / e.a) * (rx / e.a) + (ry / e.b) * (ry / e.b) <= 1.0) v += e.intensity;
  }
  return v;
}

}  // namespace

TEST_CASE("empty ellipse list rasterizes to zero") {
  const Image img = rasterize({}, 32);
  for (double v : img.data.values()) CHECK(v == 0.0);
  CHECK(img.unit == Unit::relative_intensity);
}

TEST_CASE("rasterize rejects tiny grids") {
  CHECK_THROWS_AS(rasterize({}, 15), Error);
}

TEST_CASE("centred circle") {
  const Image img = rasterize({{0.0, 0.0, 0.5, 0.5, 0.0, 1.0}}, 64);
  CHECK(img.data(32, 32) == 1.0);
  CHECK(img.data(31, 31) == 1.0);
  CHECK(img.data(0, 0) == 0.0);
  CHECK(img.data(63, 63) == 0.0);
  CHECK(img.data(0, 63) == 0.0);
}

TEST_CASE("pixel centre mapping") {
  CHECK(pixel_center_coord(0, 4) == -0.75);
  CHECK(pixel_center_coord(3, 4) == 0.75);
  CHECK(pixel_center_coord(127, 255) == 0.0);
}

TEST_CASE("modified Shepp-Logan agrees with an analytic membership oracle") {
  const auto es = modified_shepp_logan();
  REQUIRE(es.size() == 10);
  // Odd size puts a pixel centre exactly at the origin.
  const int n = 255;
  const Image img = rasterize(es, n);
  CHECK(img.data(127, 127) == doctest::Approx(oracle_value(es, 0.0, 0.0)).epsilon(1e-12));
  CHECK(oracle_value(es, 0.0, 0.0) == doctest::Approx(0.2));

  const int m = 64;
  const Image small = rasterize(es, m);
  int mismatches = 0;
  for (int r = 0; r < m; ++r)
    for (int c = 0; c < m; ++c) {
      const double x = -1.0 + (2.0 * c + 1.0) / m;
      const double y = 1.0 - (2.0 * r + 1.0) / m;
      mismatches += std::abs(small.data(r, c) - oracle_value(es, x, y)) > 1e-12;
    }
  CHECK(mismatches == 0);
}

TEST_CASE("shipped table file equals the built-in table") {
  const auto file = load_ellipse_table(SFLICK_DATA_DIR "/shepp_logan_modified.txt");
  const auto builtin = modified_shepp_logan();
  REQUIRE(file.size() == builtin.size());
  for (std::size_t i = 0; i < file.size(); ++i) {
    CHECK(file[i].cx == builtin[i].cx);
    CHECK(file[i].cy == builtin[i].cy);
    CHECK(file[i].a == builtin[i].a);
    CHECK(file[i].b == builtin[i].b);
    CHECK(file[i].angle_deg == builtin[i].angle_deg);
    CHECK(file[i].intensity == builtin[i].intensity);
  }
}

TEST_CASE("ellipse table parsing") {
  std::istringstream ok("# comment\n\n0 0 0.5 0.25 10 1 # trailing comment\n");
  const auto es = parse_ellipse_table(ok);
  REQUIRE(es.size() == 1);
  CHECK(es[0].b == 0.25);
  CHECK(es[0].angle_deg == 10.0);

  std::istringstream short_line("0 0 0.5 0.25 10\n");
  CHECK_THROWS_AS(parse_ellipse_table(short_line), Error);
  std::istringstream extra("0 0 0.5 0.25 10 1 7\n");
  CHECK_THROWS_AS(parse_ellipse_table(extra), Error);
  std::istringstream zero_axis("0 0 0 0.25 10 1\n");
  CHECK_THROWS_AS(parse_ellipse_table(zero_axis), Error);
  CHECK_THROWS_AS(load_ellipse_table("/nonexistent/table.txt"), Error);
}

TEST_CASE("resolution consistency at n = 256") {
  const auto es = modified_shepp_logan();
  const int n = 256;
  const Image coarse = rasterize(es, n);
  const Image fine = rasterize(es, 2 * n);
  int differ = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double avg = 0.25 * (fine.data(2 * r, 2 * c) + fine.data(2 * r, 2 * c + 1) + fine.data(2 * r + 1, 2 * c) +
                                 fine.data(2 * r + 1, 2 * c + 1));
      differ += std::abs(avg - coarse.data(r, c)) > 1e-9;
    }
  CHECK(static_cast<double>(differ) / (n * n) < 0.05);
}

TEST_CASE("unit conversions") {
  Image hu(16, 1.0, Unit::hu);
  hu.data(0, 0) = 0.0;
  hu.data(0, 1) = -1000.0;
  const Image mu = hu_to_mu(hu, 0.02);
  CHECK(mu.unit == Unit::mu_per_mm);
  CHECK(mu.data(0, 0) == doctest::Approx(0.02).epsilon(1e-15));
  CHECK(mu.data(0, 1) == 0.0);

  Image below(16, 1.0, Unit::hu);
  below.data(3, 3) = -1500.0;
  CHECK(hu_to_mu(below, 0.02).data(3, 3) == 0.0);

  Image rel(16, 1.0, Unit::relative_intensity);
  rel.data(0, 0) = 1.0;
  const Image h = intensity_to_hu(rel);
  CHECK(h.data(0, 0) == 0.0);
  CHECK(h.data(1, 1) == -1000.0);
}

TEST_CASE("HU to mu to HU is the identity on [-1000, 1000]") {
  Image hu(21, 0.5, Unit::hu);
  auto v = hu.data.values();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = -1000.0 + 2000.0 * static_cast<double>(i) / (v.size() - 1);
  const Image back = mu_to_hu(hu_to_mu(hu, kDefaultMuWater), kDefaultMuWater);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double want = v[i];
    const double got = back.data.values()[i];
    CHECK(std::abs(got - want) <= 1e-6 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("unit checks") {
  Image rel(16, 1.0, Unit::relative_intensity);
  CHECK_THROWS_AS(hu_to_mu(rel), Error);
  CHECK_THROWS_AS(mu_to_hu(rel), Error);
  Image hu(16, 1.0, Unit::hu);
  CHECK_THROWS_AS(intensity_to_hu(hu), Error);
  try {
    hu_to_mu(hu, 0.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_argument);
  }
  try {
    mu_to_hu(hu);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::unit_mismatch);
  }
}
