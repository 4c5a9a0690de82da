#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "sflick/flick.hpp"
#include "sflick/noisesim.hpp"
#include "sflick/phantom.hpp"
#include "sflick/projector.hpp"

using namespace sflick;

namespace {

Sinogram ramp(int views, int dets) {
  Sinogram s(ScanGeometry{views, dets, 1.0});
  for (std::size_t i = 0; i < s.data.size(); ++i) s.data.values()[i] = static_cast<double>(i) + 0.5;
  return s;
}

}  // namespace

TEST_CASE("conjugate of the first cell at full scale") {
  const ScanGeometry g{1160, 672, 0.6};
  CHECK(conjugate_index(g, 0, 0) == DetectorCell{580, 671});
  CHECK(ConjugateMap(g).pair_count() == 389760u);
}

TEST_CASE("conjugation is an involution without fixed points") {
  const ConjugateMap map(ScanGeometry{8, 6, 1.0});
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 6; ++j) {
      const DetectorCell c{i, j};
      const DetectorCell o = map.conjugate(c);
      CHECK(map.conjugate(o) == c);
      CHECK(o != c);
      CHECK(map.pair_index(c) == map.pair_index(o));
      seen.insert(map.pair_index(c));
    }
  CHECK(seen.size() == 24u);
  CHECK(*seen.rbegin() == 23u);
}

TEST_CASE("pair enumeration for four views and two bins") {
  const ConjugateMap map(ScanGeometry{4, 2, 1.0});
  REQUIRE(map.pair_count() == 4u);
  using P = std::pair<DetectorCell, DetectorCell>;
  CHECK(map.pair(0) == P{{0, 0}, {2, 1}});
  CHECK(map.pair(1) == P{{0, 1}, {2, 0}});
  CHECK(map.pair(2) == P{{1, 0}, {3, 1}});
  CHECK(map.pair(3) == P{{1, 1}, {3, 0}});
  CHECK_THROWS_AS(map.pair(4), Error);
  CHECK_THROWS_AS(map.conjugate({4, 0}), Error);
}

TEST_CASE("odd view counts are rejected") {
  CHECK_THROWS_AS(ConjugateMap(ScanGeometry{7, 4, 1.0}), Error);
  Sinogram odd(ScanGeometry{8, 4, 1.0});
  odd.data = Matrix(7, 4);
  try {
    flick(odd, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::odd_views);
  }
}

TEST_CASE("zero draws leave the sinogram untouched") {
  const Sinogram s = ramp(8, 6);
  CHECK(flick(s, {0, 5}).data == s.data);
}

TEST_CASE("the same plan applied twice restores the input") {
  const Sinogram s = ramp(40, 17);
  const FlickPlan plan{300, 9};
  const Sinogram once = flick(s, plan);
  CHECK(once.data != s.data);
  CHECK(flick(once, plan).data == s.data);
}

TEST_CASE("flicking permutes values within conjugate pairs") {
  const Sinogram s = ramp(40, 17);
  const Sinogram f = flick(s, {500, 3});
  const ConjugateMap map(s.geometry);
  for (std::uint64_t t = 0; t < map.pair_count(); ++t) {
    const auto [a, b] = map.pair(t);
    const std::multiset<double> before{s.data(a.view, a.det), s.data(b.view, b.det)};
    const std::multiset<double> after{f.data(a.view, a.det), f.data(b.view, b.det)};
    CHECK(before == after);
  }
  auto sorted = [](const Matrix& m) {
    std::vector<double> v(m.values().begin(), m.values().end());
    std::sort(v.begin(), v.end());
    return v;
  };
  CHECK(sorted(s.data) == sorted(f.data));
}

TEST_CASE("constant sinogram has no conjugate discrepancy") {
  Sinogram s(ScanGeometry{20, 9, 1.0});
  for (double& v : s.data.values()) v = 3.25;
  const auto st = conjugate_discrepancy(flick(s, {100, 1}));
  CHECK(st.max_abs == 0.0);
  CHECK(st.rms == 0.0);
}

TEST_CASE("noise shows up as conjugate discrepancy") {
  const int n = 64;
  const ScanGeometry g{90, 91, 1.0, 1.0, n};
  const Sinogram clean = forward_project(hu_to_mu(intensity_to_hu(rasterize(modified_shepp_logan(), n))), g);
  NoiseConfig cfg;
  cfg.i0 = 5000;
  cfg.seed = 4;
  const Sinogram noisy = apply_low_dose(clean, cfg);
  CHECK(conjugate_discrepancy(noisy).rms > 10.0 * conjugate_discrepancy(clean).rms);
  CHECK(conjugate_discrepancy(noisy).rms > 0.0);
}

TEST_CASE("swapped fraction at the default draw count") {
  const ConjugateMap map(ScanGeometry{1160, 672, 0.6});
  const double expected = 0.5 * (1.0 - std::exp(-2.0 * static_cast<double>(kDefaultFlickDraws) / map.pair_count()));
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double f = swapped_fraction(expand_plan({kDefaultFlickDraws, seed}, map.pair_count()));
    CHECK(f >= 0.35);
    CHECK(f <= 0.65);
    CHECK(std::abs(f - expected) < 0.005);
  }
}

TEST_CASE("swap masks are not spatially correlated") {
  const std::uint64_t k = 389760;
  const auto mask = expand_plan({kDefaultFlickDraws, 12}, k);
  double mean = swapped_fraction(mask);
  double cov = 0.0, var = 0.0;
  for (std::uint64_t t = 0; t + 1 < k; ++t) {
    cov += (mask[t] - mean) * (mask[t + 1] - mean);
    var += (mask[t] - mean) * (mask[t] - mean);
  }
  CHECK(std::abs(cov / var) < 0.05);
}

TEST_CASE("flicking commutes with scaling") {
  const Sinogram s = ramp(16, 11);
  Sinogram scaled = s;
  for (double& v : scaled.data.values()) v *= -2.5;
  Sinogram a = flick(s, {40, 7});
  for (double& v : a.data.values()) v *= -2.5;
  CHECK(a.data == flick(scaled, {40, 7}).data);
}

TEST_CASE("mask size is checked") {
  const Sinogram s = ramp(8, 6);
  CHECK_THROWS_AS(apply_swap_mask(s, std::vector<std::uint8_t>(23, 0)), Error);
}
