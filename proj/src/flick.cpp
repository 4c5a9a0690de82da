#include "sflick/flick.hpp"

#include <cmath>

#include "sflick/rng.hpp"

namespace sflick {
namespace {
void require_even(const Sinogram& s) {
  if (s.data.rows() % 2 != 0 || s.data.rows() == 0)
    throw Error(ErrorCode::odd_views, "conjugate pairing needs an even number of views");
}
}  // namespace

ConjugateMap::ConjugateMap(const ScanGeometry& geometry)
    : views_(geometry.n_views), dets_(geometry.n_dets) {
  geometry.validate();
  pairs_ = static_cast<std::uint64_t>(views_) * dets_ / 2;
}

DetectorCell ConjugateMap::conjugate(DetectorCell cell) const {
  if (cell.view < 0 || cell.view >= views_ || cell.det < 0 || cell.det >= dets_)
    throw Error(ErrorCode::invalid_argument, "detector cell out of range");
  return {(cell.view + views_ / 2) % views_, dets_ - 1 - cell.det};
}

std::pair<DetectorCell, DetectorCell> ConjugateMap::pair(std::uint64_t t) const {
  if (t >= pairs_) throw Error(ErrorCode::invalid_argument, "pair index out of range");
  const DetectorCell first{static_cast<int>(t / dets_), static_cast<int>(t % dets_)};
  return {first, conjugate(first)};
}

std::uint64_t ConjugateMap::pair_index(DetectorCell cell) const {
  const DetectorCell other = conjugate(cell);  // also range-checks cell
  if (cell.view >= views_ / 2) cell = other;
  return static_cast<std::uint64_t>(cell.view) * dets_ + cell.det;
}

DetectorCell conjugate_index(const ScanGeometry& geom, int view, int det) {
  return ConjugateMap(geom).conjugate({view, det});
}

std::vector<std::uint8_t> expand_plan(const FlickPlan& plan, std::uint64_t pair_count) {
  std::vector<std::uint8_t> mask(pair_count, 0);
  if (pair_count == 0) return mask;
  Pcg32 rng(plan.seed);
  for (std::uint64_t d = 0; d < plan.draws; ++d) mask[rng.uniform_u(pair_count)] ^= 1u;
  return mask;
}

double swapped_fraction(const std::vector<std::uint8_t>& mask) {
  if (mask.empty()) return 0.0;
  std::uint64_t n = 0;
  for (auto m : mask) n += m;
  return static_cast<double>(n) / static_cast<double>(mask.size());
}

Sinogram apply_swap_mask(const Sinogram& sino, const std::vector<std::uint8_t>& mask) {
  require_even(sino);
  const std::size_t views = sino.data.rows(), dets = sino.data.cols();
  const std::size_t half = views / 2;
  if (mask.size() != half * dets) throw Error(ErrorCode::dims_mismatch, "swap mask size does not match sinogram");
  Sinogram out = sino;
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < half; ++i) {
    for (std::size_t j = 0; j < dets; ++j) {
      if (mask[i * dets + j]) std::swap(out.data(i, j), out.data(i + half, dets - 1 - j));
    }
  }
  return out;
}

Sinogram flick(const Sinogram& sino, const FlickPlan& plan) {
  require_even(sino);
  const std::uint64_t k = static_cast<std::uint64_t>(sino.data.rows()) * sino.data.cols() / 2;
  return apply_swap_mask(sino, expand_plan(plan, k));
}

ConjugateStats conjugate_discrepancy(const Sinogram& sino) {
  require_even(sino);
  const std::size_t views = sino.data.rows(), dets = sino.data.cols();
  const std::size_t half = views / 2;
  ConjugateStats st;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    for (std::size_t j = 0; j < dets; ++j) {
      const double d = std::abs(sino.data(i, j) - sino.data(i + half, dets - 1 - j));
      st.max_abs = std::max(st.max_abs, d);
      sum += d;
      sum2 += d * d;
    }
  }
  const double k = static_cast<double>(half * dets);
  if (k > 0) {
    st.mean_abs = sum / k;
    st.rms = std::sqrt(sum2 / k);
  }
  return st;
}

}  // namespace sflick
