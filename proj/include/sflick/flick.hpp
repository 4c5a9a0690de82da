#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sflick/core.hpp"

namespace sflick {

struct DetectorCell {
  int view = 0;
  int det = 0;
  friend bool operator==(const DetectorCell&, const DetectorCell&) = default;
  friend auto operator<=>(const DetectorCell&, const DetectorCell&) = default;
};

/// Conjugate-ray indexing for a full-circle parallel-beam scan.
///
/// Cell (i, j) and (i + M/2 mod M, N-1-j) measure the same line. Pairs are
/// numbered t = i*N + j over the first half of the views, so the canonical
/// member of pair t is always the one with the smaller view index.
class ConjugateMap {
 public:
  explicit ConjugateMap(const ScanGeometry& geometry);

  std::uint64_t pair_count() const noexcept { return pairs_; }
  DetectorCell conjugate(DetectorCell cell) const;
  std::pair<DetectorCell, DetectorCell> pair(std::uint64_t t) const;
  std::uint64_t pair_index(DetectorCell cell) const;

 private:
  int views_;
  int dets_;
  std::uint64_t pairs_;
};

DetectorCell conjugate_index(const ScanGeometry& geom, int view, int det);

inline constexpr std::uint64_t kDefaultFlickDraws = 400000;

/// L uniform draws with replacement over the k pairs; each draw toggles its
/// pair, so a pair ends up swapped iff it was hit an odd number of times.
struct FlickPlan {
  std::uint64_t draws = kDefaultFlickDraws;
  std::uint64_t seed = 0;
};

/// mask[t] == 1 iff pair t is swapped.
std::vector<std::uint8_t> expand_plan(const FlickPlan& plan, std::uint64_t pair_count);
double swapped_fraction(const std::vector<std::uint8_t>& mask);

Sinogram apply_swap_mask(const Sinogram& sino, const std::vector<std::uint8_t>& mask);
Sinogram flick(const Sinogram& sino, const FlickPlan& plan);

struct ConjugateStats {
  double max_abs = 0.0;
  double mean_abs = 0.0;
  double rms = 0.0;
};

/// Statistics of |s(c) - s(conj(c))| over the k pairs.
ConjugateStats conjugate_discrepancy(const Sinogram& sino);

}  // namespace sflick
