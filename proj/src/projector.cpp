#include "sflick/projector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sflick {
namespace {

// Backprojection partitions views into this many fixed chunks, each with a
// private accumulator, summed in chunk order. The result does not depend on
// the thread count.
constexpr int kBackChunks = 16;

// Upper bound on the per-view SART normaliser cache.
constexpr std::size_t kSartCacheBytes = std::size_t{512} << 20;

// k range for which lo <= x0 + k*dx <= hi. Returns false when empty.
bool clip_axis(double x0, double dx, double lo, double hi, double& kmin, double& kmax) {
  if (std::abs(dx) < 1e-12) {
    if (x0 < lo || x0 > hi) return false;
    return true;  // unbounded along this axis
  }
  double k1 = (lo - x0) / dx;
  double k2 = (hi - x0) / dx;
  if (k1 > k2) std::swap(k1, k2);
  kmin = std::max(kmin, k1);
  kmax = std::min(kmax, k2);
  return kmin <= kmax;
}

}  // namespace

ParallelProjector::ParallelProjector(const ScanGeometry& geometry) : geom_(geometry) {
  geom_.validate_with_image();
  const int n = geom_.image_size;
  side_ = n + 2 * kPad;
  step_ = 0.5 * geom_.pixel_spacing;
  const double c0 = 0.5 * (n - 1) + kPad;
  const double ps = geom_.pixel_spacing;
  // Sample support: original pixel coords in [-1, n].
  const double lo = kPad - 1.0;
  const double hi = kPad + static_cast<double>(n);

  du_.resize(geom_.n_views);
  dv_.resize(geom_.n_views);
  rays_.resize(static_cast<std::size_t>(geom_.n_views) * geom_.n_dets);
  for (int i = 0; i < geom_.n_views; ++i) {
    const double th = geom_.view_angle_rad(i);
    const double c = std::cos(th), s = std::sin(th);
    // x = s_j c - t s, y = s_j s + t c; u = x/ps + c0, v = c0 - y/ps; t = k * step
    du_[i] = -s * step_ / ps;
    dv_[i] = -c * step_ / ps;
    for (int j = 0; j < geom_.n_dets; ++j) {
      const double off = geom_.det_offset(j);
      Ray& r = rays_[static_cast<std::size_t>(i) * geom_.n_dets + j];
      r.u0 = off * c / ps + c0;
      r.v0 = c0 - off * s / ps;
      double kmin = -std::numeric_limits<double>::infinity();
      double kmax = std::numeric_limits<double>::infinity();
      if (clip_axis(r.u0, du_[i], lo, hi, kmin, kmax) && clip_axis(r.v0, dv_[i], lo, hi, kmin, kmax)) {
        r.kmin = static_cast<long>(std::ceil(kmin));
        r.kmax = static_cast<long>(std::floor(kmax));
      } else {
        r.kmin = 1;
        r.kmax = 0;
      }
    }
  }
}

int ParallelProjector::lane_stride() const noexcept {
  // Lanes must be further apart than a bilinear footprint (2 pixels across).
  const int q = geom_.n_dets / kRayLanes;
  return q * geom_.det_spacing > 3.0 * geom_.pixel_spacing ? q : 0;
}

std::vector<double> ParallelProjector::pad(const Matrix& img) const {
  const int n = geom_.image_size;
  if (img.rows() != static_cast<std::size_t>(n) || img.cols() != static_cast<std::size_t>(n))
    throw Error(ErrorCode::dims_mismatch, "image size does not match geometry");
  std::vector<double> p(padded_size(), 0.0);
  for (int r = 0; r < n; ++r) {
    auto src = img.row(r);
    std::copy(src.begin(), src.end(), p.begin() + static_cast<std::ptrdiff_t>(r + kPad) * side_ + kPad);
  }
  return p;
}

Matrix ParallelProjector::crop(std::span<const double> padded) const {
  const int n = geom_.image_size;
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const double* src = padded.data() + static_cast<std::ptrdiff_t>(r + kPad) * side_ + kPad;
    std::copy(src, src + n, m.row(r).begin());
  }
  return m;
}

void ParallelProjector::forward_view(int view, std::span<const double> padded_img, std::span<double> out) const {
  const double du = du_[view], dv = dv_[view];
  const double* p = padded_img.data();
  const int w = side_;
  for (int j = 0; j < geom_.n_dets; ++j) {
    const Ray& r = ray(view, j);
    const double u0 = r.u0, v0 = r.v0;
    const long k0 = r.kmin;
    const int count = static_cast<int>(r.kmax - r.kmin + 1);
    double acc = 0.0;
    // Int offsets and a plain trip count let this loop become gathers.
#pragma omp simd reduction(+ : acc)
    for (int m = 0; m < count; ++m) {
      const double k = static_cast<double>(k0 + m);
      const double u = u0 + k * du;
      const double v = v0 + k * dv;
      const int iu = static_cast<int>(u);
      const int iv = static_cast<int>(v);
      const double a = u - iu, b = v - iv;
      const int o = iv * w + iu;
      acc += (1.0 - b) * ((1.0 - a) * p[o] + a * p[o + 1]) + b * ((1.0 - a) * p[o + w] + a * p[o + w + 1]);
    }
    out[j] = acc * step_;
  }
}

namespace {

struct Splat {
  double* p;
  int w;
  double u0, v0, du, dv, val;
  void at(long k) const {
    const double u = u0 + static_cast<double>(k) * du;
    const double v = v0 + static_cast<double>(k) * dv;
    const int iu = static_cast<int>(u);
    const int iv = static_cast<int>(v);
    const double a = u - iu, b = v - iv;
    double* q = p + static_cast<std::ptrdiff_t>(iv) * w + iu;
    const double top = (1.0 - b) * val, bot = b * val;
    q[0] += (1.0 - a) * top;
    q[1] += a * top;
    q[w] += (1.0 - a) * bot;
    q[w + 1] += a * bot;
  }
};

}  // namespace

// Successive samples of one ray hit the same pixels, so a lone ray is a chain
// of dependent read-modify-writes. Rays far apart on the detector never share
// a pixel; walking kRayLanes of them in lockstep gives independent chains.
void ParallelProjector::back_view(int view, std::span<const double> row, std::span<double> padded_img) const {
  constexpr int G = kRayLanes;
  const int q = lane_stride();
  auto splat = [&](int j) {
    const Ray& r = ray(view, j);
    return Splat{padded_img.data(), side_, r.u0, r.v0, du_[view], dv_[view], row[j] * step_};
  };
  for (int j = 0; j < q; ++j) {
    Splat sp[G];
    long kmin[G], kmax[G];
    long lo = std::numeric_limits<long>::min(), hi = std::numeric_limits<long>::max();
    for (int g = 0; g < G; ++g) {
      const Ray& r = ray(view, j + g * q);
      sp[g] = splat(j + g * q);
      kmin[g] = r.kmin;
      kmax[g] = sp[g].val == 0.0 ? r.kmin - 1 : r.kmax;
      lo = std::max(lo, kmin[g]);
      hi = std::min(hi, kmax[g]);
    }
    if (lo > hi) {
      for (int g = 0; g < G; ++g)
        for (long k = kmin[g]; k <= kmax[g]; ++k) sp[g].at(k);
      continue;
    }
    for (int g = 0; g < G; ++g)
      for (long k = kmin[g]; k < lo; ++k) sp[g].at(k);
    for (long k = lo; k <= hi; ++k)
      for (int g = 0; g < G; ++g) sp[g].at(k);
    for (int g = 0; g < G; ++g)
      for (long k = hi + 1; k <= kmax[g]; ++k) sp[g].at(k);
  }
  for (int j = G * q; j < geom_.n_dets; ++j) {
    const Splat s = splat(j);
    if (s.val == 0.0) continue;
    const Ray& r = ray(view, j);
    for (long k = r.kmin; k <= r.kmax; ++k) s.at(k);
  }
}

void ParallelProjector::back_view_pair(int view, std::span<const double> row, std::span<double> num,
                                       std::span<double> den) const {
  const double du = du_[view], dv = dv_[view];
  double* pn = num.data();
  double* pd = den.data();
  const int w = side_;
  for (int j = 0; j < geom_.n_dets; ++j) {
    const double val = row[j];
    const Ray& r = ray(view, j);
    for (long k = r.kmin; k <= r.kmax; ++k) {
      const double u = r.u0 + static_cast<double>(k) * du;
      const double v = r.v0 + static_cast<double>(k) * dv;
      const int iu = static_cast<int>(u);
      const int iv = static_cast<int>(v);
      const double a = u - iu, b = v - iv;
      const std::ptrdiff_t o = static_cast<std::ptrdiff_t>(iv) * w + iu;
      const double w00 = (1.0 - a) * (1.0 - b) * step_, w01 = a * (1.0 - b) * step_;
      const double w10 = (1.0 - a) * b * step_, w11 = a * b * step_;
      pn[o] += w00 * val;
      pn[o + 1] += w01 * val;
      pn[o + w] += w10 * val;
      pn[o + w + 1] += w11 * val;
      pd[o] += w00;
      pd[o + 1] += w01;
      pd[o + w] += w10;
      pd[o + w + 1] += w11;
    }
  }
}

Matrix ParallelProjector::forward(const Matrix& img) const {
  const auto p = pad(img);
  Matrix out(geom_.n_views, geom_.n_dets);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < geom_.n_views; ++i) forward_view(i, p, out.row(i));
  return out;
}

Matrix ParallelProjector::back(const Matrix& sino) const {
  if (sino.rows() != static_cast<std::size_t>(geom_.n_views) ||
      sino.cols() != static_cast<std::size_t>(geom_.n_dets))
    throw Error(ErrorCode::dims_mismatch, "sinogram size does not match geometry");
  const int chunks = std::min(kBackChunks, geom_.n_views);
  std::vector<std::vector<double>> partial(chunks);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    partial[c].assign(padded_size(), 0.0);
    const int begin = static_cast<int>(static_cast<long>(geom_.n_views) * c / chunks);
    const int end = static_cast<int>(static_cast<long>(geom_.n_views) * (c + 1) / chunks);
    for (int i = begin; i < end; ++i) back_view(i, sino.row(i), partial[c]);
  }
  std::vector<double> total(padded_size(), 0.0);
  for (const auto& part : partial)
    for (std::size_t k = 0; k < total.size(); ++k) total[k] += part[k];
  return crop(total);
}

namespace {
void check_image_for(const Image& img, const ScanGeometry& geom) {
  if (img.size() != geom.image_size)
    throw Error(ErrorCode::dims_mismatch, "image size does not match geometry");
  if (std::abs(img.pixel_spacing - geom.pixel_spacing) > 1e-9 * geom.pixel_spacing)
    throw Error(ErrorCode::dims_mismatch, "image pixel spacing does not match geometry");
}

void check_sino_for(const Sinogram& s, const ScanGeometry& geom) {
  if (s.data.rows() != static_cast<std::size_t>(geom.n_views) ||
      s.data.cols() != static_cast<std::size_t>(geom.n_dets))
    throw Error(ErrorCode::dims_mismatch, "sinogram size does not match geometry");
}
}  // namespace

Sinogram forward_project(const Image& mu, const ScanGeometry& geom) {
  if (mu.unit != Unit::mu_per_mm)
    throw Error(ErrorCode::unit_mismatch, "forward projection expects an attenuation (mu) image");
  geom.validate_with_image();
  check_image_for(mu, geom);
  ParallelProjector proj(geom);
  return Sinogram(geom, proj.forward(mu.data));
}

Image back_project(const Sinogram& sino, const ScanGeometry& geom) {
  geom.validate_with_image();
  check_sino_for(sino, geom);
  ParallelProjector proj(geom);
  return Image(geom.pixel_spacing, Unit::relative_intensity, proj.back(sino.data));
}

void SartConfig::validate() const {
  if (iterations < 0) throw Error(ErrorCode::invalid_argument, "SART iterations must be non-negative");
  if (!(relaxation > 0.0 && relaxation <= 2.0))
    throw Error(ErrorCode::invalid_argument, "SART relaxation must lie in (0, 2]");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::invalid_argument, "SART epsilon must be positive");
}

namespace {
double residual_norm(const ParallelProjector& proj, std::span<const double> x, const Matrix& p) {
  const auto& g = proj.geometry();
  std::vector<double> per_view(g.n_views);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < g.n_views; ++i) {
    std::vector<double> fp(g.n_dets);
    proj.forward_view(i, x, fp);
    double s = 0.0;
    for (int j = 0; j < g.n_dets; ++j) {
      const double d = p(i, j) - fp[j];
      s += d * d;
    }
    per_view[i] = s;
  }
  double total = 0.0;
  for (double s : per_view) total += s;
  return std::sqrt(total);
}
}  // namespace

SartResult sart(const Sinogram& sino, const ScanGeometry& geom, const SartConfig& cfg,
                const std::optional<Image>& init) {
  cfg.validate();
  geom.validate_with_image();
  check_sino_for(sino, geom);
  if (!all_finite(sino.data.values())) throw Error(ErrorCode::non_finite, "sinogram has non-finite values");

  ParallelProjector proj(geom);
  const int n_views = geom.n_views, n_dets = geom.n_dets;

  std::vector<double> x(proj.padded_size(), 0.0);
  if (init) {
    if (init->unit != Unit::mu_per_mm) throw Error(ErrorCode::unit_mismatch, "SART initial image must be mu");
    check_image_for(*init, geom);
    x = proj.pad(init->data);
  }

  // Ray lengths through the grid (row sums of A).
  Matrix ray_sums;
  {
    Matrix ones(geom.image_size, geom.image_size, 1.0);
    ray_sums = proj.forward(ones);
  }

  SartResult result;
  if (cfg.track_residual) result.residual_norms.push_back(residual_norm(proj, x, sino.data));

  const int side = proj.padded_side();
  const int pad = ParallelProjector::kPad;
  const int n = geom.image_size;
  const std::size_t interior = static_cast<std::size_t>(n) * n;
  std::vector<double> fp(n_dets), resid(n_dets);
  std::vector<double> num(proj.padded_size()), den(proj.padded_size());

  // Column sums of each view block do not depend on x, so when they fit they
  // are computed once and the sweep only backprojects the residual.
  std::vector<float> view_den;
  if (cfg.iterations > 1 && static_cast<std::size_t>(n_views) * interior * sizeof(float) <= kSartCacheBytes) {
    view_den.resize(static_cast<std::size_t>(n_views) * interior);
#pragma omp parallel
    {
      const std::vector<double> ones(n_dets, 1.0);
      std::vector<double> w(proj.padded_size());
#pragma omp for schedule(static)
      for (int i = 0; i < n_views; ++i) {
        std::fill(w.begin(), w.end(), 0.0);
        proj.back_view(i, ones, w);
        float* dst = view_den.data() + static_cast<std::size_t>(i) * interior;
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c)
            dst[static_cast<std::size_t>(r) * n + c] =
                static_cast<float>(w[static_cast<std::size_t>(r + pad) * side + pad + c]);
      }
    }
  }

  for (int it = 0; it < cfg.iterations; ++it) {
    for (int i = 0; i < n_views; ++i) {
      proj.forward_view(i, x, fp);
      for (int j = 0; j < n_dets; ++j) {
        const double rs = ray_sums(i, j);
        resid[j] = rs > cfg.epsilon ? (sino.data(i, j) - fp[j]) / rs : 0.0;
      }
      std::fill(num.begin(), num.end(), 0.0);
      const float* cached = view_den.empty() ? nullptr : view_den.data() + static_cast<std::size_t>(i) * interior;
      if (cached) {
        proj.back_view(i, resid, num);
      } else {
        std::fill(den.begin(), den.end(), 0.0);
        proj.back_view_pair(i, resid, num, den);
      }
#pragma omp parallel for schedule(static)
      for (int r = 0; r < n; ++r) {
        const std::size_t base = static_cast<std::size_t>(r + pad) * side + pad;
        for (int c = 0; c < n; ++c) {
          const std::size_t k = base + c;
          const double d = cached ? cached[static_cast<std::size_t>(r) * n + c] : den[k];
          if (d > cfg.epsilon) {
            double v = x[k] + cfg.relaxation * num[k] / d;
            if (cfg.nonneg && v < 0.0) v = 0.0;
            x[k] = v;
          }
        }
      }
    }
    if (cfg.track_residual) result.residual_norms.push_back(residual_norm(proj, x, sino.data));
  }

  result.image = Image(geom.pixel_spacing, Unit::mu_per_mm, proj.crop(x));
  return result;
}

}  // namespace sflick
