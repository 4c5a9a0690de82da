#include "sflick/smallnet.hpp"

#include <algorithm>
#include <cmath>

#include "sflick/container.hpp"
#include "sflick/rng.hpp"

namespace sflick {
namespace {

inline float leaky(float z) { return z > 0.0f ? z : kLeakySlope * z; }
inline float leaky_grad(float a) { return a > 0.0f ? 1.0f : kLeakySlope; }

// Row blocks are kLanes wide. Plane rows are long enough that a full block
// read never crosses into the next row; lanes past the image width are
// computed on the zero border and discarded (or contribute zero gradient).
constexpr int kLanes = 16;
constexpr int kOutBlock = 4;
// Gradient sums are reduced per fixed row chunk, then in chunk order.
constexpr int kRowChunks = 16;

int row_stride(int cols) { return (cols + kLanes - 1) / kLanes * kLanes + kLanes; }

/// acc[ob][l] += sum over input channels and taps of w(ob, i, t) * in_i.
/// `in` points at padded row y, column x0 of channel 0. With Flip the tap
/// index is mirrored, which turns the correlation into its adjoint.
template <int OB, bool Flip>
inline void conv_block(int cin, const float* in, std::size_t in_plane, int S, const float* w, std::size_t w_out,
                       std::size_t w_in, float (&acc)[OB][kLanes]) {
  for (int i = 0; i < cin; ++i) {
    const float* base = in + i * in_plane;
    const float* wi = w + i * w_in;
    for (int dy = 0; dy < 3; ++dy)
      for (int dx = 0; dx < 3; ++dx) {
        const float* src = base + dy * S + dx;
        const int t = Flip ? 8 - (dy * 3 + dx) : dy * 3 + dx;
        for (int ob = 0; ob < OB; ++ob) {
          const float wv = wi[ob * w_out + t];
#pragma omp simd
          for (int l = 0; l < kLanes; ++l) acc[ob][l] += wv * src[l];
        }
      }
  }
}

/// Runs conv_block over one output row for every output channel, handing
/// each finished lane block to store(o, x0, len, lanes).
template <bool Flip, typename Init, typename Store>
inline void conv_row(int cout, int cin, const float* in, std::size_t in_plane, int S, int W, const float* w,
                     std::size_t w_out, std::size_t w_in, Init init, Store store) {
  auto run = [&]<int OB>(int o0) {
    for (int x0 = 0; x0 < W; x0 += kLanes) {
      float acc[OB][kLanes];
      for (int ob = 0; ob < OB; ++ob)
        for (int l = 0; l < kLanes; ++l) acc[ob][l] = init(o0 + ob);
      conv_block<OB, Flip>(cin, in + x0, in_plane, S, w + o0 * w_out, w_out, w_in, acc);
      const int len = std::min(kLanes, W - x0);
      for (int ob = 0; ob < OB; ++ob) store(o0 + ob, x0, len, acc[ob]);
    }
  };
  int o = 0;
  for (; o + kOutBlock <= cout; o += kOutBlock) run.template operator()<kOutBlock>(o);
  for (; o < cout; ++o) run.template operator()<1>(o);
}

/// g[ob][dy*3+dx] += sum_x d_ob(x) * in(dy, x + dx) over one row, for OB
/// output planes against a single input plane. d points at the interior
/// start of the output-gradient row; `in` at padded row y, column 0.
template <int OB>
inline void weight_grad_row(const float* d, std::size_t d_plane, const float* in, int S, int W, double* g,
                            std::size_t g_out) {
  for (int dy = 0; dy < 3; ++dy) {
    float acc[OB][3][kLanes] = {};
    const float* src = in + dy * S;
    for (int x0 = 0; x0 < W; x0 += kLanes)
      for (int ob = 0; ob < OB; ++ob) {
        const float* dv = d + ob * d_plane + x0;
        for (int dx = 0; dx < 3; ++dx) {
#pragma omp simd
          for (int l = 0; l < kLanes; ++l) acc[ob][dx][l] += dv[l] * src[x0 + dx + l];
        }
      }
    for (int ob = 0; ob < OB; ++ob)
      for (int dx = 0; dx < 3; ++dx) {
        float s = 0.0f;
        for (int l = 0; l < kLanes; ++l) s += acc[ob][dx][l];
        g[ob * g_out + dy * 3 + dx] += s;
      }
  }
}

template <typename F>
inline void for_out_blocks(int cout, F f) {
  int o = 0;
  for (; o + kOutBlock <= cout; o += kOutBlock) f.template operator()<kOutBlock>(o);
  for (; o < cout; ++o) f.template operator()<1>(o);
}

inline double row_sum(const float* a, int n) {
  float s = 0.0f;
#pragma omp simd reduction(+ : s)
  for (int i = 0; i < n; ++i) s += a[i];
  return s;
}

inline double row_dot(const float* a, const float* b, int n) {
  float s = 0.0f;
#pragma omp simd reduction(+ : s)
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

NetParams::NetParams(int c) : channels(c), values(count_for(c), 0.0f) {
  if (c < 1) throw Error(ErrorCode::invalid_argument, "network needs at least one channel");
}

std::size_t NetParams::count_for(int c) {
  const auto n = static_cast<std::size_t>(c);
  return 9 * n + n + 9 * n * n + n + n + 1;
}

NetParams net_init(std::uint64_t seed, int channels) {
  NetParams p(channels);
  Pcg32 rng(seed);
  auto fill = [&rng](std::span<float> w, double fan_in) {
    const double bound = std::sqrt(6.0 / fan_in);
    for (float& v : w) v = static_cast<float>((2.0 * rng.uniform() - 1.0) * bound);
  };
  fill(p.w1(), 9.0);
  fill(p.w2(), 9.0 * channels);
  fill(p.w3(), channels);
  return p;
}

SmallNet::SmallNet(int rows, int cols, int channels)
    : rows_(rows), cols_(cols), channels_(channels), stride_(row_stride(cols)),
      plane_(static_cast<std::size_t>(rows + 2) * row_stride(cols)) {
  if (rows < 1 || cols < 1 || channels < 1)
    throw Error(ErrorCode::invalid_argument, "network workspace needs positive dimensions");
  xp_.assign(plane_, 0.0f);
  a1_.assign(plane_ * channels, 0.0f);
  a2_.assign(plane_ * channels, 0.0f);
  dz2_.assign(plane_ * channels, 0.0f);
  dz1_.assign(plane_ * channels, 0.0f);
}

void SmallNet::forward(const NetParams& p, std::span<const float> x, std::span<float> out) {
  const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
  if (p.channels != channels_) throw Error(ErrorCode::dims_mismatch, "parameter channels do not match workspace");
  if (x.size() != n || out.size() != n) throw Error(ErrorCode::dims_mismatch, "network input shape mismatch");

  const int H = rows_, W = cols_, C = channels_, S = stride_;
  const std::size_t P = plane_;
  for (int y = 0; y < H; ++y)
    std::copy_n(x.data() + static_cast<std::size_t>(y) * W, W, xp_.data() + static_cast<std::size_t>(y + 1) * S + 1);

  const float* w1 = p.values.data() + p.w1_offset();
  const float* b1 = p.values.data() + p.b1_offset();
  const float* w2 = p.values.data() + p.w2_offset();
  const float* b2 = p.values.data() + p.b2_offset();
  const float* w3 = p.values.data() + p.w3_offset();
  const float b3 = p.values[p.b3_offset()];

#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int y = 0; y < H; ++y) {
      const std::size_t row = static_cast<std::size_t>(y + 1) * S + 1;
      conv_row<false>(
          C, 1, xp_.data() + static_cast<std::size_t>(y) * S, P, S, W, w1, 9, 0, [&](int o) { return b1[o]; },
          [&](int o, int x0, int len, const float* acc) {
            float* dst = a1_.data() + o * P + row + x0;
            for (int l = 0; l < len; ++l) dst[l] = leaky(acc[l]);
          });
    }
#pragma omp for schedule(static)
    for (int y = 0; y < H; ++y) {
      const std::size_t row = static_cast<std::size_t>(y + 1) * S + 1;
      conv_row<false>(
          C, C, a1_.data() + static_cast<std::size_t>(y) * S, P, S, W, w2, 9u * C, 9, [&](int o) { return b2[o]; },
          [&](int o, int x0, int len, const float* acc) {
            float* dst = a2_.data() + o * P + row + x0;
            for (int l = 0; l < len; ++l) dst[l] = leaky(acc[l]);
          });
      float* orow = out.data() + static_cast<std::size_t>(y) * W;
      std::fill(orow, orow + W, b3);
      for (int c = 0; c < C; ++c) {
        const float* a = a2_.data() + c * P + row;
        const float wc = w3[c];
#pragma omp simd
        for (int xx = 0; xx < W; ++xx) orow[xx] += wc * a[xx];
      }
    }
  }
}

void SmallNet::backward(const NetParams& p, std::span<const float> dout, std::span<double> grad) {
  const std::size_t n = static_cast<std::size_t>(rows_) * cols_;
  if (dout.size() != n) throw Error(ErrorCode::dims_mismatch, "output gradient shape mismatch");
  if (grad.size() != p.count()) throw Error(ErrorCode::dims_mismatch, "gradient buffer size mismatch");

  const int H = rows_, W = cols_, C = channels_, S = stride_;
  const std::size_t P = plane_;
  const float* w2 = p.values.data() + p.w2_offset();
  const float* w3 = p.values.data() + p.w3_offset();

  // dz2 = w3 * dout * leaky'(z2), then dz1 = (W2^T dz2) * leaky'(z1).
#pragma omp parallel
  {
#pragma omp for schedule(static)
    for (int y = 0; y < H; ++y) {
      const float* d = dout.data() + static_cast<std::size_t>(y) * W;
      const std::size_t row = static_cast<std::size_t>(y + 1) * S + 1;
      for (int c = 0; c < C; ++c) {
        const float* a = a2_.data() + c * P + row;
        float* z = dz2_.data() + c * P + row;
        const float wc = w3[c];
        for (int xx = 0; xx < W; ++xx) z[xx] = wc * d[xx] * leaky_grad(a[xx]);
      }
    }
#pragma omp for schedule(static)
    for (int y = 0; y < H; ++y) {
      const std::size_t row = static_cast<std::size_t>(y + 1) * S + 1;
      conv_row<true>(
          C, C, dz2_.data() + static_cast<std::size_t>(y) * S, P, S, W, w2, 9, 9u * C, [](int) { return 0.0f; },
          [&](int i, int x0, int len, const float* acc) {
            const float* a = a1_.data() + i * P + row + x0;
            float* dst = dz1_.data() + i * P + row + x0;
            for (int l = 0; l < len; ++l) dst[l] = acc[l] * leaky_grad(a[l]);
          });
    }
  }

  // Parameter gradients: private sums per fixed row chunk, added in chunk
  // order, so results do not depend on the thread count.
  const std::size_t count = p.count();
  std::vector<double> partial(static_cast<std::size_t>(kRowChunks) * count, 0.0);
#pragma omp parallel for schedule(static)
  for (int chunk = 0; chunk < kRowChunks; ++chunk) {
    double* g = partial.data() + static_cast<std::size_t>(chunk) * count;
    double* gw1 = g + p.w1_offset();
    double* gb1 = g + p.b1_offset();
    double* gw2 = g + p.w2_offset();
    double* gb2 = g + p.b2_offset();
    double* gw3 = g + p.w3_offset();
    double& gb3 = g[p.b3_offset()];
    const int y0 = static_cast<int>(static_cast<long>(H) * chunk / kRowChunks);
    const int y1 = static_cast<int>(static_cast<long>(H) * (chunk + 1) / kRowChunks);
    for (int y = y0; y < y1; ++y) {
      const float* d = dout.data() + static_cast<std::size_t>(y) * W;
      const std::size_t row = static_cast<std::size_t>(y + 1) * S + 1;
      const std::size_t top = static_cast<std::size_t>(y) * S;
      gb3 += row_sum(d, W);
      for (int c = 0; c < C; ++c) {
        gw3[c] += row_dot(d, a2_.data() + c * P + row, W);
        gb2[c] += row_sum(dz2_.data() + c * P + row, W);
        gb1[c] += row_sum(dz1_.data() + c * P + row, W);
      }
      for_out_blocks(C, [&]<int OB>(int o0) {
        const float* dz = dz2_.data() + o0 * P + row;
        for (int i = 0; i < C; ++i)
          weight_grad_row<OB>(dz, P, a1_.data() + i * P + top, S, W, gw2 + (static_cast<std::size_t>(o0) * C + i) * 9,
                              9u * C);
        weight_grad_row<OB>(dz1_.data() + o0 * P + row, P, xp_.data() + top, S, W, gw1 + o0 * 9, 9);
      });
    }
  }
  for (int chunk = 0; chunk < kRowChunks; ++chunk) {
    const double* g = partial.data() + static_cast<std::size_t>(chunk) * count;
    for (std::size_t k = 0; k < count; ++k) grad[k] += g[k];
  }
}

std::vector<float> net_residual(const NetParams& p, const Grid<float>& x) {
  SmallNet net(static_cast<int>(x.rows()), static_cast<int>(x.cols()), p.channels);
  std::vector<float> out(x.size());
  net.forward(p, x.values(), out);
  return out;
}

void LossConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::invalid_argument, "alpha must be >= 0");
}

PairLoss::PairLoss(int rows, int cols, int channels)
    : net_a_(rows, cols, channels), net_b_(rows, cols, channels) {
  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  fa_.resize(n);
  fb_.resize(n);
  ga_.resize(n);
  gb_.resize(n);
}

LossAndGrad PairLoss::operator()(const NetParams& p, std::span<const float> a, std::span<const float> b,
                                 const LossConfig& cfg) {
  if (a.size() != fa_.size() || b.size() != fa_.size())
    throw Error(ErrorCode::dims_mismatch, "training pair shape mismatch");
  net_a_.forward(p, a, fa_);
  net_b_.forward(p, b, fb_);

  const std::size_t n = fa_.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double alpha = cfg.alpha;
  double loss = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double ya = static_cast<double>(a[k]) - fa_[k];
    const double yb = static_cast<double>(b[k]) - fb_[k];
    const double e1 = ya - b[k];
    const double e2 = yb - a[k];
    const double e3 = ya - yb;
    loss += 0.5 * e1 * e1 + 0.5 * e2 * e2 + alpha * e3 * e3;
    ga_[k] = static_cast<float>((-e1 - 2.0 * alpha * e3) * inv_n);
    gb_[k] = static_cast<float>((-e2 + 2.0 * alpha * e3) * inv_n);
  }

  LossAndGrad r;
  r.loss = loss * inv_n;
  r.grad.assign(p.count(), 0.0);
  net_a_.backward(p, ga_, r.grad);
  net_b_.backward(p, gb_, r.grad);
  return r;
}

LossAndGrad loss_and_grad(const NetParams& p, const Grid<float>& a, const Grid<float>& b, const LossConfig& cfg) {
  cfg.validate();
  if (!a.same_shape(b)) throw Error(ErrorCode::dims_mismatch, "training pair shape mismatch");
  PairLoss loss(static_cast<int>(a.rows()), static_cast<int>(a.cols()), p.channels);
  return loss(p, a.values(), b.values(), cfg);
}

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw Error(ErrorCode::invalid_argument, "learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
    throw Error(ErrorCode::invalid_argument, "Adam betas must lie in [0, 1)");
  if (!(eps > 0.0)) throw Error(ErrorCode::invalid_argument, "Adam epsilon must be positive");
  if (halve_every < 0) throw Error(ErrorCode::invalid_argument, "halve_every must be >= 0");
}

TrainState::TrainState(NetParams p, AdamConfig cfg)
    : params(std::move(p)), m(params.count(), 0.0), v(params.count(), 0.0), adam(cfg) {
  adam.validate();
}

double TrainState::current_lr() const {
  if (adam.halve_every <= 0) return adam.lr;
  return std::ldexp(adam.lr, -static_cast<int>(step / static_cast<std::uint64_t>(adam.halve_every)));
}

void adam_step(TrainState& s, std::span<const double> grads) {
  if (grads.size() != s.params.count() || s.m.size() != grads.size() || s.v.size() != grads.size())
    throw Error(ErrorCode::dims_mismatch, "gradient size does not match parameters");
  const double lr = s.current_lr();
  const double t = static_cast<double>(s.step + 1);
  const double c1 = 1.0 - std::pow(s.adam.beta1, t);
  const double c2 = 1.0 - std::pow(s.adam.beta2, t);
  for (std::size_t k = 0; k < grads.size(); ++k) {
    const double g = grads[k];
    s.m[k] = s.adam.beta1 * s.m[k] + (1.0 - s.adam.beta1) * g;
    s.v[k] = s.adam.beta2 * s.v[k] + (1.0 - s.adam.beta2) * g * g;
    const double mhat = s.m[k] / c1;
    const double vhat = s.v[k] / c2;
    s.params.values[k] = static_cast<float>(s.params.values[k] - lr * mhat / (std::sqrt(vhat) + s.adam.eps));
  }
  ++s.step;
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& p) {
  ContainerHeader h;
  h.kind = Kind::checkpoint;
  h.rows = static_cast<std::uint32_t>(p.count());
  h.cols = 1;
  h.spacing_row = p.channels;
  h.spacing_col = 0.0;
  std::vector<double> v(p.values.begin(), p.values.end());
  write_container(path, h, v);
}

NetParams load_checkpoint(const std::filesystem::path& path) {
  const Container c = read_container(path);
  if (c.header.kind != Kind::checkpoint) throw Error(ErrorCode::kind_mismatch, "expected a checkpoint container");
  const int channels = static_cast<int>(c.header.spacing_row);
  if (channels < 1 || static_cast<double>(channels) != c.header.spacing_row || c.header.cols != 1 ||
      c.header.rows != NetParams::count_for(channels))
    throw Error(ErrorCode::dims_mismatch, "checkpoint shape does not match its channel count");
  NetParams p(channels);
  std::copy(c.payload.begin(), c.payload.end(), p.values.begin());
  return p;
}

}  // namespace sflick
