#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "sflick/core.hpp"

namespace sflick {

inline constexpr int kDefaultChannels = 48;
inline constexpr float kLeakySlope = 0.2f;

/// Weights of the three-layer residual denoiser:
///   conv3x3(1 -> C) + bias, leaky ReLU
///   conv3x3(C -> C) + bias, leaky ReLU
///   conv1x1(C -> 1) + bias
/// Flat storage order (also the checkpoint and initialisation order):
///   w1[C][3][3], b1[C], w2[C_out][C_in][3][3], b2[C], w3[C], b3
struct NetParams {
  int channels = 0;
  std::vector<float> values;

  NetParams() = default;
  explicit NetParams(int c);

  static std::size_t count_for(int c);
  std::size_t count() const noexcept { return values.size(); }

  std::size_t w1_offset() const noexcept { return 0; }
  std::size_t b1_offset() const noexcept { return 9u * channels; }
  std::size_t w2_offset() const noexcept { return 10u * channels; }
  std::size_t b2_offset() const noexcept { return 10u * channels + 9u * channels * channels; }
  std::size_t w3_offset() const noexcept { return b2_offset() + channels; }
  std::size_t b3_offset() const noexcept { return w3_offset() + channels; }

  std::span<float> w1() { return {values.data() + w1_offset(), 9u * channels}; }
  std::span<float> b1() { return {values.data() + b1_offset(), static_cast<std::size_t>(channels)}; }
  std::span<float> w2() { return {values.data() + w2_offset(), 9u * channels * channels}; }
  std::span<float> b2() { return {values.data() + b2_offset(), static_cast<std::size_t>(channels)}; }
  std::span<float> w3() { return {values.data() + w3_offset(), static_cast<std::size_t>(channels)}; }
  float& b3() { return values[b3_offset()]; }

  friend bool operator==(const NetParams&, const NetParams&) = default;
};

/// Uniform weights in +-sqrt(6 / fan_in) drawn in storage order; zero biases.
NetParams net_init(std::uint64_t seed, int channels);

/// Forward/backward workspace for a fixed input shape. Holds the activations
/// of the most recent forward() so backward() can reuse them.
class SmallNet {
 public:
  SmallNet(int rows, int cols, int channels);

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }

  /// Predicted residual f(x), same shape as x.
  void forward(const NetParams& p, std::span<const float> x, std::span<float> out);
  /// Adds d(loss)/d(params) to grad given d(loss)/d(out).
  void backward(const NetParams& p, std::span<const float> dout, std::span<double> grad);

 private:
  float* plane(std::vector<float>& buf, int c) { return buf.data() + static_cast<std::size_t>(c) * plane_; }
  const float* plane(const std::vector<float>& buf, int c) const {
    return buf.data() + static_cast<std::size_t>(c) * plane_;
  }

  int rows_, cols_, channels_;
  int stride_;         // padded row length, cols + 2
  std::size_t plane_;  // padded plane size
  std::vector<float> xp_, a1_, a2_, dz2_, dz1_;
};

std::vector<float> net_residual(const NetParams& p, const Grid<float>& x);

struct LossConfig {
  double alpha = 1.0;  // consistency weight
  void validate() const;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // same order as NetParams::values
};

/// Symmetric pair loss with consistency term, for denoised y = x - f(x):
///   1/2 mean((yA - B)^2) + 1/2 mean((yB - A)^2) + alpha mean((yA - yB)^2)
class PairLoss {
 public:
  PairLoss(int rows, int cols, int channels);
  LossAndGrad operator()(const NetParams& p, std::span<const float> a, std::span<const float> b,
                         const LossConfig& cfg);

 private:
  SmallNet net_a_, net_b_;
  std::vector<float> fa_, fb_, ga_, gb_;
};

LossAndGrad loss_and_grad(const NetParams& p, const Grid<float>& a, const Grid<float>& b, const LossConfig& cfg);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int halve_every = 1000;  // steps; 0 disables the decay

  void validate() const;
};

struct TrainState {
  NetParams params;
  std::vector<double> m, v;
  std::uint64_t step = 0;
  AdamConfig adam;

  TrainState() = default;
  TrainState(NetParams p, AdamConfig cfg);
  double current_lr() const;
};

/// One bias-corrected Adam update; the learning rate halves every
/// cfg.halve_every completed steps.
void adam_step(TrainState& state, std::span<const double> grads);

void save_checkpoint(const std::filesystem::path& path, const NetParams& p);
NetParams load_checkpoint(const std::filesystem::path& path);

}  // namespace sflick
