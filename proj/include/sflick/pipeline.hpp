#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sflick/core.hpp"
#include "sflick/flick.hpp"
#include "sflick/noisesim.hpp"
#include "sflick/phantom.hpp"
#include "sflick/projector.hpp"
#include "sflick/smallnet.hpp"

namespace sflick {

struct DenoiseConfig {
  std::uint64_t flick_draws = kDefaultFlickDraws;
  std::uint64_t seed = 2;
  int channels = kDefaultChannels;
  LossConfig loss;
  AdamConfig adam;
  int train_steps = 2000;
  int passes = 2;
  /// 0 keeps one flicked copy per pass; otherwise a fresh plan every n steps.
  int reflick_every = 0;
  /// Train on two independently flicked copies instead of (original, flicked).
  bool independent_pair = false;

  void validate() const;
};

struct PassResult {
  Sinogram output;
  double scale = 0.0;             // normalization (max of the pass input)
  double swapped_fraction = 0.0;  // of the first plan
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> loss_history;  // loss before each optimizer step
};

/// Seed used by pass t (1-based) of denoise(): derive_seed(cfg.seed, t).
std::uint64_t pass_seed(const DenoiseConfig& cfg, int pass);

/// One round: normalize by the input max, pair the input with a flicked copy,
/// fit a fresh network, and return scale * (x - f(x)).
PassResult denoise_pass(const Sinogram& noisy, const DenoiseConfig& cfg, std::uint64_t seed);

/// cfg.passes rounds, each consuming the previous output.
std::vector<PassResult> denoise(const Sinogram& noisy, const DenoiseConfig& cfg);

struct PipelineConfig {
  ScanGeometry geometry{1160, 672, 0.6, 0.78125, 512};
  double mu_water = kDefaultMuWater;
  std::string phantom_table;  // empty: built-in modified Shepp-Logan
  NoiseConfig noise{2.5e4, 1, 1.0, false};
  DenoiseConfig denoise;
  SartConfig sart;
  std::filesystem::path output_dir = "sflick_out";

  void validate() const;
};

struct MethodScore {
  std::string method;
  double psnr_db = 0.0;
  bool identical = false;
  double ssim = 0.0;
};

struct ExperimentReport {
  std::vector<MethodScore> rows;  // SART, SF, Ours
  std::vector<MethodScore> per_pass;
  std::vector<PassResult> passes;  // outputs kept for inspection
  ConjugateStats noisy_conjugate;
  std::vector<ConjugateStats> pass_conjugate;
  double reference_range = 0.0;
  double seconds = 0.0;

  const MethodScore& row(const std::string& method) const;
};

/// Phantom -> projection -> low-dose noise -> (SART | SF | two-pass) ->
/// PSNR/SSIM in HU. Every intermediate is written to cfg.output_dir as soon
/// as it exists, together with report.csv, passes.csv, report.txt and
/// manifest.txt.
ExperimentReport run_experiment(const PipelineConfig& cfg);

std::string format_report_csv(const ExperimentReport& r);

}  // namespace sflick
