#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "sflick/config.hpp"
#include "sflick/container.hpp"
#include "sflick/metrics.hpp"
#include "sflick/pipeline.hpp"

using namespace sflick;

namespace {

const ScanGeometry kSmall{90, 95, 1.0, 1.0, 64};

Sinogram clean_sinogram() {
  const Image mu = hu_to_mu(intensity_to_hu(rasterize(modified_shepp_logan(), kSmall.image_size, 1.0)));
  return forward_project(mu, kSmall);
}

Sinogram noisy_sinogram(std::uint64_t seed = 1) {
  NoiseConfig cfg;
  cfg.i0 = 2000.0;
  cfg.seed = seed;
  return apply_low_dose(clean_sinogram(), cfg);
}

DenoiseConfig small_config(int steps) {
  DenoiseConfig cfg;
  cfg.channels = 4;
  cfg.train_steps = steps;
  cfg.passes = 2;
  cfg.flick_draws = 4000;
  return cfg;
}

double relative_rmse(const Matrix& ref, const Matrix& x) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    num += (x.values()[k] - ref.values()[k]) * (x.values()[k] - ref.values()[k]);
    den += ref.values()[k] * ref.values()[k];
  }
  return std::sqrt(num / den);
}

PipelineConfig tiny_pipeline(const std::filesystem::path& dir) {
  PipelineConfig cfg;
  cfg.geometry = kSmall;
  cfg.noise.i0 = 5000.0;
  cfg.denoise = small_config(10);
  cfg.sart.iterations = 3;
  cfg.output_dir = dir;
  return cfg;
}

}  // namespace

TEST_CASE("zero training steps keep the shape and are reproducible") {
  const Sinogram noisy = noisy_sinogram();
  const auto a = denoise(noisy, small_config(0));
  const auto b = denoise(noisy, small_config(0));
  REQUIRE(a.size() == 2);
  for (std::size_t t = 0; t < a.size(); ++t) {
    CHECK(a[t].output.data.rows() == 90u);
    CHECK(a[t].output.data.cols() == 95u);
    CHECK(a[t].output.data == b[t].output.data);
    CHECK(a[t].loss_history.empty());
  }
}

TEST_CASE("a noiseless sinogram passes through nearly unchanged") {
  const Sinogram clean = clean_sinogram();
  DenoiseConfig cfg = small_config(300);
  cfg.passes = 1;
  const auto out = denoise(clean, cfg);
  CHECK(relative_rmse(clean.data, out.front().output.data) < 0.05);
}

TEST_CASE("one pass equals a single denoise_pass with the first pass seed") {
  const Sinogram noisy = noisy_sinogram();
  DenoiseConfig cfg = small_config(15);
  cfg.passes = 1;
  const auto out = denoise(noisy, cfg);
  REQUIRE(out.size() == 1);
  CHECK(out.front().output.data == denoise_pass(noisy, cfg, pass_seed(cfg, 1)).output.data);
}

TEST_CASE("second pass consumes the first pass output") {
  const Sinogram noisy = noisy_sinogram();
  DenoiseConfig cfg = small_config(15);
  const auto out = denoise(noisy, cfg);
  CHECK(out[1].output.data == denoise_pass(out[0].output, cfg, pass_seed(cfg, 2)).output.data);
  CHECK(pass_seed(cfg, 1) != pass_seed(cfg, 2));
}

TEST_CASE("denoising is deterministic for every pairing mode") {
  const Sinogram noisy = noisy_sinogram();
  for (int mode = 0; mode < 3; ++mode) {
    DenoiseConfig cfg = small_config(12);
    cfg.reflick_every = mode >= 1 ? 4 : 0;
    cfg.independent_pair = mode == 2;
    const auto a = denoise(noisy, cfg);
    const auto b = denoise(noisy, cfg);
    for (std::size_t t = 0; t < a.size(); ++t) {
      CHECK(a[t].output.data == b[t].output.data);
      CHECK(a[t].loss_history == b[t].loss_history);
    }
  }
}

TEST_CASE("training lowers the loss and conjugate discrepancy does not grow") {
  const Sinogram noisy = noisy_sinogram(3);
  const auto out = denoise(noisy, small_config(150));
  for (const auto& p : out) CHECK(p.final_loss < p.initial_loss);
  CHECK(out.front().swapped_fraction > 0.0);
  CHECK(conjugate_discrepancy(out.back().output).rms <= conjugate_discrepancy(noisy).rms);
}

TEST_CASE("denoise input checks") {
  Sinogram odd(ScanGeometry{8, 4, 1.0});
  odd.data = Matrix(7, 4, 1.0);
  CHECK_THROWS_AS(denoise_pass(odd, small_config(1), 1), Error);
  const Sinogram zero(ScanGeometry{8, 4, 1.0});
  CHECK_THROWS_AS(denoise_pass(zero, small_config(1), 1), Error);
  DenoiseConfig bad = small_config(1);
  bad.passes = 0;
  CHECK_THROWS_AS(denoise(noisy_sinogram(), bad), Error);
}

TEST_CASE("end-to-end experiment at reduced scale") {
  const auto dir = std::filesystem::temp_directory_path() / "sflick_test_pipeline";
  std::filesystem::remove_all(dir);
  const auto rep = run_experiment(tiny_pipeline(dir));
  REQUIRE(rep.rows.size() == 3);
  CHECK(rep.rows[0].method == "SART");
  CHECK(rep.rows[1].method == "SF");
  CHECK(rep.rows[2].method == "Ours");
  CHECK(rep.row("SF").psnr_db == rep.per_pass[0].psnr_db);
  CHECK(rep.row("Ours").psnr_db == rep.per_pass[1].psnr_db);
  CHECK(rep.reference_range == doctest::Approx(1000.0));
  for (const auto& r : rep.rows) {
    CHECK(std::isfinite(r.psnr_db));
    CHECK(r.ssim <= 1.0);
  }
  for (const char* f : {"manifest.txt", "phantom_hu.sflk", "phantom_hu.pgm", "sino_clean.sflk", "sino_noisy.sflk",
                        "sino_pass1.sflk", "sino_pass2.sflk", "recon_sart.sflk", "recon_pass2.pgm", "report.csv",
                        "passes.csv", "report.txt"})
    CHECK_MESSAGE(std::filesystem::exists(dir / f), f);

  std::ifstream csv(dir / "report.csv");
  std::string header;
  std::getline(csv, header);
  CHECK(header == "method,psnr_db,ssim");
  CHECK(format_report_csv(rep).rfind("method,psnr_db,ssim\nSART,", 0) == 0);

  // The manifest reproduces the configuration that wrote it.
  const auto again = load_config(dir / "manifest.txt");
  CHECK(format_config(again) == format_config(tiny_pipeline(dir)));

  const auto second = run_experiment(tiny_pipeline(dir));
  for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(rep.rows[i].psnr_db == second.rows[i].psnr_db);
  CHECK(load_sinogram(dir / "sino_pass2.sflk").data.values().size() == 90u * 95u);
  CHECK_THROWS_AS(rep.row("nope"), Error);
}
