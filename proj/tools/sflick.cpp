// Command-line front end. Talks to the library only through the C API.
//
// Exit status: 0 ok, 2 bad flags or config, 3 bad input file, 4 numeric
// failure. Failures print exactly one line on stderr:
//   sflick: error status=<name> exit=<code>: <message>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sflick/sflick.h"

namespace {

constexpr int kExitFlags = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumeric = 4;

struct Failure {
  int exit_code;
  std::string status;
  std::string message;
};

int exit_code_for(sflk_status s) {
  switch (s) {
    case SFLK_ERR_INVALID_ARGUMENT:
    case SFLK_ERR_CONFIG:
      return kExitFlags;
    case SFLK_ERR_IO:
    case SFLK_ERR_BAD_MAGIC:
    case SFLK_ERR_UNSUPPORTED_VERSION:
    case SFLK_ERR_TRUNCATED:
    case SFLK_ERR_UNIT:
    case SFLK_ERR_DIMS:
    case SFLK_ERR_KIND:
    case SFLK_ERR_ODD_VIEWS:
      return kExitInput;
    default:
      return kExitNumeric;
  }
}

void check(sflk_status s) {
  if (s != SFLK_OK) throw Failure{exit_code_for(s), sflk_status_name(s), sflk_last_error()};
}

[[noreturn]] void flag_error(const std::string& msg) { throw Failure{kExitFlags, "invalid_argument", msg}; }

struct MatrixDeleter {
  void operator()(sflk_matrix* m) const { sflk_matrix_free(m); }
};
using Matrix = std::unique_ptr<sflk_matrix, MatrixDeleter>;

struct ConfigDeleter {
  void operator()(sflk_config* c) const { sflk_config_free(c); }
};
using Config = std::unique_ptr<sflk_config, ConfigDeleter>;

Matrix read_matrix(const std::string& path, sflk_kind want) {
  sflk_matrix* m = nullptr;
  check(sflk_matrix_read(path.c_str(), &m));
  Matrix out(m);
  if (sflk_matrix_kind(m) != want)
    throw Failure{kExitInput, "kind_mismatch",
                  path + ": expected " + (want == SFLK_KIND_IMAGE ? "an image" : "a sinogram")};
  return out;
}

Matrix take(sflk_matrix* m) { return Matrix(m); }

/// Outputs must never alias an input.
void guard_output(const std::string& out, const std::vector<std::string>& inputs) {
  std::error_code ec;
  for (const auto& in : inputs)
    if (std::filesystem::exists(out, ec) && std::filesystem::equivalent(out, in, ec))
      flag_error("output " + out + " would overwrite input " + in);
}

void write_matrix(const Matrix& m, const std::string& path) { check(sflk_matrix_write(m.get(), path.c_str())); }

sflk_unit parse_unit(const std::string& s) {
  if (s == "hu") return SFLK_UNIT_HU;
  if (s == "mu") return SFLK_UNIT_MU;
  if (s == "relative") return SFLK_UNIT_RELATIVE;
  flag_error("unknown unit '" + s + "' (hu, mu or relative)");
}

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::fputs(text.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Failure{kExitInput, "io", "cannot open " + path + " for writing"};
  out << text;
}

const std::string kDefaultMuWater = "0.0227";

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sinogram flicking for zero-shot low-dose CT denoising"};
  app.require_subcommand(1);
  int threads = 0;
  bool quiet = false;
  app.add_option("--threads", threads, "cap on worker threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_flag("-q,--quiet", quiet, "suppress the per-stage log");

  sflk_geometry geom;
  sflk_geometry_default(&geom);
  sflk_sart_options sart;
  sflk_sart_options_default(&sart);
  sflk_denoise_options dn;
  sflk_denoise_options_default(&dn);
  double mu_water = std::stod(kDefaultMuWater);

  // phantom
  auto* ph = app.add_subcommand("phantom", "rasterize an ellipse phantom");
  int ph_size = 256;
  double ph_spacing = 0.0;
  std::string ph_table, ph_unit = "hu", ph_out;
  ph->add_option("--size", ph_size, "pixels per side")->check(CLI::Range(16, 8192));
  ph->add_option("--pixel-spacing", ph_spacing, "mm per pixel (default 200 mm field of view)");
  ph->add_option("--table", ph_table, "ellipse table file (default: modified Shepp-Logan)");
  ph->add_option("--unit", ph_unit, "hu, mu or relative");
  ph->add_option("--mu-water", mu_water, "water attenuation, 1/mm");
  ph->add_option("-o,--out", ph_out, "output SFLK image")->required();

  // project
  auto* pr = app.add_subcommand("project", "forward-project an image into a sinogram");
  std::string pr_in, pr_out;
  pr->add_option("input", pr_in, "SFLK image (mu, or HU converted with --mu-water)")->required();
  pr->add_option("--views", geom.n_views, "views over 360 degrees (even)");
  pr->add_option("--dets", geom.n_dets, "detector bins");
  pr->add_option("--det-spacing", geom.det_spacing, "detector bin width, mm");
  pr->add_option("--mu-water", mu_water, "water attenuation, 1/mm");
  pr->add_option("-o,--out", pr_out, "output SFLK sinogram")->required();

  // noise
  auto* no = app.add_subcommand("noise", "simulate a low-dose acquisition");
  std::string no_in, no_out;
  double no_i0 = 2.5e4, no_floor = 1.0;
  std::uint64_t no_seed = 0;
  no->add_option("input", no_in, "SFLK sinogram")->required();
  no->add_option("--i0", no_i0, "expected photons per ray");
  no->add_option("--count-floor", no_floor, "photon count floor before the log");
  no->add_option("--seed", no_seed, "noise seed")->required();
  no->add_option("-o,--out", no_out, "output SFLK sinogram")->required();

  // flick
  auto* fl = app.add_subcommand("flick", "swap random conjugate pairs");
  std::string fl_in, fl_out;
  std::uint64_t fl_l = 400000, fl_seed = 0;
  fl->add_option("input", fl_in, "SFLK sinogram")->required();
  fl->add_option("--l", fl_l, "toggle draws over the conjugate pairs");
  fl->add_option("--seed", fl_seed, "flick seed")->required();
  fl->add_option("-o,--out", fl_out, "output SFLK sinogram")->required();

  // recon
  auto* rc = app.add_subcommand("recon", "SART reconstruction");
  std::string rc_in, rc_out, rc_unit = "hu";
  int rc_size = 0;
  double rc_spacing = 0.0;
  bool rc_allow_negative = false;
  rc->add_option("input", rc_in, "SFLK sinogram")->required();
  rc->add_option("--size", rc_size, "image pixels per side")->required()->check(CLI::Range(16, 8192));
  rc->add_option("--pixel-spacing", rc_spacing, "mm per pixel (default: detector spacing)");
  rc->add_option("--iterations", sart.iterations, "SART sweeps")->check(CLI::Range(1, 10000));
  rc->add_option("--relaxation", sart.relaxation, "relaxation factor in (0, 2]");
  rc->add_option("--epsilon", sart.epsilon, "normalization guard");
  rc->add_flag("--allow-negative", rc_allow_negative, "skip the nonnegativity clamp");
  rc->add_option("--unit", rc_unit, "output unit: hu or mu");
  rc->add_option("--mu-water", mu_water, "water attenuation, 1/mm");
  rc->add_option("-o,--out", rc_out, "output SFLK image")->required();

  // denoise
  auto* de = app.add_subcommand("denoise", "zero-shot sinogram denoising");
  std::string de_in, de_out;
  bool de_independent = false;
  de->add_option("input", de_in, "SFLK sinogram")->required();
  de->add_option("--seed", dn.seed, "denoising seed")->required();
  de->add_option("--l", dn.flick_draws, "flick draws per copy");
  de->add_option("--channels", dn.channels, "hidden channels")->check(CLI::Range(1, 512));
  de->add_option("--alpha", dn.alpha, "consistency weight");
  de->add_option("--lr", dn.learning_rate, "Adam learning rate");
  de->add_option("--lr-halve-every", dn.lr_halve_every, "halve the learning rate every n steps (0 = never)");
  de->add_option("--steps", dn.train_steps, "training steps per pass");
  de->add_option("--passes", dn.passes, "denoising passes")->check(CLI::Range(1, 16));
  de->add_option("--reflick-every", dn.reflick_every, "new flick plan every n steps (0 = fixed)");
  de->add_flag("--independent-pair", de_independent, "train on two flicked copies");
  de->add_option("-o,--out", de_out, "output SFLK sinogram")->required();

  // metrics
  auto* me = app.add_subcommand("metrics", "PSNR and SSIM of a test image against a reference");
  std::string me_ref, me_test, me_out;
  double me_range = 0.0;
  me->add_option("reference", me_ref, "SFLK image")->required();
  me->add_option("test", me_test, "SFLK image")->required();
  me->add_option("--range", me_range, "dynamic range (default: reference max - min)");
  me->add_option("-o,--out", me_out, "CSV output (default stdout)");

  // export
  auto* ex = app.add_subcommand("export", "write an HU image as 16-bit PGM");
  std::string ex_in, ex_out;
  double ex_lo = -500.0, ex_hi = 500.0;
  ex->add_option("input", ex_in, "SFLK image in HU")->required();
  ex->add_option("--window-lo", ex_lo, "HU mapped to 0");
  ex->add_option("--window-hi", ex_hi, "HU mapped to 65535");
  ex->add_option("-o,--out", ex_out, "output PGM")->required();

  // pipeline
  auto* pi = app.add_subcommand("pipeline", "run the full experiment from a config file");
  std::string pi_cfg, pi_out;
  std::vector<std::string> pi_set;
  bool pi_help_keys = false;
  pi->add_option("config", pi_cfg, "key = value config file");
  pi->add_option("--set", pi_set, "override key=value (repeatable)");
  pi->add_option("--out", pi_out, "output directory (overrides output_dir)");
  pi->add_flag("--help-keys", pi_help_keys, "list every config key with default and range");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "sflick: error status=invalid_argument exit=%d: %s\n", kExitFlags, e.what());
    return kExitFlags;
  }

  sflk_set_logging(quiet ? 0 : 1);
  if (threads > 0) sflk_set_threads(threads);

  try {
    if (*ph) {
      const sflk_unit unit = parse_unit(ph_unit);
      const double spacing = ph_spacing > 0.0 ? ph_spacing : 200.0 / ph_size;
      sflk_matrix* m = nullptr;
      check(sflk_phantom(ph_size, spacing, ph_table.empty() ? nullptr : ph_table.c_str(), unit, mu_water, &m));
      write_matrix(take(m), ph_out);
    } else if (*pr) {
      guard_output(pr_out, {pr_in});
      Matrix img = read_matrix(pr_in, SFLK_KIND_IMAGE);
      if (sflk_matrix_unit(img.get()) != SFLK_UNIT_MU) {
        sflk_matrix* mu = nullptr;
        check(sflk_convert_unit(img.get(), SFLK_UNIT_MU, mu_water, &mu));
        img = take(mu);
      }
      geom.image_size = static_cast<int32_t>(sflk_matrix_rows(img.get()));
      geom.pixel_spacing = sflk_matrix_spacing(img.get());
      sflk_matrix* s = nullptr;
      check(sflk_forward_project(img.get(), &geom, &s));
      write_matrix(take(s), pr_out);
    } else if (*no) {
      guard_output(no_out, {no_in});
      Matrix s = read_matrix(no_in, SFLK_KIND_SINOGRAM);
      sflk_matrix* n = nullptr;
      check(sflk_apply_low_dose(s.get(), no_i0, no_seed, no_floor, &n));
      write_matrix(take(n), no_out);
    } else if (*fl) {
      guard_output(fl_out, {fl_in});
      Matrix s = read_matrix(fl_in, SFLK_KIND_SINOGRAM);
      sflk_matrix* f = nullptr;
      double fraction = 0.0;
      check(sflk_flick(s.get(), fl_l, fl_seed, &f, &fraction));
      write_matrix(take(f), fl_out);
      std::printf("swapped_fraction,%s\n", fmt6(fraction).c_str());
    } else if (*rc) {
      guard_output(rc_out, {rc_in});
      Matrix s = read_matrix(rc_in, SFLK_KIND_SINOGRAM);
      const sflk_unit unit = parse_unit(rc_unit);
      if (unit == SFLK_UNIT_RELATIVE) flag_error("recon output unit must be hu or mu");
      sflk_geometry g{static_cast<int32_t>(sflk_matrix_rows(s.get())), static_cast<int32_t>(sflk_matrix_cols(s.get())),
                      sflk_matrix_spacing(s.get()), rc_spacing > 0.0 ? rc_spacing : sflk_matrix_spacing(s.get()),
                      rc_size};
      sart.nonneg = rc_allow_negative ? 0 : 1;
      sflk_matrix* mu = nullptr;
      check(sflk_sart(s.get(), &g, &sart, nullptr, &mu));
      Matrix out = take(mu);
      if (unit == SFLK_UNIT_HU) {
        sflk_matrix* hu = nullptr;
        check(sflk_convert_unit(out.get(), SFLK_UNIT_HU, mu_water, &hu));
        out = take(hu);
      }
      write_matrix(out, rc_out);
    } else if (*de) {
      guard_output(de_out, {de_in});
      Matrix s = read_matrix(de_in, SFLK_KIND_SINOGRAM);
      dn.independent_pair = de_independent ? 1 : 0;
      sflk_matrix* d = nullptr;
      check(sflk_denoise(s.get(), &dn, &d));
      write_matrix(take(d), de_out);
    } else if (*me) {
      if (!me_out.empty() && me_out != "-") guard_output(me_out, {me_ref, me_test});
      Matrix ref = read_matrix(me_ref, SFLK_KIND_IMAGE);
      Matrix test = read_matrix(me_test, SFLK_KIND_IMAGE);
      sflk_metrics m;
      check(sflk_compute_metrics(ref.get(), test.get(), me_range, &m));
      write_text(me_out, "psnr_db,ssim,range\n" + (m.identical ? std::string("inf") : fmt6(m.psnr_db)) + "," +
                             fmt6(m.ssim) + "," + fmt6(m.range) + "\n");
    } else if (*ex) {
      guard_output(ex_out, {ex_in});
      Matrix img = read_matrix(ex_in, SFLK_KIND_IMAGE);
      check(sflk_export_pgm(img.get(), ex_lo, ex_hi, ex_out.c_str()));
    } else if (*pi) {
      if (pi_help_keys) {
        std::fputs(sflk_config_help(), stdout);
        return 0;
      }
      Config cfg(sflk_config_new());
      if (!cfg) throw Failure{kExitNumeric, "internal", "out of memory"};
      if (!pi_cfg.empty()) check(sflk_config_load(cfg.get(), pi_cfg.c_str()));
      for (const auto& kv : pi_set) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) flag_error("--set expects key=value, got '" + kv + "'");
        check(sflk_config_set(cfg.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
      }
      if (!pi_out.empty()) check(sflk_config_set(cfg.get(), "output_dir", pi_out.c_str()));
      check(sflk_config_validate(cfg.get()));
      sflk_method_score rows[3];
      size_t n = 0;
      check(sflk_run_experiment(cfg.get(), rows, 3, &n));
      std::printf("method,psnr_db,ssim\n");
      for (size_t i = 0; i < n && i < 3; ++i)
        std::printf("%s,%s,%s\n", rows[i].method, rows[i].identical ? "inf" : fmt6(rows[i].psnr_db).c_str(),
                    fmt6(rows[i].ssim).c_str());
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "sflick: error status=%s exit=%d: %s\n", f.status.c_str(), f.exit_code, f.message.c_str());
    return f.exit_code;
  }
  return 0;
}
