#include "sflick/sflick.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <filesystem>
#include <new>
#include <optional>
#include <string>
#include <variant>

#include "sflick/config.hpp"
#include "sflick/container.hpp"
#include "sflick/export.hpp"
#include "sflick/flick.hpp"
#include "sflick/log.hpp"
#include "sflick/metrics.hpp"
#include "sflick/noisesim.hpp"
#include "sflick/parallel.hpp"
#include "sflick/phantom.hpp"
#include "sflick/pipeline.hpp"
#include "sflick/projector.hpp"

struct sflk_matrix {
  std::variant<sflick::Image, sflick::Sinogram> value;
};

struct sflk_config {
  sflick::PipelineConfig cfg;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_string_result;

sflk_status to_status(sflick::ErrorCode code) {
  using sflick::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_argument: return SFLK_ERR_INVALID_ARGUMENT;
    case ErrorCode::io: return SFLK_ERR_IO;
    case ErrorCode::bad_magic: return SFLK_ERR_BAD_MAGIC;
    case ErrorCode::unsupported_version: return SFLK_ERR_UNSUPPORTED_VERSION;
    case ErrorCode::truncated_payload: return SFLK_ERR_TRUNCATED;
    case ErrorCode::non_finite: return SFLK_ERR_NON_FINITE;
    case ErrorCode::unit_mismatch: return SFLK_ERR_UNIT;
    case ErrorCode::dims_mismatch: return SFLK_ERR_DIMS;
    case ErrorCode::kind_mismatch: return SFLK_ERR_KIND;
    case ErrorCode::odd_views: return SFLK_ERR_ODD_VIEWS;
    case ErrorCode::config: return SFLK_ERR_CONFIG;
    case ErrorCode::numeric: return SFLK_ERR_NUMERIC;
  }
  return SFLK_ERR_INTERNAL;
}

sflk_status fail(sflk_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

template <typename F>
sflk_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SFLK_OK;
  } catch (const sflick::Error& e) {
    return fail(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(SFLK_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(SFLK_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(SFLK_ERR_INTERNAL, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw sflick::Error(sflick::ErrorCode::invalid_argument, what);
}

sflick::ScanGeometry to_geometry(const sflk_geometry* g) {
  require(g != nullptr, "geometry is null");
  return {g->n_views, g->n_dets, g->det_spacing, g->pixel_spacing, g->image_size};
}

const sflick::Image& as_image(const sflk_matrix* m) {
  require(m != nullptr, "matrix is null");
  if (const auto* img = std::get_if<sflick::Image>(&m->value)) return *img;
  throw sflick::Error(sflick::ErrorCode::kind_mismatch, "expected an image");
}

const sflick::Sinogram& as_sinogram(const sflk_matrix* m) {
  require(m != nullptr, "matrix is null");
  if (const auto* s = std::get_if<sflick::Sinogram>(&m->value)) return *s;
  throw sflick::Error(sflick::ErrorCode::kind_mismatch, "expected a sinogram");
}

/// Sinogram geometry supplied by the caller overrides the file-derived one
/// but must agree with it on the acquisition side.
sflick::ScanGeometry merged_geometry(const sflick::Sinogram& s, const sflk_geometry* g) {
  sflick::ScanGeometry geom = to_geometry(g);
  if (geom.n_views != s.geometry.n_views || geom.n_dets != s.geometry.n_dets)
    throw sflick::Error(sflick::ErrorCode::dims_mismatch, "geometry does not match sinogram dimensions");
  return geom;
}

void emit(sflk_matrix** out, sflick::Image img) {
  *out = new sflk_matrix{std::move(img)};
}
void emit(sflk_matrix** out, sflick::Sinogram s) {
  *out = new sflk_matrix{std::move(s)};
}

sflick::DenoiseConfig to_denoise(const sflk_denoise_options* o) {
  require(o != nullptr, "denoise options are null");
  sflick::DenoiseConfig d;
  d.flick_draws = o->flick_draws;
  d.seed = o->seed;
  d.channels = o->channels;
  d.loss.alpha = o->alpha;
  d.adam.lr = o->learning_rate;
  d.adam.halve_every = o->lr_halve_every;
  d.train_steps = o->train_steps;
  d.passes = o->passes;
  d.reflick_every = o->reflick_every;
  d.independent_pair = o->independent_pair != 0;
  return d;
}

}  // namespace

extern "C" {

const char* sflk_version(void) { return "1.0.0"; }

const char* sflk_status_name(sflk_status status) {
  switch (status) {
    case SFLK_OK: return "ok";
    case SFLK_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case SFLK_ERR_IO: return "io";
    case SFLK_ERR_BAD_MAGIC: return "bad_magic";
    case SFLK_ERR_UNSUPPORTED_VERSION: return "unsupported_version";
    case SFLK_ERR_TRUNCATED: return "truncated_payload";
    case SFLK_ERR_NON_FINITE: return "non_finite";
    case SFLK_ERR_UNIT: return "unit_mismatch";
    case SFLK_ERR_DIMS: return "dims_mismatch";
    case SFLK_ERR_KIND: return "kind_mismatch";
    case SFLK_ERR_ODD_VIEWS: return "odd_views";
    case SFLK_ERR_CONFIG: return "config";
    case SFLK_ERR_NUMERIC: return "numeric";
    case SFLK_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* sflk_last_error(void) { return g_last_error.c_str(); }

void sflk_set_threads(int32_t threads) { sflick::set_thread_count(threads); }

void sflk_set_logging(int32_t enabled) {
  if (enabled)
    sflick::set_log_sink([](const std::string& msg) { std::fprintf(stderr, "[sflick] %s\n", msg.c_str()); });
  else
    sflick::set_log_sink(nullptr);
}

void sflk_geometry_default(sflk_geometry* out) {
  if (!out) return;
  const sflick::ScanGeometry g = sflick::PipelineConfig{}.geometry;
  *out = {g.n_views, g.n_dets, g.det_spacing, g.pixel_spacing, g.image_size};
}

void sflk_sart_options_default(sflk_sart_options* out) {
  if (!out) return;
  const sflick::SartConfig s;
  *out = {s.iterations, s.relaxation, s.nonneg ? 1 : 0, s.epsilon};
}

void sflk_denoise_options_default(sflk_denoise_options* out) {
  if (!out) return;
  const sflick::DenoiseConfig d;
  *out = {d.flick_draws, d.seed, d.channels, d.loss.alpha, d.adam.lr, d.adam.halve_every,
          d.train_steps, d.passes, d.reflick_every, d.independent_pair ? 1 : 0};
}

sflk_status sflk_matrix_read(const char* path, sflk_matrix** out) {
  return guarded([&] {
    require(path && out, "null argument");
    const sflick::Container c = sflick::read_container(path);
    if (c.header.kind == sflick::Kind::image)
      emit(out, sflick::to_image(c));
    else if (c.header.kind == sflick::Kind::sinogram)
      emit(out, sflick::to_sinogram(c));
    else
      throw sflick::Error(sflick::ErrorCode::kind_mismatch, "container holds a network checkpoint, not a matrix");
  });
}

sflk_status sflk_matrix_write(const sflk_matrix* m, const char* path) {
  return guarded([&] {
    require(m && path, "null argument");
    if (const auto* img = std::get_if<sflick::Image>(&m->value))
      sflick::save_image(path, *img);
    else
      sflick::save_sinogram(path, std::get<sflick::Sinogram>(m->value));
  });
}

void sflk_matrix_free(sflk_matrix* m) { delete m; }

sflk_status sflk_image_create(int32_t size, double pixel_spacing, sflk_unit unit, const double* values,
                              sflk_matrix** out) {
  return guarded([&] {
    require(out && size > 0 && pixel_spacing > 0.0, "invalid image parameters");
    require(unit >= SFLK_UNIT_RELATIVE && unit <= SFLK_UNIT_MU, "unknown unit");
    sflick::Image img(size, pixel_spacing, static_cast<sflick::Unit>(unit));
    if (values) std::copy(values, values + img.data.size(), img.data.values().begin());
    if (!sflick::all_finite(img.data.values())) throw sflick::Error(sflick::ErrorCode::non_finite, "non-finite data");
    emit(out, std::move(img));
  });
}

sflk_status sflk_sinogram_create(const sflk_geometry* geom, const double* values, sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto g = to_geometry(geom);
    g.validate();
    sflick::Sinogram s(g);
    if (values) std::copy(values, values + s.data.size(), s.data.values().begin());
    if (!sflick::all_finite(s.data.values())) throw sflick::Error(sflick::ErrorCode::non_finite, "non-finite data");
    emit(out, std::move(s));
  });
}

sflk_kind sflk_matrix_kind(const sflk_matrix* m) {
  return m && std::holds_alternative<sflick::Sinogram>(m->value) ? SFLK_KIND_SINOGRAM : SFLK_KIND_IMAGE;
}

sflk_unit sflk_matrix_unit(const sflk_matrix* m) {
  if (!m) return SFLK_UNIT_RELATIVE;
  if (const auto* img = std::get_if<sflick::Image>(&m->value)) return static_cast<sflk_unit>(img->unit);
  return SFLK_UNIT_RELATIVE;
}

size_t sflk_matrix_rows(const sflk_matrix* m) {
  if (!m) return 0;
  return std::visit([](const auto& v) { return v.data.rows(); }, m->value);
}

size_t sflk_matrix_cols(const sflk_matrix* m) {
  if (!m) return 0;
  return std::visit([](const auto& v) { return v.data.cols(); }, m->value);
}

double sflk_matrix_spacing(const sflk_matrix* m) {
  if (!m) return 0.0;
  if (const auto* img = std::get_if<sflick::Image>(&m->value)) return img->pixel_spacing;
  return std::get<sflick::Sinogram>(m->value).geometry.det_spacing;
}

sflk_status sflk_matrix_copy_values(const sflk_matrix* m, double* dst, size_t capacity) {
  return guarded([&] {
    require(m && dst, "null argument");
    const auto vals = std::visit([](const auto& v) { return v.data.values(); }, m->value);
    if (capacity < vals.size()) throw sflick::Error(sflick::ErrorCode::dims_mismatch, "destination too small");
    std::copy(vals.begin(), vals.end(), dst);
  });
}

sflk_status sflk_phantom(int32_t size, double pixel_spacing, const char* table_path, sflk_unit unit, double mu_water,
                         sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    require(pixel_spacing > 0.0, "pixel spacing must be positive");
    const auto ellipses = (table_path && *table_path) ? sflick::load_ellipse_table(table_path)
                                                      : sflick::modified_shepp_logan();
    sflick::Image img = sflick::rasterize(ellipses, size, pixel_spacing);
    if (unit == SFLK_UNIT_HU || unit == SFLK_UNIT_MU) img = sflick::intensity_to_hu(img);
    if (unit == SFLK_UNIT_MU) img = sflick::hu_to_mu(img, mu_water);
    emit(out, std::move(img));
  });
}

sflk_status sflk_convert_unit(const sflk_matrix* m, sflk_unit target, double mu_water, sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    sflick::Image img = as_image(m);
    const auto to = static_cast<sflick::Unit>(target);
    if (img.unit == to) {
      emit(out, std::move(img));
      return;
    }
    if (img.unit == sflick::Unit::relative_intensity) img = sflick::intensity_to_hu(img);
    if (img.unit == sflick::Unit::mu_per_mm && to != sflick::Unit::mu_per_mm) img = sflick::mu_to_hu(img, mu_water);
    if (to == sflick::Unit::mu_per_mm && img.unit == sflick::Unit::hu) img = sflick::hu_to_mu(img, mu_water);
    if (img.unit != to)
      throw sflick::Error(sflick::ErrorCode::unit_mismatch, "no conversion to relative intensity");
    emit(out, std::move(img));
  });
}

sflk_status sflk_forward_project(const sflk_matrix* mu, const sflk_geometry* geom, sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    emit(out, sflick::forward_project(as_image(mu), to_geometry(geom)));
  });
}

sflk_status sflk_back_project(const sflk_matrix* sino, const sflk_geometry* geom, sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto& s = as_sinogram(sino);
    emit(out, sflick::back_project(s, merged_geometry(s, geom)));
  });
}

sflk_status sflk_sart(const sflk_matrix* sino, const sflk_geometry* geom, const sflk_sart_options* opts,
                      const sflk_matrix* init, sflk_matrix** out) {
  return guarded([&] {
    require(out && opts, "null argument");
    const auto& s = as_sinogram(sino);
    sflick::SartConfig cfg;
    cfg.iterations = opts->iterations;
    cfg.relaxation = opts->relaxation;
    cfg.nonneg = opts->nonneg != 0;
    cfg.epsilon = opts->epsilon;
    std::optional<sflick::Image> start;
    if (init) start = as_image(init);
    emit(out, sflick::sart(s, merged_geometry(s, geom), cfg, start).image);
  });
}

sflk_status sflk_apply_low_dose(const sflk_matrix* sino, double i0, uint64_t seed, double count_floor,
                                sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    sflick::NoiseConfig cfg;
    cfg.i0 = i0;
    cfg.seed = seed;
    cfg.count_floor = count_floor;
    emit(out, sflick::apply_low_dose(as_sinogram(sino), cfg));
  });
}

sflk_status sflk_flick(const sflk_matrix* sino, uint64_t draws, uint64_t seed, sflk_matrix** out,
                       double* swapped_fraction) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto& s = as_sinogram(sino);
    if (s.data.rows() % 2 != 0) throw sflick::Error(sflick::ErrorCode::odd_views, "number of views must be even");
    const auto mask = sflick::expand_plan({draws, seed}, s.data.size() / 2);
    sflick::Sinogram flicked = sflick::apply_swap_mask(s, mask);
    if (swapped_fraction) *swapped_fraction = sflick::swapped_fraction(mask);
    emit(out, std::move(flicked));
  });
}

sflk_status sflk_conjugate_index(const sflk_geometry* geom, int32_t view, int32_t det, int32_t* view_out,
                                 int32_t* det_out) {
  return guarded([&] {
    require(view_out && det_out, "null argument");
    const auto c = sflick::conjugate_index(to_geometry(geom), view, det);
    *view_out = c.view;
    *det_out = c.det;
  });
}

sflk_status sflk_conjugate_discrepancy(const sflk_matrix* sino, sflk_conjugate_stats* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto st = sflick::conjugate_discrepancy(as_sinogram(sino));
    *out = {st.max_abs, st.mean_abs, st.rms};
  });
}

sflk_status sflk_denoise(const sflk_matrix* sino, const sflk_denoise_options* opts, sflk_matrix** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    auto passes = sflick::denoise(as_sinogram(sino), to_denoise(opts));
    emit(out, std::move(passes.back().output));
  });
}

sflk_status sflk_compute_metrics(const sflk_matrix* ref, const sflk_matrix* test, double range, sflk_metrics* out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    const auto& a = as_image(ref);
    const auto& b = as_image(test);
    if (a.unit != b.unit) throw sflick::Error(sflick::ErrorCode::unit_mismatch, "images have different units");
    const double r = range > 0.0 ? range : sflick::image_range(a);
    const auto p = sflick::psnr(a, b, r);
    sflick::SsimParams sp;
    sp.range = r;
    out->identical = p.identical ? 1 : 0;
    out->psnr_db = p.db;
    out->ssim = sflick::ssim(a, b, sp);
    out->range = r;
  });
}

sflk_status sflk_export_pgm(const sflk_matrix* hu, double window_lo, double window_hi, const char* path) {
  return guarded([&] {
    require(path != nullptr, "null argument");
    sflick::write_pgm16(path, as_image(hu), window_lo, window_hi);
  });
}

sflk_config* sflk_config_new(void) { return new (std::nothrow) sflk_config{}; }

void sflk_config_free(sflk_config* cfg) { delete cfg; }

sflk_status sflk_config_load(sflk_config* cfg, const char* path) {
  return guarded([&] {
    require(cfg && path, "null argument");
    cfg->cfg = sflick::load_config(path, cfg->cfg);
  });
}

sflk_status sflk_config_set(sflk_config* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg && key && value, "null argument");
    sflick::set_config_value(cfg->cfg, key, value);
  });
}

sflk_status sflk_config_validate(const sflk_config* cfg) {
  return guarded([&] {
    require(cfg != nullptr, "null argument");
    try {
      cfg->cfg.validate();
    } catch (const sflick::Error& e) {
      throw sflick::Error(sflick::ErrorCode::config, e.what());
    }
  });
}

const char* sflk_config_get(const sflk_config* cfg, const char* key) {
  if (!cfg || !key) return nullptr;
  try {
    g_string_result = sflick::get_config_value(cfg->cfg, key);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return nullptr;
  }
  return g_string_result.c_str();
}

const char* sflk_config_manifest(const sflk_config* cfg) {
  if (!cfg) return nullptr;
  g_string_result = sflick::format_config(cfg->cfg);
  return g_string_result.c_str();
}

const char* sflk_config_help(void) {
  g_string_result = sflick::config_help();
  return g_string_result.c_str();
}

sflk_status sflk_run_experiment(const sflk_config* cfg, sflk_method_score* rows, size_t capacity, size_t* row_count) {
  return guarded([&] {
    require(cfg != nullptr, "null argument");
    const auto rep = sflick::run_experiment(cfg->cfg);
    if (row_count) *row_count = rep.rows.size();
    for (size_t i = 0; rows && i < capacity && i < rep.rows.size(); ++i) {
      sflk_method_score& r = rows[i];
      std::memset(r.method, 0, sizeof r.method);
      std::strncpy(r.method, rep.rows[i].method.c_str(), sizeof r.method - 1);
      r.identical = rep.rows[i].identical ? 1 : 0;
      r.psnr_db = rep.rows[i].psnr_db;
      r.ssim = rep.rows[i].ssim;
    }
  });
}

}  // extern "C"
