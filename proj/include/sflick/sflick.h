/*
 * sflick C API.
 *
 * Matrices (images, sinograms) are opaque handles owned by the caller and
 * released with sflk_matrix_free(). Every fallible call returns an
 * sflk_status; on failure sflk_last_error() holds a one-line message for the
 * calling thread. Output handles are only written on success.
 */
#ifndef SFLICK_H
#define SFLICK_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(SFLK_BUILDING_LIBRARY)
#define SFLK_API __attribute__((visibility("default")))
#else
#define SFLK_API
#endif

typedef enum sflk_status {
  SFLK_OK = 0,
  SFLK_ERR_INVALID_ARGUMENT = 1,
  SFLK_ERR_IO = 2,
  SFLK_ERR_BAD_MAGIC = 3,
  SFLK_ERR_UNSUPPORTED_VERSION = 4,
  SFLK_ERR_TRUNCATED = 5,
  SFLK_ERR_NON_FINITE = 6,
  SFLK_ERR_UNIT = 7,
  SFLK_ERR_DIMS = 8,
  SFLK_ERR_KIND = 9,
  SFLK_ERR_ODD_VIEWS = 10,
  SFLK_ERR_CONFIG = 11,
  SFLK_ERR_NUMERIC = 12,
  SFLK_ERR_INTERNAL = 13
} sflk_status;

typedef enum sflk_kind { SFLK_KIND_IMAGE = 0, SFLK_KIND_SINOGRAM = 1 } sflk_kind;

/* Matches the SFLK on-disk unit codes. */
typedef enum sflk_unit { SFLK_UNIT_RELATIVE = 0, SFLK_UNIT_HU = 1, SFLK_UNIT_MU = 2 } sflk_unit;

typedef struct sflk_geometry {
  int32_t n_views;
  int32_t n_dets;
  double det_spacing;   /* mm */
  double pixel_spacing; /* mm */
  int32_t image_size;   /* pixels per side */
} sflk_geometry;

typedef struct sflk_matrix sflk_matrix;
typedef struct sflk_config sflk_config;

typedef struct sflk_sart_options {
  int32_t iterations;
  double relaxation;
  int32_t nonneg;
  double epsilon;
} sflk_sart_options;

typedef struct sflk_denoise_options {
  uint64_t flick_draws;
  uint64_t seed;
  int32_t channels;
  double alpha;
  double learning_rate;
  int32_t lr_halve_every;
  int32_t train_steps;
  int32_t passes;
  int32_t reflick_every;
  int32_t independent_pair;
} sflk_denoise_options;

typedef struct sflk_conjugate_stats {
  double max_abs;
  double mean_abs;
  double rms;
} sflk_conjugate_stats;

typedef struct sflk_metrics {
  int32_t identical; /* nonzero when MSE == 0; psnr_db is then +inf */
  double psnr_db;
  double ssim;
  double range; /* dynamic range used */
} sflk_metrics;

typedef struct sflk_method_score {
  char method[16];
  int32_t identical;
  double psnr_db;
  double ssim;
} sflk_method_score;

SFLK_API const char* sflk_version(void);
SFLK_API const char* sflk_status_name(sflk_status status);
SFLK_API const char* sflk_last_error(void);
SFLK_API void sflk_set_threads(int32_t threads);
/* Nonzero enables one line per pipeline stage on stderr (default on). */
SFLK_API void sflk_set_logging(int32_t enabled);

SFLK_API void sflk_geometry_default(sflk_geometry* out);
SFLK_API void sflk_sart_options_default(sflk_sart_options* out);
SFLK_API void sflk_denoise_options_default(sflk_denoise_options* out);

/* --- matrices and SFLK containers --- */
SFLK_API sflk_status sflk_matrix_read(const char* path, sflk_matrix** out);
SFLK_API sflk_status sflk_matrix_write(const sflk_matrix* m, const char* path);
SFLK_API void sflk_matrix_free(sflk_matrix* m);
SFLK_API sflk_status sflk_image_create(int32_t size, double pixel_spacing, sflk_unit unit, const double* values,
                                       sflk_matrix** out);
SFLK_API sflk_status sflk_sinogram_create(const sflk_geometry* geom, const double* values, sflk_matrix** out);
SFLK_API sflk_kind sflk_matrix_kind(const sflk_matrix* m);
SFLK_API sflk_unit sflk_matrix_unit(const sflk_matrix* m);
SFLK_API size_t sflk_matrix_rows(const sflk_matrix* m);
SFLK_API size_t sflk_matrix_cols(const sflk_matrix* m);
/* Pixel spacing (images) or detector spacing (sinograms), mm. */
SFLK_API double sflk_matrix_spacing(const sflk_matrix* m);
/* Copies rows*cols values into dst (capacity in elements). */
SFLK_API sflk_status sflk_matrix_copy_values(const sflk_matrix* m, double* dst, size_t capacity);

/* --- phantom and units --- */
/* table_path may be NULL for the built-in modified Shepp-Logan table. */
SFLK_API sflk_status sflk_phantom(int32_t size, double pixel_spacing, const char* table_path, sflk_unit unit,
                                  double mu_water, sflk_matrix** out);
SFLK_API sflk_status sflk_convert_unit(const sflk_matrix* img, sflk_unit target, double mu_water, sflk_matrix** out);

/* --- projector --- */
SFLK_API sflk_status sflk_forward_project(const sflk_matrix* mu, const sflk_geometry* geom, sflk_matrix** out);
SFLK_API sflk_status sflk_back_project(const sflk_matrix* sino, const sflk_geometry* geom, sflk_matrix** out);
/* init may be NULL (zero image). Output unit is 1/mm. */
SFLK_API sflk_status sflk_sart(const sflk_matrix* sino, const sflk_geometry* geom, const sflk_sart_options* opts,
                               const sflk_matrix* init, sflk_matrix** out);

/* --- noise and flicking --- */
SFLK_API sflk_status sflk_apply_low_dose(const sflk_matrix* sino, double i0, uint64_t seed, double count_floor,
                                         sflk_matrix** out);
SFLK_API sflk_status sflk_flick(const sflk_matrix* sino, uint64_t draws, uint64_t seed, sflk_matrix** out,
                                double* swapped_fraction);
SFLK_API sflk_status sflk_conjugate_index(const sflk_geometry* geom, int32_t view, int32_t det, int32_t* view_out,
                                          int32_t* det_out);
SFLK_API sflk_status sflk_conjugate_discrepancy(const sflk_matrix* sino, sflk_conjugate_stats* out);

/* --- denoising --- */
SFLK_API sflk_status sflk_denoise(const sflk_matrix* sino, const sflk_denoise_options* opts, sflk_matrix** out);

/* --- metrics and export --- */
/* range <= 0 takes the reference image's max - min. */
SFLK_API sflk_status sflk_compute_metrics(const sflk_matrix* ref, const sflk_matrix* test, double range,
                                          sflk_metrics* out);
SFLK_API sflk_status sflk_export_pgm(const sflk_matrix* hu, double window_lo, double window_hi, const char* path);

/* --- pipeline configuration and experiment --- */
SFLK_API sflk_config* sflk_config_new(void);
SFLK_API void sflk_config_free(sflk_config* cfg);
SFLK_API sflk_status sflk_config_load(sflk_config* cfg, const char* path);
SFLK_API sflk_status sflk_config_set(sflk_config* cfg, const char* key, const char* value);
SFLK_API sflk_status sflk_config_validate(const sflk_config* cfg);
/* Returned strings stay valid until the next call on the same thread. */
SFLK_API const char* sflk_config_get(const sflk_config* cfg, const char* key);
SFLK_API const char* sflk_config_manifest(const sflk_config* cfg);
SFLK_API const char* sflk_config_help(void);

/* Runs the full experiment; fills up to capacity rows (SART, SF, Ours). */
SFLK_API sflk_status sflk_run_experiment(const sflk_config* cfg, sflk_method_score* rows, size_t capacity,
                                         size_t* row_count);

#ifdef __cplusplus
}
#endif

#endif /* SFLICK_H */
