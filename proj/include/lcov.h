/* Local covariance maps: filter-bank training, covariance-map extraction and
 * editing, and image synthesis from covariance maps.
 *
 * Every function returning lcov_status sets a thread-local message readable
 * with lcov_last_error() when it fails. Objects are opaque and owned by the
 * caller once returned; release them with the matching *_free function.
 * Output pointers are left untouched on failure. */
#ifndef LCOV_H
#define LCOV_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define LCOV_API __declspec(dllexport)
#else
#define LCOV_API __attribute__((visibility("default")))
#endif

typedef enum lcov_status {
  LCOV_OK = 0,
  LCOV_ERR_INVALID_INPUT = 1,
  LCOV_ERR_IO = 2,
  LCOV_ERR_FORMAT = 3,
  LCOV_ERR_NUMERIC = 4,
  LCOV_ERR_INTERNAL = 5
} lcov_status;

typedef struct lcov_image lcov_image;
typedef struct lcov_bank lcov_bank;
typedef struct lcov_covmap lcov_covmap;

LCOV_API const char *lcov_version(void);
LCOV_API const char *lcov_last_error(void);
LCOV_API const char *lcov_status_name(lcov_status s);

/* 0 selects the hardware concurrency. */
LCOV_API lcov_status lcov_set_threads(unsigned n);
LCOV_API unsigned lcov_get_threads(void);

/* ---- images ---------------------------------------------------------- */

/* preprocess: "none", "mean-subtract", "standardize" or "log-normalize";
 * NULL means "none". */
LCOV_API lcov_status lcov_image_load(const char *path, const char *preprocess, lcov_image **out);
/* Row-major pixels, copied. */
LCOV_API lcov_status lcov_image_from_data(size_t height, size_t width, const double *pixels, lcov_image **out);
LCOV_API lcov_status lcov_image_crop(const lcov_image *img, size_t row, size_t col, size_t height, size_t width,
                                     lcov_image **out);
/* Divides by the pixel standard deviation; the mean is kept. */
LCOV_API lcov_status lcov_image_scale_to_unit_std(const lcov_image *img, lcov_image **out);
LCOV_API size_t lcov_image_height(const lcov_image *img);
LCOV_API size_t lcov_image_width(const lcov_image *img);
/* Row-major view valid until the image is freed. */
LCOV_API const double *lcov_image_data(const lcov_image *img);
/* Plain PGM with values rounded and clamped to [0, maxval]. */
LCOV_API lcov_status lcov_image_save_pgm(const lcov_image *img, const char *path, int maxval);
/* 16-bit PGM spanning the full code range plus `<path>.affine`. */
LCOV_API lcov_status lcov_image_save_pgm_rescaled(const lcov_image *img, const char *path);
LCOV_API void lcov_image_free(lcov_image *img);

/* ---- filter banks ----------------------------------------------------- */

LCOV_API lcov_status lcov_bank_load(const char *path, lcov_bank **out);
LCOV_API lcov_status lcov_bank_save(const lcov_bank *bank, const char *path);
/* Derivative-of-Gaussian banks: n = 2 gives the oriented pair; larger n adds
 * a low-pass and a high-pass filter around oriented band-pass filters. */
LCOV_API lcov_status lcov_bank_oriented(size_t n, size_t kernel_size, double blur_sigma, lcov_bank **out);
/* Unit-variance Gaussian taps. */
LCOV_API lcov_status lcov_bank_random(size_t n, size_t kernel_size, double blur_sigma, uint64_t seed,
                                      lcov_bank **out);
/* Filters i and j of `bank` as a new two-filter bank. */
LCOV_API lcov_status lcov_bank_pair(const lcov_bank *bank, size_t i, size_t j, lcov_bank **out);
LCOV_API size_t lcov_bank_num_filters(const lcov_bank *bank);
LCOV_API size_t lcov_bank_kernel_size(const lcov_bank *bank);
LCOV_API double lcov_bank_blur_sigma(const lcov_bank *bank);
/* Row-major K*K taps of filter i, or NULL when out of range. */
LCOV_API const double *lcov_bank_taps(const lcov_bank *bank, size_t i);
LCOV_API void lcov_bank_free(lcov_bank *bank);

/* ---- objective -------------------------------------------------------- */

typedef enum lcov_blur_domain { LCOV_BLUR_SPATIAL = 0, LCOV_BLUR_FREQUENCY = 1 } lcov_blur_domain;

typedef struct lcov_energy {
  double local_dim;
  double recons;
  double global_dim; /* -nuclear norm of the modulated reconstructions */
  double total;
} lcov_energy;

LCOV_API lcov_status lcov_energy_eval(const lcov_image *img, const lcov_bank *bank, size_t patch_size,
                                      size_t patch_stride, double window_sigma, double lambda, double mu,
                                      lcov_blur_domain domain, lcov_energy *out);

/* ---- training --------------------------------------------------------- */

typedef struct lcov_train_config {
  size_t num_filters;
  size_t kernel_size;
  size_t patch_size;
  size_t patch_stride;
  double window_sigma;
  double blur_sigma;
  double lambda;
  double mu;
  double learning_rate; /* <= 0 probes for the rate */
  size_t num_steps;
  size_t crop_size;
  uint64_t seed;
  int gradient_scaling;
  int deterministic; /* log elapsed_seconds as 0 */
  size_t spectrum_samples;
  size_t checkpoint_every; /* 0 disables periodic checkpoints */
  lcov_blur_domain blur_domain;
} lcov_train_config;

LCOV_API void lcov_train_config_default(lcov_train_config *cfg);

typedef struct lcov_train_summary {
  double learning_rate;
  size_t steps;
  lcov_energy final_energy; /* energy logged at the last step; zeros if none */
} lcov_train_summary;

/* Trains on per-crop mean-subtracted crops scaled by the ensemble standard
 * deviation. log_csv and checkpoint_prefix may be NULL; checkpoints are
 * written as `<prefix>_<step>.bank`. On divergence the last finite bank is
 * written as `<prefix>_<step>.bank` (when a prefix is given) and
 * LCOV_ERR_NUMERIC is returned. */
LCOV_API lcov_status lcov_train(const lcov_image *const *images, size_t count, const lcov_train_config *cfg,
                                const char *log_csv, const char *checkpoint_prefix, lcov_bank **out,
                                lcov_train_summary *summary);

/* ---- covariance maps -------------------------------------------------- */

typedef enum lcov_window_kind { LCOV_WINDOW_GAUSSIAN = 0, LCOV_WINDOW_BOXCAR = 1 } lcov_window_kind;

typedef struct lcov_measurements {
  size_t locations;
  size_t per_location;
  size_t total;
} lcov_measurements;

/* window_sigma <= 0 selects neighborhood / 4 for Gaussian windows. */
LCOV_API lcov_status lcov_covmap_extract(const lcov_image *img, const lcov_bank *bank, size_t neighborhood,
                                         size_t stride, lcov_window_kind window, double window_sigma,
                                         lcov_covmap **out);
LCOV_API lcov_status lcov_covmap_threshold_fixed(const lcov_covmap *cm, double tau, lcov_covmap **out);
/* lowpass_channel < 0 treats the largest eigenvalue as the luminance
 * component; otherwise the eigenvector most aligned with that channel. */
LCOV_API lcov_status lcov_covmap_threshold_adaptive(const lcov_covmap *cm, double fraction, int lowpass_channel,
                                                    lcov_covmap **out);
LCOV_API lcov_status lcov_covmap_power(const lcov_covmap *cm, double p, lcov_covmap **out);
LCOV_API lcov_status lcov_covmap_restrict_to_variances(const lcov_covmap *cm, lcov_covmap **out);
LCOV_API lcov_status lcov_covmap_measurements(const lcov_covmap *cm, lcov_measurements *out);
/* Mean participation ratio over locations. */
LCOV_API lcov_status lcov_covmap_mean_participation(const lcov_covmap *cm, double *out);
LCOV_API lcov_status lcov_covmap_save(const lcov_covmap *cm, const char *path);
LCOV_API lcov_status lcov_covmap_load(const char *path, lcov_covmap **out);
LCOV_API void lcov_covmap_free(lcov_covmap *cm);

/* ---- synthesis -------------------------------------------------------- */

typedef struct lcov_synth_config {
  size_t max_steps;
  double step0;
  uint64_t seed;
  double tolerance;
  size_t log_every;
  int double_count_offdiagonal;
  int nonnegative; /* project onto x >= 0 after every step */
} lcov_synth_config;

LCOV_API void lcov_synth_config_default(lcov_synth_config *cfg);

typedef struct lcov_synth_summary {
  size_t steps;
  double initial_objective;
  double best_objective;
  double relative_error; /* sign-insensitive; NaN without a reference */
} lcov_synth_summary;

/* init and reference may be NULL; trace_csv may be NULL. */
LCOV_API lcov_status lcov_synthesize(const lcov_covmap *target, const lcov_bank *bank, const lcov_synth_config *cfg,
                                     const lcov_image *init, const lcov_image *reference, const char *trace_csv,
                                     lcov_image **out, lcov_synth_summary *summary);
LCOV_API lcov_status lcov_synth_objective(const lcov_image *x, const lcov_bank *bank, const lcov_covmap *target,
                                          double *out);
LCOV_API lcov_status lcov_relative_error(const lcov_image *x, const lcov_image *ref, int signless, double *out);
LCOV_API lcov_status lcov_noise_baseline(const lcov_image *ref, double target_rel_error, uint64_t seed,
                                         lcov_image **out);

/* ---- local correlation analysis --------------------------------------- */

typedef struct lcov_correlation_options {
  size_t window;
  double window_sigma;
  size_t stride;
  int subtract_mean;
  size_t bins;
} lcov_correlation_options;

LCOV_API void lcov_correlation_options_default(lcov_correlation_options *opts);

typedef struct lcov_control_summary {
  double median_image;
  double median_noise;
  double median_randomized_filters;
  size_t windows;    /* non-degenerate windows on the image */
  size_t degenerate; /* excluded windows on the image */
} lcov_control_summary;

/* pair must hold two filters. When csv_prefix is non-NULL the histograms are
 * written to `<prefix>_image.csv`, `<prefix>_noise.csv` and
 * `<prefix>_randomized.csv`. */
LCOV_API lcov_status lcov_control_suite(const lcov_image *img, const lcov_bank *pair, uint64_t seed,
                                        const lcov_correlation_options *opts, const char *csv_prefix,
                                        lcov_control_summary *out);
LCOV_API lcov_status lcov_median_local_correlation(const lcov_image *img, const lcov_bank *pair,
                                                   const lcov_correlation_options *opts, double *out);
/* Phase-randomized copy with the same Fourier magnitudes. */
LCOV_API lcov_status lcov_image_phase_randomize(const lcov_image *img, uint64_t seed, lcov_image **out);

#ifdef __cplusplus
}
#endif

#endif
