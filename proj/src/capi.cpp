#include "lcov.h"

#include "analysis.hpp"
#include "banks.hpp"
#include "covmap.hpp"
#include "csv.hpp"
#include "error.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "synthesis.hpp"
#include "trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <new>
#include <string>
#include <thread>

struct lcov_image {
  lcov::Image value;
};
struct lcov_bank {
  lcov::FilterBank value;
};
struct lcov_covmap {
  lcov::CovarianceMap value;
};

namespace {

thread_local std::string g_last_error;

template <typename F> lcov_status guard(F &&f) {
  try {
    f();
    g_last_error.clear();
    return LCOV_OK;
  } catch (const lcov::Error &e) {
    g_last_error = e.what();
    return static_cast<lcov_status>(e.code());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
  } catch (const std::exception &e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return LCOV_ERR_INTERNAL;
}

template <typename T> void need(const T *p, const char *what) {
  lcov::require(p != nullptr, std::string(what) + " is NULL");
}

Eigen::Index as_index(size_t v, const char *what) {
  lcov::require(v <= static_cast<size_t>(std::numeric_limits<int>::max()), std::string(what) + " is too large");
  return static_cast<Eigen::Index>(v);
}

lcov::BlurDomain domain_of(lcov_blur_domain d) {
  lcov::require(d == LCOV_BLUR_SPATIAL || d == LCOV_BLUR_FREQUENCY, "unknown blur domain");
  return d == LCOV_BLUR_SPATIAL ? lcov::BlurDomain::Spatial : lcov::BlurDomain::Frequency;
}

lcov_energy to_c(const lcov::EnergyBreakdown &e) { return {e.local_dim, e.recons, e.global_dim, e.total}; }

lcov::CorrelationOptions options_of(const lcov_correlation_options *o) {
  lcov_correlation_options d;
  lcov_correlation_options_default(&d);
  if (!o)
    o = &d;
  lcov::CorrelationOptions c;
  c.window = as_index(o->window, "window");
  c.window_sigma = o->window_sigma;
  c.stride = as_index(o->stride, "stride");
  c.subtract_mean = o->subtract_mean != 0;
  lcov::require(c.window >= 1 && c.window_sigma > 0.0, "correlation window must be positive");
  return c;
}

std::string checkpoint_path(const std::string &prefix, std::size_t step) {
  return prefix + "_" + std::to_string(step) + ".bank";
}

} // namespace

extern "C" {

const char *lcov_version(void) { return "1.0.0"; }

const char *lcov_last_error(void) { return g_last_error.c_str(); }

const char *lcov_status_name(lcov_status s) {
  switch (s) {
  case LCOV_OK:
    return "ok";
  case LCOV_ERR_INVALID_INPUT:
    return "invalid-input";
  case LCOV_ERR_IO:
    return "io";
  case LCOV_ERR_FORMAT:
    return "format";
  case LCOV_ERR_NUMERIC:
    return "numeric";
  case LCOV_ERR_INTERNAL:
    return "internal";
  }
  return "unknown";
}

lcov_status lcov_set_threads(unsigned n) {
  return guard([&] {
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    lcov::set_thread_count(static_cast<int>(n == 0 ? hw : std::min(n, 1024u)));
  });
}

unsigned lcov_get_threads(void) { return static_cast<unsigned>(lcov::thread_count()); }

lcov_status lcov_image_load(const char *path, const char *preprocess, lcov_image **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    const auto p = preprocess ? lcov::parse_preprocess(preprocess) : lcov::Preprocess::None;
    *out = new lcov_image{lcov::load_image(path, p)};
  });
}

lcov_status lcov_image_from_data(size_t height, size_t width, const double *pixels, lcov_image **out) {
  return guard([&] {
    need(pixels, "pixels");
    need(out, "out");
    const auto h = as_index(height, "height"), w = as_index(width, "width");
    lcov::Image img(Eigen::Map<const lcov::Grid>(pixels, h, w));
    lcov::validate(img, "lcov_image_from_data");
    *out = new lcov_image{std::move(img)};
  });
}

lcov_status lcov_image_crop(const lcov_image *img, size_t row, size_t col, size_t height, size_t width,
                            lcov_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    const auto &p = img->value.pixels;
    lcov::require(height >= 1 && width >= 1 && row + height <= static_cast<size_t>(p.rows()) &&
                      col + width <= static_cast<size_t>(p.cols()),
                  "crop outside the image");
    lcov::Image c(p.block(as_index(row, "row"), as_index(col, "col"), as_index(height, "height"),
                          as_index(width, "width")));
    c.provenance = img->value.provenance + "|crop";
    *out = new lcov_image{std::move(c)};
  });
}

lcov_status lcov_image_scale_to_unit_std(const lcov_image *img, lcov_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    const auto &p = img->value.pixels;
    const double sd = std::sqrt((p - p.mean()).square().mean());
    lcov::require(sd > 0.0, "image has zero variance");
    lcov::Image s(p / sd);
    s.provenance = img->value.provenance + "|unit-std";
    *out = new lcov_image{std::move(s)};
  });
}

size_t lcov_image_height(const lcov_image *img) { return img ? static_cast<size_t>(img->value.height()) : 0; }
size_t lcov_image_width(const lcov_image *img) { return img ? static_cast<size_t>(img->value.width()) : 0; }
const double *lcov_image_data(const lcov_image *img) { return img ? img->value.pixels.data() : nullptr; }

lcov_status lcov_image_save_pgm(const lcov_image *img, const char *path, int maxval) {
  return guard([&] {
    need(img, "image");
    need(path, "path");
    lcov::write_pgm(path, img->value, maxval);
  });
}

lcov_status lcov_image_save_pgm_rescaled(const lcov_image *img, const char *path) {
  return guard([&] {
    need(img, "image");
    need(path, "path");
    lcov::write_pgm_rescaled(path, img->value);
  });
}

void lcov_image_free(lcov_image *img) { delete img; }

lcov_status lcov_bank_load(const char *path, lcov_bank **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new lcov_bank{lcov::read_bank(path)};
  });
}

lcov_status lcov_bank_save(const lcov_bank *bank, const char *path) {
  return guard([&] {
    need(bank, "bank");
    need(path, "path");
    lcov::write_bank(path, bank->value);
  });
}

lcov_status lcov_bank_oriented(size_t n, size_t kernel_size, double blur_sigma, lcov_bank **out) {
  return guard([&] {
    need(out, "out");
    *out = new lcov_bank{lcov::oriented_bank(n, as_index(kernel_size, "kernel_size"), blur_sigma)};
  });
}

lcov_status lcov_bank_random(size_t n, size_t kernel_size, double blur_sigma, uint64_t seed, lcov_bank **out) {
  return guard([&] {
    need(out, "out");
    *out = new lcov_bank{lcov::random_bank(n, as_index(kernel_size, "kernel_size"), blur_sigma, seed)};
  });
}

lcov_status lcov_bank_pair(const lcov_bank *bank, size_t i, size_t j, lcov_bank **out) {
  return guard([&] {
    need(bank, "bank");
    need(out, "out");
    const auto n = bank->value.num_filters();
    lcov::require(i < n && j < n && i != j, "filter pair indices must be distinct and in range");
    *out = new lcov_bank{lcov::FilterBank({bank->value.kernel(i), bank->value.kernel(j)}, bank->value.blur_sigma())};
  });
}

size_t lcov_bank_num_filters(const lcov_bank *bank) { return bank ? bank->value.num_filters() : 0; }
size_t lcov_bank_kernel_size(const lcov_bank *bank) {
  return bank ? static_cast<size_t>(bank->value.kernel_size()) : 0;
}
double lcov_bank_blur_sigma(const lcov_bank *bank) { return bank ? bank->value.blur_sigma() : 0.0; }
const double *lcov_bank_taps(const lcov_bank *bank, size_t i) {
  if (!bank || i >= bank->value.num_filters())
    return nullptr;
  return bank->value.kernel(i).taps.data();
}
void lcov_bank_free(lcov_bank *bank) { delete bank; }

lcov_status lcov_energy_eval(const lcov_image *img, const lcov_bank *bank, size_t patch_size, size_t patch_stride,
                             double window_sigma, double lambda, double mu, lcov_blur_domain domain,
                             lcov_energy *out) {
  return guard([&] {
    need(img, "image");
    need(bank, "bank");
    need(out, "out");
    const auto spec = lcov::PatchSpec::gaussian(as_index(patch_size, "patch_size"),
                                                as_index(patch_stride, "patch_stride"), window_sigma);
    const auto te = lcov::total_energy_and_gradient(img->value, bank->value, spec, lambda, mu, domain_of(domain));
    *out = to_c(te.breakdown);
  });
}

void lcov_train_config_default(lcov_train_config *cfg) {
  if (!cfg)
    return;
  const lcov::TrainConfig d;
  cfg->num_filters = d.num_filters;
  cfg->kernel_size = static_cast<size_t>(d.kernel_size);
  cfg->patch_size = static_cast<size_t>(d.patch_size);
  cfg->patch_stride = static_cast<size_t>(d.patch_stride);
  cfg->window_sigma = d.window_sigma;
  cfg->blur_sigma = d.blur_sigma;
  cfg->lambda = d.lambda;
  cfg->mu = d.mu;
  cfg->learning_rate = 0.0;
  cfg->num_steps = d.num_steps;
  cfg->crop_size = static_cast<size_t>(d.crop_size);
  cfg->seed = d.seed;
  cfg->gradient_scaling = d.gradient_scaling ? 1 : 0;
  cfg->deterministic = d.deterministic ? 1 : 0;
  cfg->spectrum_samples = d.spectrum_samples;
  cfg->checkpoint_every = d.checkpoint_every;
  cfg->blur_domain = LCOV_BLUR_SPATIAL;
}

lcov_status lcov_train(const lcov_image *const *images, size_t count, const lcov_train_config *cfg,
                       const char *log_csv, const char *checkpoint_prefix, lcov_bank **out,
                       lcov_train_summary *summary) {
  return guard([&] {
    need(images, "images");
    need(cfg, "config");
    need(out, "out");
    lcov::require(count >= 1, "training needs at least one image");
    std::vector<lcov::Image> imgs;
    for (size_t i = 0; i < count; ++i) {
      need(images[i], "image");
      imgs.push_back(images[i]->value);
    }
    lcov::TrainConfig c;
    c.num_filters = cfg->num_filters;
    c.kernel_size = as_index(cfg->kernel_size, "kernel_size");
    c.patch_size = as_index(cfg->patch_size, "patch_size");
    c.patch_stride = as_index(cfg->patch_stride, "patch_stride");
    c.window_sigma = cfg->window_sigma;
    c.blur_sigma = cfg->blur_sigma;
    c.lambda = cfg->lambda;
    c.mu = cfg->mu;
    if (cfg->learning_rate > 0.0)
      c.learning_rate = cfg->learning_rate;
    c.num_steps = cfg->num_steps;
    c.crop_size = as_index(cfg->crop_size, "crop_size");
    c.seed = cfg->seed;
    c.gradient_scaling = cfg->gradient_scaling != 0;
    c.deterministic = cfg->deterministic != 0;
    c.spectrum_samples = cfg->spectrum_samples;
    c.checkpoint_every = cfg->checkpoint_every;
    c.blur_domain = domain_of(cfg->blur_domain);
    c.validate();

    const std::string prefix = checkpoint_prefix ? checkpoint_prefix : "";
    lcov::CheckpointFn save;
    if (!prefix.empty())
      save = [&](const lcov::FilterBank &b, std::size_t step) { lcov::write_bank(checkpoint_path(prefix, step), b); };
    const auto data = lcov::Dataset::for_training(std::move(imgs));
    lcov::TrainResult r = lcov::train(data, c, save);
    if (log_csv)
      lcov::write_train_log_csv(log_csv, r.log);
    if (summary) {
      summary->learning_rate = r.learning_rate;
      summary->steps = r.log.entries.size();
      summary->final_energy = r.log.entries.empty() ? lcov_energy{0, 0, 0, 0} : to_c(r.log.entries.back().energy);
    }
    *out = new lcov_bank{std::move(r.bank)};
  });
}

lcov_status lcov_covmap_extract(const lcov_image *img, const lcov_bank *bank, size_t neighborhood, size_t stride,
                                lcov_window_kind window, double window_sigma, lcov_covmap **out) {
  return guard([&] {
    need(img, "image");
    need(bank, "bank");
    need(out, "out");
    lcov::require(window == LCOV_WINDOW_GAUSSIAN || window == LCOV_WINDOW_BOXCAR, "unknown window kind");
    const lcov::WindowDescriptor wd{static_cast<lcov::WindowKind>(window), window_sigma};
    *out = new lcov_covmap{lcov::extract(lcov::apply(bank->value, img->value), as_index(neighborhood, "neighborhood"),
                                         as_index(stride, "stride"), wd)};
  });
}

lcov_status lcov_covmap_threshold_fixed(const lcov_covmap *cm, double tau, lcov_covmap **out) {
  return guard([&] {
    need(cm, "covmap");
    need(out, "out");
    *out = new lcov_covmap{lcov::eig_threshold_fixed(cm->value, tau)};
  });
}

lcov_status lcov_covmap_threshold_adaptive(const lcov_covmap *cm, double fraction, int lowpass_channel,
                                           lcov_covmap **out) {
  return guard([&] {
    need(cm, "covmap");
    need(out, "out");
    lcov::AdaptiveReference ref;
    if (lowpass_channel >= 0) {
      ref.mode = lcov::AdaptiveReference::Mode::LowpassChannel;
      ref.lowpass_channel = static_cast<std::size_t>(lowpass_channel);
    }
    *out = new lcov_covmap{lcov::eig_threshold_adaptive(cm->value, fraction, ref)};
  });
}

lcov_status lcov_covmap_power(const lcov_covmap *cm, double p, lcov_covmap **out) {
  return guard([&] {
    need(cm, "covmap");
    need(out, "out");
    *out = new lcov_covmap{lcov::eig_power(cm->value, p)};
  });
}

lcov_status lcov_covmap_restrict_to_variances(const lcov_covmap *cm, lcov_covmap **out) {
  return guard([&] {
    need(cm, "covmap");
    need(out, "out");
    *out = new lcov_covmap{lcov::restrict_to_variances(cm->value)};
  });
}

lcov_status lcov_covmap_measurements(const lcov_covmap *cm, lcov_measurements *out) {
  return guard([&] {
    need(cm, "covmap");
    need(out, "out");
    const auto m = lcov::count_measurements(cm->value);
    *out = {m.locations, m.per_location, m.total};
  });
}

lcov_status lcov_covmap_mean_participation(const lcov_covmap *cm, double *out) {
  return guard([&] {
    need(cm, "covmap");
    need(out, "out");
    lcov::require(cm->value.locations() > 0, "empty covariance map");
    double s = 0.0;
    for (const auto &m : cm->value.matrices)
      s += lcov::participation_ratio(m);
    *out = s / static_cast<double>(cm->value.locations());
  });
}

lcov_status lcov_covmap_save(const lcov_covmap *cm, const char *path) {
  return guard([&] {
    need(cm, "covmap");
    need(path, "path");
    lcov::write_covmap(path, cm->value);
  });
}

lcov_status lcov_covmap_load(const char *path, lcov_covmap **out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new lcov_covmap{lcov::read_covmap(path)};
  });
}

void lcov_covmap_free(lcov_covmap *cm) { delete cm; }

void lcov_synth_config_default(lcov_synth_config *cfg) {
  if (!cfg)
    return;
  const lcov::SynthConfig d;
  cfg->max_steps = d.max_steps;
  cfg->step0 = d.step0;
  cfg->seed = d.seed;
  cfg->tolerance = d.tolerance;
  cfg->log_every = d.log_every;
  cfg->double_count_offdiagonal = d.double_count_offdiagonal ? 1 : 0;
  cfg->nonnegative = d.nonnegative ? 1 : 0;
}

lcov_status lcov_synthesize(const lcov_covmap *target, const lcov_bank *bank, const lcov_synth_config *cfg,
                            const lcov_image *init, const lcov_image *reference, const char *trace_csv,
                            lcov_image **out, lcov_synth_summary *summary) {
  return guard([&] {
    need(target, "target");
    need(bank, "bank");
    need(cfg, "config");
    need(out, "out");
    lcov::SynthConfig c;
    c.max_steps = cfg->max_steps;
    c.step0 = cfg->step0;
    c.seed = cfg->seed;
    c.tolerance = cfg->tolerance;
    c.log_every = cfg->log_every;
    c.double_count_offdiagonal = cfg->double_count_offdiagonal != 0;
    c.nonnegative = cfg->nonnegative != 0;
    lcov::SynthResult r = lcov::synthesize(target->value, bank->value, c, init ? &init->value : nullptr,
                                           reference ? &reference->value : nullptr);
    if (trace_csv)
      lcov::write_synth_trace_csv(trace_csv, r.trace);
    if (summary) {
      summary->steps = r.steps;
      summary->initial_objective = r.trace.front().objective;
      summary->best_objective = r.best_objective;
      summary->relative_error = r.relative_error.value_or(std::numeric_limits<double>::quiet_NaN());
    }
    *out = new lcov_image{std::move(r.image)};
  });
}

lcov_status lcov_synth_objective(const lcov_image *x, const lcov_bank *bank, const lcov_covmap *target,
                                 double *out) {
  return guard([&] {
    need(x, "image");
    need(bank, "bank");
    need(target, "target");
    need(out, "out");
    *out = lcov::synth_objective(x->value, bank->value, target->value).value;
  });
}

lcov_status lcov_relative_error(const lcov_image *x, const lcov_image *ref, int signless, double *out) {
  return guard([&] {
    need(x, "image");
    need(ref, "reference");
    need(out, "out");
    *out = signless ? lcov::signless_relative_error(x->value, ref->value) : lcov::relative_error(x->value, ref->value);
  });
}

lcov_status lcov_noise_baseline(const lcov_image *ref, double target_rel_error, uint64_t seed, lcov_image **out) {
  return guard([&] {
    need(ref, "reference");
    need(out, "out");
    *out = new lcov_image{lcov::noise_baseline(ref->value, target_rel_error, seed)};
  });
}

void lcov_correlation_options_default(lcov_correlation_options *opts) {
  if (!opts)
    return;
  const lcov::CorrelationOptions d;
  opts->window = static_cast<size_t>(d.window);
  opts->window_sigma = d.window_sigma;
  opts->stride = static_cast<size_t>(d.stride);
  opts->subtract_mean = d.subtract_mean ? 1 : 0;
  opts->bins = 20;
}

lcov_status lcov_control_suite(const lcov_image *img, const lcov_bank *pair, uint64_t seed,
                               const lcov_correlation_options *opts, const char *csv_prefix,
                               lcov_control_summary *out) {
  return guard([&] {
    need(img, "image");
    need(pair, "pair");
    need(out, "out");
    const std::size_t bins = opts ? opts->bins : 20;
    const auto s = lcov::run_control_suite(img->value, pair->value, seed, options_of(opts), bins);
    if (csv_prefix) {
      const std::string p = csv_prefix;
      lcov::write_histogram_csv(p + "_image.csv", s.image);
      lcov::write_histogram_csv(p + "_noise.csv", s.noise);
      lcov::write_histogram_csv(p + "_randomized.csv", s.randomized_filters);
    }
    *out = {s.median_image, s.median_noise, s.median_randomized_filters, s.image.total, s.image.excluded};
  });
}

lcov_status lcov_median_local_correlation(const lcov_image *img, const lcov_bank *pair,
                                          const lcov_correlation_options *opts, double *out) {
  return guard([&] {
    need(img, "image");
    need(pair, "pair");
    need(out, "out");
    *out = lcov::median_local_correlation(img->value, pair->value, options_of(opts));
  });
}

lcov_status lcov_image_phase_randomize(const lcov_image *img, uint64_t seed, lcov_image **out) {
  return guard([&] {
    need(img, "image");
    need(out, "out");
    *out = new lcov_image{lcov::phase_randomize(img->value, seed)};
  });
}

} // extern "C"
