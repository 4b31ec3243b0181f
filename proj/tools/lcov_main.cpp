#include "cli_config.hpp"
#include "lcov.h"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using lcov::cli::Config;
using lcov::cli::ConfigError;
using lcov::cli::OptionSpec;

namespace {

struct ApiError : std::runtime_error {
  lcov_status status;
  ApiError(lcov_status s, const std::string &msg) : std::runtime_error(msg), status(s) {}
};

void check(lcov_status s) {
  if (s != LCOV_OK)
    throw ApiError(s, lcov_last_error());
}

struct ImageFree {
  void operator()(lcov_image *p) const { lcov_image_free(p); }
};
struct BankFree {
  void operator()(lcov_bank *p) const { lcov_bank_free(p); }
};
struct CovmapFree {
  void operator()(lcov_covmap *p) const { lcov_covmap_free(p); }
};
using ImagePtr = std::unique_ptr<lcov_image, ImageFree>;
using BankPtr = std::unique_ptr<lcov_bank, BankFree>;
using CovmapPtr = std::unique_ptr<lcov_covmap, CovmapFree>;

template <typename Ptr, typename F> Ptr make(F &&f) {
  typename Ptr::pointer raw = nullptr;
  check(f(&raw));
  return Ptr(raw);
}

// Summary line: `<subcommand> key=value ...` on stdout.
class Summary {
public:
  explicit Summary(std::string name) : line_(std::move(name)) {}
  template <typename T> Summary &add(const std::string &key, const T &value) {
    line_ += fmt::format(" {}={}", key, value);
    return *this;
  }
  void print() const { fmt::print("{}\n", line_); }

private:
  std::string line_;
};

const std::string &required(const Config &c, const std::string &key) {
  const std::string &v = c.get(key);
  if (v.empty())
    throw ConfigError("missing required setting '" + key + "' (--" + lcov::cli::flag_name(key) + ")");
  return v;
}

bool is_iml(const std::string &path) { return fs::path(path).extension() == ".iml"; }

// Loads an image, applies the named preprocessing and an optional
// "row,col,height,width" crop. "unit-std" divides the cropped image by its
// standard deviation and keeps the mean; "auto" means log-normalize for .iml
// and none otherwise.
ImagePtr load_input(const std::string &path, std::string preprocess, const std::string &crop) {
  if (preprocess == "auto")
    preprocess = is_iml(path) ? "log-normalize" : "none";
  const bool unit_std = preprocess == "unit-std";
  ImagePtr img = make<ImagePtr>([&](lcov_image **o) { return lcov_image_load(path.c_str(), unit_std ? "none" : preprocess.c_str(), o); });
  if (!crop.empty()) {
    std::vector<std::size_t> v;
    std::size_t pos = 0;
    while (pos <= crop.size()) {
      const auto comma = crop.find(',', pos);
      const std::string item = crop.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      try {
        std::size_t used = 0;
        const long long n = std::stoll(item, &used);
        if (used != item.size() || n < 0)
          throw std::invalid_argument(item);
        v.push_back(static_cast<std::size_t>(n));
      } catch (const std::exception &) {
        throw ConfigError("invalid crop '" + crop + "' (expected row,col,height,width)");
      }
      if (comma == std::string::npos)
        break;
      pos = comma + 1;
    }
    if (v.size() != 4)
      throw ConfigError("invalid crop '" + crop + "' (expected row,col,height,width)");
    img = make<ImagePtr>([&](lcov_image **o) { return lcov_image_crop(img.get(), v[0], v[1], v[2], v[3], o); });
  }
  if (unit_std)
    img = make<ImagePtr>([&](lcov_image **o) { return lcov_image_scale_to_unit_std(img.get(), o); });
  return img;
}

// `bank` is a bank file or "oriented" for the built-in derivative-of-Gaussian
// bank with `filters` filters.
BankPtr load_bank(const Config &c, std::size_t filters) {
  const std::string &b = required(c, "bank");
  if (b == "oriented")
    return make<BankPtr>([&](lcov_bank **o) {
      return lcov_bank_oriented(filters, c.get_size("kernel_size"), c.get_double("blur_sigma"), o);
    });
  return make<BankPtr>([&](lcov_bank **o) { return lcov_bank_load(b.c_str(), o); });
}

std::vector<std::string> expand_inputs(const std::vector<std::string> &items) {
  std::vector<std::string> out;
  for (const auto &item : items) {
    if (fs::is_directory(item)) {
      std::vector<std::string> found;
      for (const auto &e : fs::directory_iterator(item)) {
        const auto ext = e.path().extension();
        if (e.is_regular_file() && (ext == ".pgm" || ext == ".iml"))
          found.push_back(e.path().string());
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(item);
    }
  }
  if (out.empty())
    throw ConfigError("no input images");
  return out;
}

const std::vector<OptionSpec> kCommon = {
    {"seed", "0", "random seed"},
    {"deterministic", "true", "bit-reproducible output (no wall-clock values)"},
};

std::vector<OptionSpec> with_common(std::vector<OptionSpec> specs) {
  specs.insert(specs.end(), kCommon.begin(), kCommon.end());
  return specs;
}

const std::vector<OptionSpec> kBankKeys = {
    {"bank", "oriented", "filter bank file, or 'oriented' for the built-in bank"},
    {"kernel_size", "9", "built-in bank kernel size"},
    {"blur_sigma", "3", "built-in bank blur window sigma"},
};

std::vector<OptionSpec> join(std::vector<OptionSpec> a, const std::vector<OptionSpec> &b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

int run_analyze(const Config &c) {
  ImagePtr img = load_input(required(c, "input"), c.get("preprocess"), c.get("crop"));
  BankPtr pair;
  if (c.get("bank") == "oriented") {
    pair = load_bank(c, 2);
  } else {
    BankPtr bank = load_bank(c, 0);
    const auto idx = c.get_list("pair");
    if (idx.size() != 2)
      throw ConfigError("pair must name two filter indices, e.g. 0,1");
    pair = make<BankPtr>([&](lcov_bank **o) {
      return lcov_bank_pair(bank.get(), std::stoul(idx[0]), std::stoul(idx[1]), o);
    });
  }
  lcov_correlation_options opts;
  lcov_correlation_options_default(&opts);
  opts.window = c.get_size("window");
  opts.window_sigma = c.get_double("window_sigma");
  opts.stride = c.get_size("stride");
  opts.subtract_mean = c.get_bool("subtract_mean") ? 1 : 0;
  opts.bins = c.get_size("bins");
  const std::string prefix = c.get("histograms");
  const std::uint64_t seed = c.get_u64("seed");
  lcov_control_summary s{};
  check(lcov_control_suite(img.get(), pair.get(), seed, &opts, prefix.empty() ? nullptr : prefix.c_str(), &s));
  Summary out("analyze");
  out.add("median_image", s.median_image)
      .add("median_noise", s.median_noise)
      .add("median_randomized", s.median_randomized_filters)
      .add("windows", s.windows)
      .add("degenerate", s.degenerate);
  const std::size_t draws = c.get_size("null_draws");
  if (draws > 0) {
    double hi = 0.0;
    for (std::size_t d = 1; d <= draws; ++d) {
      ImagePtr noise = make<ImagePtr>([&](lcov_image **o) { return lcov_image_phase_randomize(img.get(), seed + 1000 + d, o); });
      double m = 0.0;
      check(lcov_median_local_correlation(noise.get(), pair.get(), &opts, &m));
      hi = std::max(hi, m);
    }
    out.add("null_draws", draws).add("null_max", hi);
  }
  out.print();
  return 0;
}

int run_train(const Config &c) {
  const auto paths = expand_inputs(c.get_list("inputs"));
  std::vector<ImagePtr> owned;
  std::vector<const lcov_image *> imgs;
  for (const auto &p : paths) {
    owned.push_back(load_input(p, c.get("preprocess"), ""));
    imgs.push_back(owned.back().get());
  }
  lcov_train_config cfg;
  lcov_train_config_default(&cfg);
  cfg.num_filters = c.get_size("filters");
  cfg.kernel_size = c.get_size("kernel_size");
  cfg.patch_size = c.get_size("patch_size");
  cfg.patch_stride = c.get_size("patch_stride");
  cfg.window_sigma = c.get_double("window_sigma");
  cfg.blur_sigma = c.get_double("blur_sigma");
  cfg.lambda = c.get_double("lambda");
  cfg.mu = c.get_double("mu");
  cfg.learning_rate = c.get("learning_rate") == "auto" ? 0.0 : c.get_double("learning_rate");
  if (c.get("learning_rate") != "auto" && cfg.learning_rate <= 0.0)
    throw ConfigError("learning_rate must be positive or 'auto'");
  cfg.num_steps = c.get_size("steps");
  cfg.crop_size = c.get_size("crop_size");
  cfg.seed = c.get_u64("seed");
  cfg.gradient_scaling = c.get_bool("gradient_scaling") ? 1 : 0;
  cfg.deterministic = c.get_bool("deterministic") ? 1 : 0;
  cfg.spectrum_samples = c.get_size("spectrum_samples");
  cfg.checkpoint_every = c.get_size("checkpoint_every");
  const std::string &domain = c.get("blur_domain");
  if (domain != "spatial" && domain != "frequency")
    throw ConfigError("blur_domain must be spatial or frequency");
  cfg.blur_domain = domain == "spatial" ? LCOV_BLUR_SPATIAL : LCOV_BLUR_FREQUENCY;
  const std::string &output = required(c, "output");
  const std::string log = c.get("log"), ck = c.get("checkpoint_prefix");
  lcov_train_summary s{};
  BankPtr bank = make<BankPtr>([&](lcov_bank **o) {
    return lcov_train(imgs.data(), imgs.size(), &cfg, log.empty() ? nullptr : log.c_str(),
                      ck.empty() ? nullptr : ck.c_str(), o, &s);
  });
  check(lcov_bank_save(bank.get(), output.c_str()));
  Summary("train")
      .add("images", imgs.size())
      .add("steps", s.steps)
      .add("learning_rate", s.learning_rate)
      .add("local_dim", s.final_energy.local_dim)
      .add("recons", s.final_energy.recons)
      .add("global_dim", s.final_energy.global_dim)
      .add("total", s.final_energy.total)
      .add("output", output)
      .print();
  return 0;
}

int run_covmap_extract(const Config &c) {
  ImagePtr img = load_input(required(c, "input"), c.get("preprocess"), c.get("crop"));
  BankPtr bank = load_bank(c, c.get_size("filters"));
  const std::string &w = c.get("window");
  if (w != "gaussian" && w != "boxcar")
    throw ConfigError("window must be gaussian or boxcar");
  CovmapPtr cm = make<CovmapPtr>([&](lcov_covmap **o) {
    return lcov_covmap_extract(img.get(), bank.get(), c.get_size("neighborhood"), c.get_size("stride"),
                               w == "gaussian" ? LCOV_WINDOW_GAUSSIAN : LCOV_WINDOW_BOXCAR,
                               c.get_double("window_sigma"), o);
  });
  if (c.get_bool("variances_only"))
    cm = make<CovmapPtr>([&](lcov_covmap **o) { return lcov_covmap_restrict_to_variances(cm.get(), o); });
  const std::string &output = required(c, "output");
  check(lcov_covmap_save(cm.get(), output.c_str()));
  lcov_measurements m{};
  check(lcov_covmap_measurements(cm.get(), &m));
  Summary("covmap-extract")
      .add("image", fmt::format("{}x{}", lcov_image_height(img.get()), lcov_image_width(img.get())))
      .add("filters", lcov_bank_num_filters(bank.get()))
      .add("locations", m.locations)
      .add("per_location", m.per_location)
      .add("measurements", m.total)
      .add("output", output)
      .print();
  return 0;
}

int run_covmap_edit(const Config &c) {
  const std::string &input = required(c, "input");
  CovmapPtr cm = make<CovmapPtr>([&](lcov_covmap **o) { return lcov_covmap_load(input.c_str(), o); });
  const std::string &op = required(c, "op");
  CovmapPtr out;
  if (op == "threshold-fixed")
    out = make<CovmapPtr>([&](lcov_covmap **o) { return lcov_covmap_threshold_fixed(cm.get(), c.get_double("tau"), o); });
  else if (op == "threshold-adaptive")
    out = make<CovmapPtr>([&](lcov_covmap **o) {
      return lcov_covmap_threshold_adaptive(cm.get(), c.get_double("fraction"),
                                            static_cast<int>(c.get_int("lowpass_channel")), o);
    });
  else if (op == "power")
    out = make<CovmapPtr>([&](lcov_covmap **o) { return lcov_covmap_power(cm.get(), c.get_double("p"), o); });
  else if (op == "variances")
    out = make<CovmapPtr>([&](lcov_covmap **o) { return lcov_covmap_restrict_to_variances(cm.get(), o); });
  else
    throw ConfigError("op must be threshold-fixed, threshold-adaptive, power or variances");
  const std::string &output = required(c, "output");
  check(lcov_covmap_save(out.get(), output.c_str()));
  lcov_measurements m{};
  check(lcov_covmap_measurements(out.get(), &m));
  double before = 0.0, after = 0.0;
  check(lcov_covmap_mean_participation(cm.get(), &before));
  check(lcov_covmap_mean_participation(out.get(), &after));
  Summary("covmap-edit")
      .add("op", op)
      .add("measurements", m.total)
      .add("participation_before", before)
      .add("participation_after", after)
      .add("output", output)
      .print();
  return 0;
}

int run_synthesize(const Config &c) {
  const std::string &target = required(c, "target");
  CovmapPtr cm = make<CovmapPtr>([&](lcov_covmap **o) { return lcov_covmap_load(target.c_str(), o); });
  lcov_measurements m{};
  check(lcov_covmap_measurements(cm.get(), &m));
  BankPtr bank = load_bank(c, c.get_size("filters"));
  lcov_synth_config cfg;
  lcov_synth_config_default(&cfg);
  cfg.max_steps = c.get_size("steps");
  cfg.step0 = c.get_double("step0");
  cfg.seed = c.get_u64("seed");
  cfg.tolerance = c.get_double("tolerance");
  cfg.log_every = c.get_size("log_every");
  cfg.double_count_offdiagonal = c.get_bool("double_count") ? 1 : 0;
  cfg.nonnegative = c.get_bool("nonnegative") ? 1 : 0;
  ImagePtr init, ref;
  if (!c.get("init").empty())
    init = load_input(c.get("init"), c.get("preprocess"), c.get("crop"));
  if (!c.get("reference").empty())
    ref = load_input(c.get("reference"), c.get("preprocess"), c.get("crop"));
  const std::string &output = required(c, "output");
  const std::string trace = c.get("trace");
  lcov_synth_summary s{};
  ImagePtr x = make<ImagePtr>([&](lcov_image **o) {
    return lcov_synthesize(cm.get(), bank.get(), &cfg, init.get(), ref.get(), trace.empty() ? nullptr : trace.c_str(),
                           o, &s);
  });
  check(lcov_image_save_pgm_rescaled(x.get(), output.c_str()));
  Summary out("synthesize");
  out.add("measurements", m.total)
      .add("steps", s.steps)
      .add("objective_initial", s.initial_objective)
      .add("objective", s.best_objective);
  if (ref)
    out.add("relative_error", s.relative_error);
  out.add("output", output).print();
  return 0;
}

int run_baseline(const Config &c) {
  ImagePtr ref = load_input(required(c, "reference"), c.get("preprocess"), c.get("crop"));
  const double target = c.get_double("relative_error");
  ImagePtr noisy = make<ImagePtr>([&](lcov_image **o) { return lcov_noise_baseline(ref.get(), target, c.get_u64("seed"), o); });
  double measured = 0.0;
  check(lcov_relative_error(noisy.get(), ref.get(), 0, &measured));
  const std::string &output = required(c, "output");
  check(lcov_image_save_pgm_rescaled(noisy.get(), output.c_str()));
  Summary("baseline").add("relative_error", measured).add("output", output).print();
  return 0;
}

struct Command {
  std::string name;
  std::string description;
  std::vector<OptionSpec> specs;
  std::function<int(const Config &)> run;
};

std::vector<Command> commands() {
  return {
      {"analyze", "local correlation statistics of a filter pair with noise and phase controls",
       with_common(join({{"input", "", "image file"},
                         {"preprocess", "standardize", "none|mean-subtract|standardize|log-normalize|unit-std|auto"},
                         {"crop", "", "row,col,height,width"},
                         {"pair", "0,1", "filter indices when a bank file is given"},
                         {"window", "16", "correlation window size"},
                         {"window_sigma", "3", "Gaussian weighting of the window"},
                         {"stride", "4", "window spacing"},
                         {"subtract_mean", "false", "subtract local means before correlating"},
                         {"bins", "20", "histogram bins"},
                         {"histograms", "", "write <prefix>_{image,noise,randomized}.csv"},
                         {"null_draws", "0", "extra phase-randomized noise draws for a null band"}},
                        kBankKeys)),
       run_analyze},
      {"train", "learn a filter bank",
       with_common({{"inputs", "", "comma-separated image files or directories"},
                    {"preprocess", "auto", "none|mean-subtract|standardize|log-normalize|unit-std|auto"},
                    {"filters", "4", "number of filters"},
                    {"kernel_size", "20", "kernel size"},
                    {"patch_size", "16", "local dimensionality neighborhood"},
                    {"patch_stride", "8", "neighborhood spacing"},
                    {"window_sigma", "3", "neighborhood weighting sigma"},
                    {"blur_sigma", "3", "blur window sigma"},
                    {"lambda", "3500", "reconstruction weight"},
                    {"mu", "100", "global dimensionality weight"},
                    {"learning_rate", "auto", "fixed rate, or auto to probe"},
                    {"steps", "1000", "descent steps"},
                    {"crop_size", "48", "training crop size"},
                    {"gradient_scaling", "true", "divide gradients by the mean amplitude spectrum"},
                    {"spectrum_samples", "256", "crops used for the spectrum estimate"},
                    {"checkpoint_every", "0", "checkpoint cadence in steps"},
                    {"checkpoint_prefix", "", "checkpoint files <prefix>_<step>.bank"},
                    {"blur_domain", "spatial", "spatial|frequency"},
                    {"log", "", "training log CSV"},
                    {"output", "", "output bank file"}}),
       run_train},
      {"covmap-extract", "extract a local covariance map",
       with_common(join({{"input", "", "image file"},
                         {"preprocess", "unit-std", "none|mean-subtract|standardize|log-normalize|unit-std|auto"},
                         {"crop", "", "row,col,height,width"},
                         {"filters", "4", "built-in bank size"},
                         {"neighborhood", "8", "neighborhood size"},
                         {"stride", "2", "subsampling"},
                         {"window", "gaussian", "gaussian|boxcar"},
                         {"window_sigma", "0", "Gaussian window sigma; 0 means neighborhood/4"},
                         {"variances_only", "false", "keep only the diagonal"},
                         {"output", "", "output map file"}},
                        kBankKeys)),
       run_covmap_extract},
      {"covmap-edit", "edit the eigenvalues of a covariance map",
       with_common({{"input", "", "input map file"},
                    {"op", "", "threshold-fixed|threshold-adaptive|power|variances"},
                    {"tau", "0", "fixed threshold"},
                    {"fraction", "0.1", "adaptive threshold fraction of the non-luminance energy"},
                    {"lowpass_channel", "-1", "channel identifying the luminance component; -1 uses the largest"},
                    {"p", "1", "eigenvalue exponent"},
                    {"output", "", "output map file"}}),
       run_covmap_edit},
      {"synthesize", "synthesize an image matching a covariance map",
       with_common(join({{"target", "", "target map file"},
                         {"filters", "4", "built-in bank size"},
                         {"steps", "10000", "maximum steps"},
                         {"step0", "100", "initial step size"},
                         {"tolerance", "0", "stop once the objective is at most this"},
                         {"log_every", "100", "trace cadence"},
                         {"double_count", "false", "count off-diagonal entries twice"},
                         {"nonnegative", "true", "keep pixels >= 0 (intensity images)"},
                         {"init", "", "initial image instead of white noise"},
                         {"reference", "", "reference image for the relative error"},
                         {"preprocess", "unit-std", "preprocessing for init and reference"},
                         {"crop", "", "crop for init and reference"},
                         {"trace", "", "objective trace CSV"},
                         {"output", "", "output PGM (16-bit, with .affine sidecar)"}},
                        kBankKeys)),
       run_synthesize},
      {"baseline", "reference image corrupted by Gaussian noise at a given relative error",
       with_common({{"reference", "", "image file"},
                    {"preprocess", "unit-std", "none|mean-subtract|standardize|log-normalize|unit-std|auto"},
                    {"crop", "", "row,col,height,width"},
                    {"relative_error", "0.057", "target relative L2 error"},
                    {"output", "", "output PGM (16-bit, with .affine sidecar)"}}),
       run_baseline},
  };
}

int exit_code(lcov_status s) {
  switch (s) {
  case LCOV_ERR_INVALID_INPUT:
    return 2;
  case LCOV_ERR_IO:
    return 3;
  case LCOV_ERR_FORMAT:
    return 4;
  case LCOV_ERR_NUMERIC:
    return 5;
  default:
    return 6;
  }
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Local covariance maps: train filter banks, extract and edit covariance maps, synthesize images."};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  long threads = -1;
  if (const char *env = std::getenv("LCOV_THREADS"))
    threads = std::strtol(env, nullptr, 10);
  app.add_option("--config", config_path, "key=value file; flags override its values");
  app.add_option("--threads", threads, "worker threads (default LCOV_THREADS, else all cores)")->check(CLI::NonNegativeNumber);

  const auto cmds = commands();
  std::vector<std::vector<std::pair<std::string, std::string>>> storage(cmds.size());
  std::vector<std::vector<CLI::Option *>> opts(cmds.size());
  std::vector<CLI::App *> subs;
  for (std::size_t i = 0; i < cmds.size(); ++i) {
    CLI::App *sub = app.add_subcommand(cmds[i].name, cmds[i].description);
    subs.push_back(sub);
    storage[i].resize(cmds[i].specs.size());
    for (std::size_t k = 0; k < cmds[i].specs.size(); ++k) {
      const auto &s = cmds[i].specs[k];
      storage[i][k].first = s.key;
      CLI::Option *o = sub->add_option("--" + lcov::cli::flag_name(s.key), storage[i][k].second, s.help);
      if (s.default_value == "true" || s.default_value == "false") {
        o->expected(0, 1)->type_name("[BOOL]");
        o->description(s.help + " (default " + s.default_value + ")");
      } else if (!s.default_value.empty()) {
        o->default_str(s.default_value);
      }
      opts[i].push_back(o);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (std::size_t i = 0; i < cmds.size(); ++i) {
    if (!subs[i]->parsed())
      continue;
    try {
      lcov::cli::ValueMap flags;
      for (std::size_t k = 0; k < opts[i].size(); ++k)
        if (opts[i][k]->count() > 0)
          flags[storage[i][k].first] = storage[i][k].second.empty() ? "true" : storage[i][k].second;
      const lcov::cli::ValueMap file = config_path.empty() ? lcov::cli::ValueMap{} : lcov::cli::read_config_file(config_path);
      const Config cfg(cmds[i].specs, file, flags);
      check(lcov_set_threads(threads < 0 ? 0u : static_cast<unsigned>(threads)));
      std::cerr << "# lcov " << lcov_version() << " " << cmds[i].name << "\n# threads=" << lcov_get_threads() << "\n"
                << cfg.render("# ");
      return cmds[i].run(cfg);
    } catch (const ConfigError &e) {
      std::cerr << "lcov: error[config]: " << e.what() << "\n";
      return 2;
    } catch (const ApiError &e) {
      std::cerr << "lcov: error[" << lcov_status_name(e.status) << "]: " << e.what() << "\n";
      return exit_code(e.status);
    } catch (const std::exception &e) {
      std::cerr << "lcov: error[internal]: " << e.what() << "\n";
      return 6;
    }
  }
  return 2;
}
