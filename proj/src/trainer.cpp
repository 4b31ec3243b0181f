#include "trainer.hpp"

#include "banks.hpp"
#include "error.hpp"

#include <chrono>
#include <cmath>
#include <optional>

namespace lcov {

void TrainConfig::validate() const {
  require(num_filters >= 1, "num_filters must be >= 1");
  require(kernel_size >= 1 && patch_size >= 1 && crop_size >= 1, "sizes must be positive");
  require(patch_stride >= 1 && patch_stride <= patch_size, "patch_stride must lie in [1, patch_size]");
  require(window_sigma > 0.0 && blur_sigma > 0.0, "window_sigma and blur_sigma must be positive");
  require(lambda >= 0.0 && mu >= 0.0, "lambda and mu must be non-negative");
  require(!learning_rate || (std::isfinite(*learning_rate) && *learning_rate >= 0.0),
          "learning_rate must be non-negative");
  require(crop_size >= kernel_size + patch_size, "crop_size must be >= kernel_size + patch_size");
  require(spectrum_samples >= 1, "spectrum_samples must be >= 1");
}

PatchSpec TrainConfig::patch_spec() const { return PatchSpec::gaussian(patch_size, patch_stride, window_sigma); }

Dataset Dataset::raw(std::vector<Image> images) {
  require(!images.empty(), "dataset is empty");
  Dataset d;
  d.images_ = std::move(images);
  return d;
}

Dataset Dataset::for_training(std::vector<Image> images) {
  Dataset d = raw(std::move(images));
  double sum_sq = 0.0;
  double count = 0.0;
  for (const auto &img : d.images_) {
    validate(img, "dataset");
    sum_sq += (img.pixels - img.pixels.mean()).square().sum();
    count += static_cast<double>(img.pixels.size());
  }
  const double sd = std::sqrt(sum_sq / count);
  require(sd > 0.0, "dataset has zero variance");
  d.scale_ = sd;
  d.subtract_mean_ = true;
  return d;
}

Dataset Dataset::keeping_mean() const {
  Dataset d = *this;
  d.subtract_mean_ = false;
  return d;
}

Image Dataset::sample_crop(std::mt19937_64 &rng, Eigen::Index crop) const {
  const auto idx = std::uniform_int_distribution<std::size_t>(0, images_.size() - 1)(rng);
  const Image &img = images_[idx];
  require(img.height() >= crop && img.width() >= crop, "dataset image smaller than the crop size");
  const auto r = std::uniform_int_distribution<Eigen::Index>(0, img.height() - crop)(rng);
  const auto c = std::uniform_int_distribution<Eigen::Index>(0, img.width() - crop)(rng);
  Grid g = img.pixels.block(r, c, crop, crop);
  if (subtract_mean_)
    g -= g.mean();
  return Image(g / scale_);
}

SpectrumEstimate estimate_mean_spectrum(const Dataset &data, Eigen::Index crop, std::size_t count,
                                        std::uint64_t seed) {
  require(count >= 1, "estimate_mean_spectrum: need at least one sample");
  std::mt19937_64 rng(seed);
  SpectrumEstimate s{Grid::Zero(crop, crop), count};
  for (std::size_t i = 0; i < count; ++i)
    s.power += fft2(data.sample_crop(rng, crop).pixels).abs2();
  s.power /= static_cast<double>(count);
  return s;
}

FilterGradient scale_gradient(const FilterGradient &g, const SpectrumEstimate &s) {
  const double peak = s.power.maxCoeff();
  require(peak > 0.0, "scale_gradient: spectrum is identically zero");
  const Grid inv_amplitude = s.power.max(1e-6 * peak).sqrt().inverse();
  FilterGradient out;
  for (const auto &t : g.taps) {
    const ComplexGrid spec = fft2(embed_kernel(Kernel(t), s.power.rows(), s.power.cols()));
    out.taps.push_back(crop_taps(ifft2_real(spec * inv_amplitude.cast<std::complex<double>>()), t.rows()).taps);
  }
  return out;
}

FilterBank initial_bank(const TrainConfig &config) {
  const FilterBank unit = random_bank(config.num_filters, config.kernel_size, config.blur_sigma, config.seed);
  const double scale =
      1.0 / std::sqrt(static_cast<double>(config.num_filters) * static_cast<double>(config.kernel_size * config.kernel_size));
  std::vector<Kernel> ks;
  for (const auto &k : unit.kernels())
    ks.emplace_back(k.taps * scale);
  return FilterBank(std::move(ks), config.blur_sigma);
}

FilterBank descend(const FilterBank &bank, const FilterGradient &g, double rate) {
  std::vector<Kernel> ks;
  for (std::size_t i = 0; i < bank.num_filters(); ++i)
    ks.emplace_back(bank.kernel(i).taps - rate * g.taps[i]);
  return FilterBank(std::move(ks), bank.blur_sigma());
}

namespace {

// Inputs are validated before training starts, so a failure here comes from
// overflow inside the energy evaluation.
std::optional<TotalEnergy> evaluate(const Image &crop, const FilterBank &bank, const PatchSpec &spec,
                                    const TrainConfig &config) {
  try {
    return total_energy_and_gradient(crop, bank, spec, config.lambda, config.mu, config.blur_domain);
  } catch (const Error &) {
    return std::nullopt;
  }
}

FilterGradient direction(const TotalEnergy &te, const SpectrumEstimate *spectrum) {
  return spectrum ? scale_gradient(te.gradient, *spectrum) : te.gradient;
}

bool finite_step(const FilterBank &bank, const FilterGradient &g, double rate) {
  for (std::size_t i = 0; i < g.taps.size(); ++i)
    if (!(bank.kernel(i).taps - rate * g.taps[i]).allFinite())
      return false;
  return true;
}

} // namespace

double probe_learning_rate(const Dataset &data, const TrainConfig &config, const FilterBank &init,
                           const SpectrumEstimate *spectrum, double start) {
  require(start > 0.0 && std::isfinite(start), "probe_learning_rate: start must be positive");
  constexpr int kProbeSteps = 50;
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  const PatchSpec spec = config.patch_spec();
  std::vector<Image> crops;
  std::vector<double> baseline;
  for (int i = 0; i < kProbeSteps; ++i) {
    crops.push_back(data.sample_crop(rng, config.crop_size));
    const auto te = evaluate(crops.back(), init, spec, config);
    if (!te || !std::isfinite(te->breakdown.total))
      fail(ErrorCode::Numeric, "probe_learning_rate: initial bank has a non-finite energy");
    baseline.push_back(std::abs(te->breakdown.total));
  }
  double rate = start;
  for (int attempt = 0; attempt < 200; ++attempt, rate *= 0.5) {
    FilterBank bank = init;
    bool stable = true;
    for (int step = 0; step < kProbeSteps && stable; ++step) {
      const auto te = evaluate(crops[step], bank, spec, config);
      if (!te || !std::isfinite(te->breakdown.total) || std::abs(te->breakdown.total) > 10.0 * baseline[step]) {
        stable = false;
        break;
      }
      const FilterGradient d = direction(*te, spectrum);
      if (!finite_step(bank, d, rate)) {
        stable = false;
        break;
      }
      bank = descend(bank, d, rate);
    }
    if (stable)
      return 0.5 * rate;
  }
  fail(ErrorCode::Numeric, "probe_learning_rate: no stable learning rate found");
}

TrainResult train(const Dataset &data, const TrainConfig &config, const CheckpointFn &checkpoint) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return config.deterministic ? 0.0
                                : std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  TrainResult res;
  res.bank = initial_bank(config);
  SpectrumEstimate spectrum;
  if (config.gradient_scaling)
    spectrum = estimate_mean_spectrum(data.keeping_mean(), config.crop_size, config.spectrum_samples, config.seed + 1);
  const SpectrumEstimate *scaling = config.gradient_scaling ? &spectrum : nullptr;

  res.learning_rate = config.learning_rate ? *config.learning_rate
                                           : probe_learning_rate(data, config, res.bank, scaling);
  const PatchSpec spec = config.patch_spec();
  std::mt19937_64 rng(config.seed + 2);
  for (std::size_t step = 1; step <= config.num_steps; ++step) {
    const Image crop = data.sample_crop(rng, config.crop_size);
    const auto te = evaluate(crop, res.bank, spec, config);
    const FilterGradient d = te ? direction(*te, scaling) : FilterGradient{};
    if (!te || !std::isfinite(te->breakdown.total) || !finite_step(res.bank, d, res.learning_rate)) {
      if (checkpoint) {
        checkpoint(res.bank, step - 1);
        res.log.checkpoints.push_back(step - 1);
      }
      fail(ErrorCode::Numeric, "train: energy diverged at step " + std::to_string(step) + " (learning rate " +
                                   std::to_string(res.learning_rate) + "); last finite bank checkpointed");
    }
    res.log.entries.push_back({step, te->breakdown, elapsed()});
    res.bank = descend(res.bank, d, res.learning_rate);
    if (checkpoint && config.checkpoint_every > 0 && step % config.checkpoint_every == 0) {
      checkpoint(res.bank, step);
      res.log.checkpoints.push_back(step);
    }
  }
  return res;
}

} // namespace lcov
