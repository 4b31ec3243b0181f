#pragma once

#include "filterbank.hpp"
#include "objective.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

namespace lcov {

struct TrainConfig {
  std::size_t num_filters = 4;
  Eigen::Index kernel_size = 20;
  Eigen::Index patch_size = 16;
  Eigen::Index patch_stride = 8;
  double window_sigma = 3.0;
  double blur_sigma = 3.0;
  double lambda = 3500.0;
  double mu = 100.0;
  std::optional<double> learning_rate; // unset selects the rate with probe_learning_rate
  std::size_t num_steps = 1000;
  Eigen::Index crop_size = 48;
  std::uint64_t seed = 0;
  bool gradient_scaling = true;
  bool deterministic = true;
  std::size_t spectrum_samples = 256;
  std::size_t checkpoint_every = 0; // 0 disables periodic checkpoints
  BlurDomain blur_domain = BlurDomain::Spatial;

  void validate() const;
  PatchSpec patch_spec() const;
};

// Training images plus the normalization applied to each crop: subtract the
// crop mean (optional) and divide by a fixed scale.
class Dataset {
public:
  /// Crops are used as-is.
  static Dataset raw(std::vector<Image> images);
  /// Crops are mean-subtracted and divided by the ensemble standard deviation
  /// (computed over all images after removing each image's mean).
  static Dataset for_training(std::vector<Image> images);

  const std::vector<Image> &images() const { return images_; }
  double scale() const { return scale_; }
  bool subtract_crop_mean() const { return subtract_mean_; }

  /// Same images and scale, crops keep their mean. Used for spectrum
  /// estimates so the DC bin is populated rather than floored.
  Dataset keeping_mean() const;

  /// Uniform image, then uniform position.
  Image sample_crop(std::mt19937_64 &rng, Eigen::Index crop) const;

private:
  std::vector<Image> images_;
  double scale_ = 1.0;
  bool subtract_mean_ = false;
};

struct SpectrumEstimate {
  Grid power; // mean |x^(w)|^2 at crop resolution
  std::size_t samples = 0;
};

SpectrumEstimate estimate_mean_spectrum(const Dataset &data, Eigen::Index crop, std::size_t count,
                                        std::uint64_t seed);

/// Divides each Fourier component of every filter gradient (at the spectrum's
/// resolution) by sqrt(E|x^|^2), then crops back to the tap support. Bins
/// below 1e-6 of the largest are floored to that value first.
FilterGradient scale_gradient(const FilterGradient &g, const SpectrumEstimate &s);

struct TrainLogEntry {
  std::size_t step = 0;
  EnergyBreakdown energy;
  double elapsed_seconds = 0.0;
};

struct TrainLog {
  std::vector<TrainLogEntry> entries;
  std::vector<std::size_t> checkpoints;
};

struct TrainResult {
  FilterBank bank;
  TrainLog log;
  double learning_rate = 0.0;
};

using CheckpointFn = std::function<void(const FilterBank &, std::size_t step)>;

/// Gaussian taps scaled so the bank's summed power gain sum_i |f_i^|^2 is 1
/// on average over frequency.
FilterBank initial_bank(const TrainConfig &config);

/// Descends `bank` along (optionally scaled) gradients.
FilterBank descend(const FilterBank &bank, const FilterGradient &g, double rate);

/// Halves the rate, starting at `start`, until 50 descent steps over a fixed
/// set of crops run without any crop's energy exceeding 10x its energy under
/// `init`. Returns half of that rate as a safety margin for longer runs.
double probe_learning_rate(const Dataset &data, const TrainConfig &config, const FilterBank &init,
                           const SpectrumEstimate *spectrum, double start = 1.0);

/// Stochastic gradient descent with one random crop per step. Throws a
/// Numeric error on a non-finite energy after handing the last finite bank
/// to `checkpoint`.
TrainResult train(const Dataset &data, const TrainConfig &config, const CheckpointFn &checkpoint = {});

} // namespace lcov
