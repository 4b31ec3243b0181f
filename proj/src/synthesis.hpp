#pragma once

#include "covmap.hpp"
#include "filterbank.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace lcov {

struct SynthConfig {
  std::size_t max_steps = 10000;
  double step0 = 1.0;     // eta_0; step k uses eta_0 / k
  std::uint64_t seed = 0; // white-noise initialization
  double tolerance = 0.0; // stop once the objective is <= tolerance
  std::size_t log_every = 1;
  bool double_count_offdiagonal = false;
  // Projected descent onto x >= 0. The noise start is folded to |noise|.
  bool nonnegative = false;
};

struct SynthTraceEntry {
  std::size_t step = 0;
  double objective = 0.0;
  double step_size = 0.0;
};

struct SynthResult {
  Image image; // lowest-objective iterate
  std::vector<SynthTraceEntry> trace;
  std::optional<double> relative_error; // signless, against the reference when given
  std::size_t steps = 0;
  double best_objective = 0.0;
};

struct SynthObjective {
  double value = 0.0;
  Image gradient;
};

/// L1 distance between the tracked covariance entries of x and the target
/// (upper triangle, off-diagonals once; diagonal only for variance maps).
SynthObjective synth_objective(const Image &x, const FilterBank &bank, const CovarianceMap &target,
                               bool double_count_offdiagonal = false);

double harmonic_step(double step0, std::size_t k);

/// Subgradient descent from seeded unit-variance white noise, or from `init`.
SynthResult synthesize(const CovarianceMap &target, const FilterBank &bank, const SynthConfig &config,
                       const Image *init = nullptr, const Image *reference = nullptr);

/// ||x - ref|| / ||ref||.
double relative_error(const Image &x, const Image &ref);

/// min over the sign ambiguity phi(x) == phi(-x).
double signless_relative_error(const Image &x, const Image &ref);

/// ref plus Gaussian noise scaled so relative_error equals target_rel_error.
Image noise_baseline(const Image &ref, double target_rel_error, std::uint64_t seed);

} // namespace lcov
