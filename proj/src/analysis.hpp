#pragma once

#include "filterbank.hpp"

#include <cstdint>
#include <vector>

namespace lcov {

// |rho| of two response channels over windows on a (0, 0)-anchored grid.
// Windows where either channel carries (almost) no energy are flagged as
// degenerate rather than stored as NaN.
struct CorrelationMap {
  Eigen::Index grid_height = 0, grid_width = 0;
  Eigen::Index window = 0, stride = 0;
  std::vector<double> values;   // |rho| in [0, 1]; 0 where degenerate
  std::vector<bool> degenerate;

  std::vector<double> valid_values() const;
  std::size_t degenerate_count() const;
};

struct Histogram {
  std::vector<double> edges; // bins + 1, strictly increasing
  std::vector<std::size_t> counts;
  std::size_t total = 0;
  std::size_t excluded = 0; // degenerate windows
};

struct CorrelationOptions {
  Eigen::Index window = 16;
  double window_sigma = 3.0;
  Eigen::Index stride = 4;
  bool subtract_mean = false;
};

CorrelationMap local_correlation(const ResponseMap &r, const Kernel &window, Eigen::Index stride,
                                 bool subtract_mean = false);

Histogram correlation_histogram(const CorrelationMap &m, std::size_t bins);

double median(std::vector<double> v);

struct ControlSuite {
  Histogram image;             // filters on the image
  Histogram noise;             // filters on spectrally matched noise
  Histogram randomized_filters; // phase-randomized filters on the image
  double median_image = 0.0, median_noise = 0.0, median_randomized_filters = 0.0;
};

ControlSuite run_control_suite(const Image &img, const FilterBank &pair, std::uint64_t seed,
                               const CorrelationOptions &opts = {}, std::size_t bins = 20);

/// Median |rho| of one filter pair on one image.
double median_local_correlation(const Image &img, const FilterBank &pair, const CorrelationOptions &opts);

} // namespace lcov
