#include "analysis.hpp"

#include "error.hpp"
#include "objective.hpp"

#include <algorithm>
#include <cmath>

namespace lcov {

std::vector<double> CorrelationMap::valid_values() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!degenerate[i])
      out.push_back(values[i]);
  return out;
}

std::size_t CorrelationMap::degenerate_count() const {
  return static_cast<std::size_t>(std::count(degenerate.begin(), degenerate.end(), true));
}

CorrelationMap local_correlation(const ResponseMap &r, const Kernel &window, Eigen::Index stride,
                                 bool subtract_mean) {
  require(r.num_channels() == 2, "local_correlation: need exactly two response channels");
  const Eigen::Index p = window.size();
  require(stride >= 1, "local_correlation: stride must be >= 1");
  require(r.height() >= p && r.width() >= p, "local_correlation: window larger than response map");
  const Grid &y1 = r.channels[0], &y2 = r.channels[1];
  const Grid &w = window.taps;
  const double wsum = w.sum();
  require(wsum > 0.0, "local_correlation: window must have positive mass");

  // Degeneracy threshold relative to the mean per-pixel energy of each channel.
  const double e1 = y1.square().mean() * wsum, e2 = y2.square().mean() * wsum;

  const auto rows = patch_origins(r.height(), p, stride);
  const auto cols = patch_origins(r.width(), p, stride);
  CorrelationMap m;
  m.grid_height = static_cast<Eigen::Index>(rows.size());
  m.grid_width = static_cast<Eigen::Index>(cols.size());
  m.window = p;
  m.stride = stride;
  for (Eigen::Index r0 : rows)
    for (Eigen::Index c0 : cols) {
      const Grid a = y1.block(r0, c0, p, p), b = y2.block(r0, c0, p, p);
      double ma = 0.0, mb = 0.0;
      if (subtract_mean) {
        ma = (w * a).sum() / wsum;
        mb = (w * b).sum() / wsum;
      }
      const double sab = (w * (a - ma) * (b - mb)).sum();
      const double saa = (w * (a - ma).square()).sum();
      const double sbb = (w * (b - mb).square()).sum();
      const bool degen = saa < 1e-12 * e1 || sbb < 1e-12 * e2 || saa <= 0.0 || sbb <= 0.0;
      m.degenerate.push_back(degen);
      m.values.push_back(degen ? 0.0 : std::min(1.0, std::abs(sab) / std::sqrt(saa * sbb)));
    }
  return m;
}

Histogram correlation_histogram(const CorrelationMap &m, std::size_t bins) {
  require(bins >= 2, "correlation_histogram: need at least two bins");
  Histogram h;
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges.push_back(static_cast<double>(i) / static_cast<double>(bins));
  h.counts.assign(bins, 0);
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (m.degenerate[i]) {
      ++h.excluded;
      continue;
    }
    const auto b = std::min(bins - 1, static_cast<std::size_t>(m.values[i] * static_cast<double>(bins)));
    ++h.counts[b];
    ++h.total;
  }
  return h;
}

double median(std::vector<double> v) {
  if (v.empty())
    return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2)
    return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<long>(mid)));
}

namespace {

CorrelationMap correlate(const Image &img, const FilterBank &pair, const CorrelationOptions &opts) {
  require(pair.num_filters() == 2, "correlation analysis needs a two-filter bank");
  return local_correlation(apply(pair, img), gaussian_window(opts.window, opts.window_sigma), opts.stride,
                           opts.subtract_mean);
}

} // namespace

double median_local_correlation(const Image &img, const FilterBank &pair, const CorrelationOptions &opts) {
  return median(correlate(img, pair, opts).valid_values());
}

ControlSuite run_control_suite(const Image &img, const FilterBank &pair, std::uint64_t seed,
                               const CorrelationOptions &opts, std::size_t bins) {
  require(pair.num_filters() == 2, "run_control_suite: need a two-filter bank");
  const FilterBank randomized({phase_randomize_kernel(pair.kernel(0), seed + 1),
                               phase_randomize_kernel(pair.kernel(1), seed + 2)},
                              pair.blur_sigma());
  const CorrelationMap a = correlate(img, pair, opts);
  const CorrelationMap b = correlate(phase_randomize(img, seed), pair, opts);
  const CorrelationMap c = correlate(img, randomized, opts);
  ControlSuite s;
  s.image = correlation_histogram(a, bins);
  s.noise = correlation_histogram(b, bins);
  s.randomized_filters = correlation_histogram(c, bins);
  s.median_image = median(a.valid_values());
  s.median_noise = median(b.valid_values());
  s.median_randomized_filters = median(c.valid_values());
  return s;
}

} // namespace lcov
