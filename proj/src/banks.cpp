#include "banks.hpp"

#include "error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace lcov {

FilterBank random_bank(std::size_t n, Eigen::Index kernel_size, double blur_sigma, std::uint64_t seed) {
  require(n >= 1 && kernel_size >= 1, "random_bank: need at least one filter of size >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> tap(0.0, 1.0);
  std::vector<Kernel> ks;
  for (std::size_t i = 0; i < n; ++i) {
    Grid t(kernel_size, kernel_size);
    for (Eigen::Index j = 0; j < t.size(); ++j)
      t.data()[j] = tap(rng);
    ks.emplace_back(std::move(t));
  }
  return FilterBank(std::move(ks), blur_sigma);
}

Kernel gaussian_derivative(Eigen::Index size, double sigma, double theta, int order) {
  require(order >= 0 && order <= 2, "gaussian_derivative: order must be 0, 1 or 2");
  require(sigma > 0.0, "gaussian_derivative: sigma must be positive");
  const double a = static_cast<double>(size / 2);
  const double c = std::cos(theta), s = std::sin(theta);
  Grid t(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) {
      const double y = static_cast<double>(i) - a, x = static_cast<double>(j) - a;
      const double u = c * x + s * y; // coordinate along theta
      const double g = std::exp(-(x * x + y * y) / (2.0 * sigma * sigma));
      switch (order) {
      case 0:
        t(i, j) = g;
        break;
      case 1:
        t(i, j) = -u * g;
        break;
      default:
        t(i, j) = (u * u / (sigma * sigma) - 1.0) * g;
        break;
      }
    }
  if (order > 0)
    t -= t.mean();
  return Kernel(t / std::sqrt(t.square().sum()));
}

FilterBank oriented_pair(Eigen::Index size, double sigma, double blur_sigma) {
  return FilterBank({gaussian_derivative(size, sigma, 0.0, 1), gaussian_derivative(size, sigma, std::numbers::pi / 2, 1)},
                    blur_sigma);
}

FilterBank oriented_bank(std::size_t n, Eigen::Index size, double blur_sigma) {
  require(n >= 2, "oriented_bank: need at least two filters");
  if (n == 2)
    return peak_normalized(oriented_pair(size, 1.5, blur_sigma));
  // Layout: [low-pass, band-pass..., high-pass]. The band-pass filters are
  // first derivatives at two scales; orientations are spread evenly over
  // [0, pi) within each scale.
  std::vector<Kernel> ks;
  ks.push_back(gaussian_derivative(size, 1.5, 0.0, 0));
  const std::size_t bands = n - 2;
  const std::size_t coarse = (bands + 1) / 2, fine = bands / 2;
  auto add_scale = [&](std::size_t count, double sigma, double offset) {
    for (std::size_t k = 0; k < count; ++k)
      ks.push_back(gaussian_derivative(size, sigma, offset + std::numbers::pi * static_cast<double>(k) /
                                                                static_cast<double>(count), 1));
  };
  if (bands <= 2) {
    add_scale(bands, 1.2, 0.0);
  } else {
    add_scale(coarse, 1.6, 0.0);
    add_scale(fine, 0.9, std::numbers::pi / static_cast<double>(2 * std::max<std::size_t>(fine, 1)));
  }
  Grid hp = Grid::Zero(size, size);
  hp(size / 2, size / 2) = 1.0;
  hp -= gaussian_derivative(size, 0.8, 0.0, 0).taps * (1.0 / gaussian_derivative(size, 0.8, 0.0, 0).taps.sum());
  ks.emplace_back(hp / std::sqrt(hp.square().sum()));
  return peak_normalized(FilterBank(std::move(ks), blur_sigma));
}

FilterBank peak_normalized(const FilterBank &bank, Eigen::Index grid) {
  require(grid >= bank.kernel_size(), "peak_normalized: grid smaller than the kernels");
  std::vector<Kernel> ks;
  for (const auto &k : bank.kernels()) {
    const double peak = kernel_spectrum(k, grid, grid).abs().maxCoeff();
    require(peak > 0.0, "peak_normalized: zero filter");
    ks.emplace_back(k.taps / peak);
  }
  return FilterBank(std::move(ks), bank.blur_sigma());
}

} // namespace lcov
