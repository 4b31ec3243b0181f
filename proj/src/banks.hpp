#pragma once

#include "filterbank.hpp"

#include <cstdint>

namespace lcov {

/// Unit-variance Gaussian taps, seed-controlled.
FilterBank random_bank(std::size_t n, Eigen::Index kernel_size, double blur_sigma, std::uint64_t seed);

/// Derivative of a Gaussian (order 0, 1 or 2) along direction theta, unit L2 norm.
Kernel gaussian_derivative(Eigen::Index size, double sigma, double theta, int order);

/// First-derivative-of-Gaussian pair at orthogonal orientations.
FilterBank oriented_pair(Eigen::Index size = 9, double sigma = 1.5, double blur_sigma = 3.0);

/// Low-pass, oriented band-pass and high-pass filters, each scaled by
/// peak_normalized; see banks.cpp for the layout per filter count.
FilterBank oriented_bank(std::size_t n, Eigen::Index size = 9, double blur_sigma = 3.0);

/// Scales every filter so max |DFT| on a grid x grid lattice is 1.
FilterBank peak_normalized(const FilterBank &bank, Eigen::Index grid = 64);

} // namespace lcov
