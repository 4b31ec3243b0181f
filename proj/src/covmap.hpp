#pragma once

#include "filterbank.hpp"
#include "linalg.hpp"

#include <cstdint>
#include <vector>

namespace lcov {

enum class WindowKind : std::uint8_t { Gaussian = 0, Boxcar = 1 };

struct WindowDescriptor {
  WindowKind kind = WindowKind::Gaussian;
  double sigma = 0.0; // Gaussian only; <= 0 means neighborhood / 4

  Kernel make(Eigen::Index size) const;
  bool operator==(const WindowDescriptor &) const = default;
};

// Local second-moment matrices on a subsampled grid. Grid point (a, b) owns
// the neighborhood whose top-left pixel is (a * stride, b * stride); pixels
// wrap around the image borders, matching the circular filtering, so the grid
// has ceil(H / stride) x ceil(W / stride) locations.
struct CovarianceMap {
  Eigen::Index image_height = 0, image_width = 0;
  Eigen::Index grid_height = 0, grid_width = 0;
  std::size_t num_filters = 0;
  Eigen::Index neighborhood = 0, stride = 0;
  WindowDescriptor window;
  bool diagonal_only = false; // variance-map control: off-diagonals carry no information
  std::vector<Matrix> matrices; // grid_height * grid_width, row-major

  std::size_t locations() const { return matrices.size(); }
  const Matrix &at(Eigen::Index a, Eigen::Index b) const { return matrices[static_cast<std::size_t>(a * grid_width + b)]; }
};

struct MeasurementCount {
  std::size_t locations = 0;
  std::size_t per_location = 0;
  std::size_t total = 0;
};

Eigen::Index grid_extent(Eigen::Index n, Eigen::Index stride);

CovarianceMap extract(const ResponseMap &r, Eigen::Index neighborhood, Eigen::Index stride,
                      const WindowDescriptor &window);

/// locations * N(N+1)/2, or locations * N for a variance-only map.
MeasurementCount count_measurements(const CovarianceMap &cm);

/// Which eigenvalue the adaptive rule treats as the luminance component.
struct AdaptiveReference {
  enum class Mode { Largest, LowpassChannel } mode = Mode::Largest;
  std::size_t lowpass_channel = 0;
};

CovarianceMap eig_threshold_fixed(const CovarianceMap &cm, double tau);
CovarianceMap eig_threshold_adaptive(const CovarianceMap &cm, double fraction, AdaptiveReference ref = {});
CovarianceMap eig_power(const CovarianceMap &cm, double p);
CovarianceMap restrict_to_variances(const CovarianceMap &cm);

/// Per-matrix building blocks of the map-level edits above.
Matrix threshold_fixed(const Matrix &c, double tau);
Matrix threshold_adaptive(const Matrix &c, double fraction, AdaptiveReference ref = {});
Matrix power_eigenvalues(const Matrix &c, double p);

/// (sum lambda)^2 / sum lambda^2.
double participation_ratio(const Matrix &c);

} // namespace lcov
