#pragma once

#include "filterbank.hpp"
#include "signal.hpp"

#include <vector>

namespace lcov {

// Overlapping patches for the local-dimensionality term. The grid starts at
// (0, 0) and steps by `stride`; patches that would cross the border are
// dropped.
struct PatchSpec {
  Eigen::Index patch_size = 16;
  Eigen::Index stride = 8;
  Kernel weight_window;

  static PatchSpec gaussian(Eigen::Index patch_size, Eigen::Index stride, double sigma);
};

struct EnergyBreakdown {
  double local_dim = 0.0;
  double recons = 0.0;
  double global_dim = 0.0; // -||Z~||_*, never positive
  double total = 0.0;      // local_dim + lambda * recons + mu * global_dim
  double lambda = 0.0;
  double mu = 0.0;
};

struct FilterGradient {
  std::vector<Grid> taps;

  static FilterGradient zeros(std::size_t n, Eigen::Index size);
};

struct ResponseEnergy {
  double energy = 0.0;
  ResponseMap gradient;
};

struct FilterEnergy {
  double energy = 0.0;
  FilterGradient gradient;
};

/// Patch origins along one axis of length n.
std::vector<Eigen::Index> patch_origins(Eigen::Index n, Eigen::Index patch, Eigen::Index stride);

/// sum_P ||Y_P||_*, with Y_P[i, t] = sqrt(w(t)) y_i(t) (filters x pixels).
ResponseEnergy local_dim_energy(const ResponseMap &r, const PatchSpec &spec);

/// ||x - reconstruct(bank, r)||^2 and its gradient with respect to r.
ResponseEnergy recons_energy(const Image &img, const FilterBank &bank, const ResponseMap &r);

/// -||Z~||_* and its gradient with respect to the filter taps.
FilterEnergy global_dim_energy(const Image &img, const FilterBank &bank,
                               BlurDomain domain = BlurDomain::Spatial);

struct TotalEnergy {
  EnergyBreakdown breakdown;
  FilterGradient gradient;
};

TotalEnergy total_energy_and_gradient(const Image &img, const FilterBank &bank, const PatchSpec &spec,
                                      double lambda, double mu, BlurDomain domain = BlurDomain::Spatial);

} // namespace lcov
