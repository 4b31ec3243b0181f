#include "covmap.hpp"

#include "error.hpp"
#include "parallel.hpp"

#include <cmath>

namespace lcov {

Kernel WindowDescriptor::make(Eigen::Index size) const {
  if (kind == WindowKind::Boxcar)
    return Kernel(Grid::Constant(size, size, 1.0 / static_cast<double>(size * size)));
  const double s = sigma > 0.0 ? sigma : static_cast<double>(size) / 4.0;
  return gaussian_window(size, s);
}

Eigen::Index grid_extent(Eigen::Index n, Eigen::Index stride) { return (n + stride - 1) / stride; }

CovarianceMap extract(const ResponseMap &r, Eigen::Index neighborhood, Eigen::Index stride,
                      const WindowDescriptor &window) {
  require(r.num_channels() >= 1, "extract: empty response map");
  require(neighborhood >= 1 && stride >= 1, "extract: neighborhood and stride must be >= 1");
  require(neighborhood <= r.height() && neighborhood <= r.width(), "extract: neighborhood larger than response map");
  for (const auto &c : r.channels)
    require(c.rows() == r.height() && c.cols() == r.width() && c.allFinite(), "extract: malformed response map");

  CovarianceMap cm;
  cm.image_height = r.height();
  cm.image_width = r.width();
  cm.grid_height = grid_extent(r.height(), stride);
  cm.grid_width = grid_extent(r.width(), stride);
  cm.num_filters = r.num_channels();
  cm.neighborhood = neighborhood;
  cm.stride = stride;
  cm.window = window;
  cm.matrices.resize(static_cast<std::size_t>(cm.grid_height * cm.grid_width));

  const Grid w = window.make(neighborhood).taps;
  const auto n = static_cast<Eigen::Index>(r.num_channels());
  const Eigen::Index h = r.height(), wd = r.width();
  parallel_for(cm.matrices.size(), [&](std::size_t idx) {
    const Eigen::Index a = static_cast<Eigen::Index>(idx) / cm.grid_width;
    const Eigen::Index b = static_cast<Eigen::Index>(idx) % cm.grid_width;
    Matrix y(n, neighborhood * neighborhood);
    Eigen::VectorXd wt(neighborhood * neighborhood);
    for (Eigen::Index u = 0; u < neighborhood; ++u)
      for (Eigen::Index v = 0; v < neighborhood; ++v) {
        const Eigen::Index rr = (a * stride + u) % h, cc = (b * stride + v) % wd;
        wt[u * neighborhood + v] = w(u, v);
        for (Eigen::Index i = 0; i < n; ++i)
          y(i, u * neighborhood + v) = r.channels[static_cast<std::size_t>(i)](rr, cc);
      }
    Matrix c = y * wt.asDiagonal() * y.transpose();
    cm.matrices[idx] = 0.5 * (c + c.transpose());
  });
  return cm;
}

MeasurementCount count_measurements(const CovarianceMap &cm) {
  MeasurementCount m;
  m.locations = cm.locations();
  m.per_location = cm.diagonal_only ? cm.num_filters : cm.num_filters * (cm.num_filters + 1) / 2;
  m.total = m.locations * m.per_location;
  return m;
}

namespace {

EigResult clamped_eig(const Matrix &c) {
  EigResult e = eig_sym(c);
  e.eigenvalues = e.eigenvalues.cwiseMax(0.0);
  return e;
}

Matrix rebuild(const EigResult &e) {
  Matrix m = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
  return 0.5 * (m + m.transpose());
}

template <typename F> CovarianceMap map_matrices(const CovarianceMap &cm, F &&f) {
  CovarianceMap out = cm;
  parallel_for(out.matrices.size(), [&](std::size_t i) { out.matrices[i] = f(cm.matrices[i]); });
  return out;
}

} // namespace

Matrix threshold_fixed(const Matrix &c, double tau) {
  EigResult e = clamped_eig(c);
  for (Eigen::Index k = 0; k < e.eigenvalues.size(); ++k)
    if (e.eigenvalues[k] < tau)
      e.eigenvalues[k] = 0.0;
  return rebuild(e);
}

Matrix threshold_adaptive(const Matrix &c, double fraction, AdaptiveReference ref) {
  EigResult e = clamped_eig(c);
  const Eigen::Index n = e.eigenvalues.size();
  Eigen::Index keep = 0;
  if (ref.mode == AdaptiveReference::Mode::LowpassChannel) {
    require(ref.lowpass_channel < static_cast<std::size_t>(n), "threshold_adaptive: low-pass channel out of range");
    e.eigenvectors.row(static_cast<Eigen::Index>(ref.lowpass_channel)).cwiseAbs().maxCoeff(&keep);
  }
  const double energy = e.eigenvalues.sum() - e.eigenvalues[keep];
  const double tau = fraction * energy;
  for (Eigen::Index k = 0; k < n; ++k)
    if (k != keep && e.eigenvalues[k] < tau)
      e.eigenvalues[k] = 0.0;
  return rebuild(e);
}

Matrix power_eigenvalues(const Matrix &c, double p) {
  EigResult e = clamped_eig(c);
  for (Eigen::Index k = 0; k < e.eigenvalues.size(); ++k)
    e.eigenvalues[k] = e.eigenvalues[k] > 0.0 ? std::pow(e.eigenvalues[k], p) : 0.0;
  return rebuild(e);
}

CovarianceMap eig_threshold_fixed(const CovarianceMap &cm, double tau) {
  require(tau >= 0.0, "eig_threshold_fixed: tau must be >= 0");
  return map_matrices(cm, [&](const Matrix &c) { return threshold_fixed(c, tau); });
}

CovarianceMap eig_threshold_adaptive(const CovarianceMap &cm, double fraction, AdaptiveReference ref) {
  require(fraction >= 0.0, "eig_threshold_adaptive: fraction must be >= 0");
  return map_matrices(cm, [&](const Matrix &c) { return threshold_adaptive(c, fraction, ref); });
}

CovarianceMap eig_power(const CovarianceMap &cm, double p) {
  require(p > 0.0, "eig_power: exponent must be positive");
  return map_matrices(cm, [&](const Matrix &c) { return power_eigenvalues(c, p); });
}

CovarianceMap restrict_to_variances(const CovarianceMap &cm) {
  CovarianceMap out = map_matrices(cm, [](const Matrix &c) { return Matrix(c.diagonal().asDiagonal()); });
  out.diagonal_only = true;
  return out;
}

double participation_ratio(const Matrix &c) {
  const Vector ev = clamped_eig(c).eigenvalues;
  const double s2 = ev.squaredNorm();
  return s2 > 0.0 ? ev.sum() * ev.sum() / s2 : 0.0;
}

} // namespace lcov
