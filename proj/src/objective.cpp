#include "objective.hpp"

#include "error.hpp"
#include "linalg.hpp"
#include "parallel.hpp"

#include <cmath>

namespace lcov {

PatchSpec PatchSpec::gaussian(Eigen::Index patch_size, Eigen::Index stride, double sigma) {
  require(patch_size >= 1, "patch size must be >= 1");
  require(stride >= 1 && stride <= patch_size, "patch stride must lie in [1, patch_size]");
  return PatchSpec{patch_size, stride, gaussian_window(patch_size, sigma)};
}

FilterGradient FilterGradient::zeros(std::size_t n, Eigen::Index size) {
  return FilterGradient{std::vector<Grid>(n, Grid::Zero(size, size))};
}

std::vector<Eigen::Index> patch_origins(Eigen::Index n, Eigen::Index patch, Eigen::Index stride) {
  std::vector<Eigen::Index> out;
  for (Eigen::Index p = 0; p + patch <= n; p += stride)
    out.push_back(p);
  return out;
}

ResponseEnergy local_dim_energy(const ResponseMap &r, const PatchSpec &spec) {
  const Eigen::Index p = spec.patch_size;
  require(r.num_channels() >= 1, "local_dim_energy: empty response map");
  require(spec.weight_window.size() == p, "local_dim_energy: weight window must match patch size");
  require(spec.stride >= 1 && spec.stride <= p, "local_dim_energy: stride must lie in [1, patch_size]");
  require(r.height() >= p && r.width() >= p, "local_dim_energy: patch larger than response map");

  const auto rows = patch_origins(r.height(), p, spec.stride);
  const auto cols = patch_origins(r.width(), p, spec.stride);
  const std::size_t n = r.num_channels();
  const Grid sqrt_w = spec.weight_window.taps.sqrt();

  struct PatchResult {
    double value = 0.0;
    Matrix subgradient;
  };
  std::vector<PatchResult> results(rows.size() * cols.size());
  parallel_for(results.size(), [&](std::size_t idx) {
    const Eigen::Index r0 = rows[idx / cols.size()], c0 = cols[idx % cols.size()];
    Matrix y(static_cast<Eigen::Index>(n), p * p);
    for (std::size_t i = 0; i < n; ++i)
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b)
          y(static_cast<Eigen::Index>(i), a * p + b) = sqrt_w(a, b) * r.channels[i](r0 + a, c0 + b);
    NuclearNormEval e = nuclear_norm_eval(y);
    results[idx] = {e.value, std::move(e.subgradient)};
  });

  ResponseEnergy out{0.0, ResponseMap::zeros(n, r.height(), r.width())};
  for (std::size_t idx = 0; idx < results.size(); ++idx) {
    const Eigen::Index r0 = rows[idx / cols.size()], c0 = cols[idx % cols.size()];
    const auto &res = results[idx];
    out.energy += res.value;
    for (std::size_t i = 0; i < n; ++i)
      for (Eigen::Index a = 0; a < p; ++a)
        for (Eigen::Index b = 0; b < p; ++b)
          out.gradient.channels[i](r0 + a, c0 + b) +=
              sqrt_w(a, b) * res.subgradient(static_cast<Eigen::Index>(i), a * p + b);
  }
  return out;
}

ResponseEnergy recons_energy(const Image &img, const FilterBank &bank, const ResponseMap &r) {
  require(r.height() == img.height() && r.width() == img.width(), "recons_energy: response/image size mismatch");
  const Image residual(img.pixels - reconstruct(bank, r).pixels);
  ResponseMap g = apply(bank, residual);
  for (auto &c : g.channels)
    c *= -2.0;
  return {residual.pixels.square().sum(), std::move(g)};
}

namespace {

Matrix stack_rows(const ResponseMap &z) {
  const Eigen::Index t = z.height() * z.width();
  Matrix m(static_cast<Eigen::Index>(z.num_channels()), t);
  for (std::size_t i = 0; i < z.num_channels(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(z.channels[i].data(), t);
  return m;
}

Grid row_as_grid(const Matrix &m, Eigen::Index row, Eigen::Index height, Eigen::Index width) {
  Grid g(height, width);
  Eigen::Map<Eigen::RowVectorXd>(g.data(), height * width) = m.row(row);
  return g;
}

// d<G, C_g^T C_g x>/dg for circular convolution C_g.
Kernel gram_operator_taps(const Grid &x, const Grid &g_resp, const Kernel &g, Eigen::Index size) {
  const Image cx = convolve(Image(x), g);
  const Image cg = convolve(Image(g_resp), g);
  return Kernel(correlate_taps(cx.pixels, g_resp, size).taps + correlate_taps(cg.pixels, x, size).taps);
}

} // namespace

FilterEnergy global_dim_energy(const Image &img, const FilterBank &bank, BlurDomain domain) {
  const ResponseMap z = modulated_reconstructions(bank, img, domain);
  const NuclearNormEval e = nuclear_norm_eval(stack_rows(z));
  const Eigen::Index h = img.height(), w = img.width(), k = bank.kernel_size();

  FilterEnergy out{-e.value, FilterGradient::zeros(bank.num_filters(), k)};
  if (e.value == 0.0)
    return out;

  const ComplexGrid xs = fft2(img.pixels);
  const ComplexGrid hs = kernel_spectrum(bank.blur(), h, w);
  for (std::size_t i = 0; i < bank.num_filters(); ++i) {
    const Grid g_resp = -row_as_grid(e.subgradient, static_cast<Eigen::Index>(i), h, w);
    if (domain == BlurDomain::Spatial) {
      const Kernel taps = gram_operator_taps(img.pixels, g_resp, bank.windowed(i), k);
      out.gradient.taps[i] = taps.taps * bank.blur().taps;
      continue;
    }
    // z^ = x^ B^2 with B = (|h^| (*) |f^|) / (H W).
    const ComplexGrid fs = kernel_spectrum(bank.kernel(i), h, w);
    const Grid mag = fs.abs();
    const Grid blurred = blurred_magnitude(bank, i, h, w);
    const Grid d_blurred = (2.0 / static_cast<double>(h * w)) * blurred * (xs * fft2(g_resp).conjugate()).real();
    const Grid d_mag = ifft2_real(fft2(d_blurred) * fft2(Grid(hs.abs()))) / static_cast<double>(h * w);
    ComplexGrid q(h, w);
    const double floor = 1e-300;
    for (Eigen::Index a = 0; a < h; ++a)
      for (Eigen::Index b = 0; b < w; ++b)
        q(a, b) = mag(a, b) > floor ? d_mag(a, b) * std::conj(fs(a, b)) / mag(a, b) : std::complex<double>(0.0);
    out.gradient.taps[i] = crop_taps(fft2(q).real(), k).taps;
  }
  return out;
}

TotalEnergy total_energy_and_gradient(const Image &img, const FilterBank &bank, const PatchSpec &spec,
                                      double lambda, double mu, BlurDomain domain) {
  require(lambda >= 0.0 && mu >= 0.0, "total_energy_and_gradient: weights must be non-negative");
  validate(img, "total_energy_and_gradient");
  const Eigen::Index k = bank.kernel_size();
  const ResponseMap y = apply(bank, img);

  ResponseEnergy local = local_dim_energy(y, spec);
  TotalEnergy out;
  out.breakdown.local_dim = local.energy;
  out.breakdown.lambda = lambda;
  out.breakdown.mu = mu;
  out.gradient = FilterGradient::zeros(bank.num_filters(), k);

  const Image residual(img.pixels - reconstruct(bank, y).pixels);
  out.breakdown.recons = residual.pixels.square().sum();

  for (std::size_t i = 0; i < bank.num_filters(); ++i) {
    // Response-space gradient: local term plus lambda * (-2 f_i * residual).
    Grid g_resp = local.gradient.channels[i];
    Grid explicit_part = Grid::Zero(k, k);
    if (lambda > 0.0) {
      g_resp += -2.0 * lambda * convolve(residual, bank.kernel(i)).pixels;
      // The reconstruction operator itself depends on f_i.
      explicit_part = -2.0 * lambda * correlate_taps(y.channels[i], residual.pixels, k).taps;
    }
    out.gradient.taps[i] = correlate_taps(g_resp, img.pixels, k).taps + explicit_part;
  }

  if (mu > 0.0) {
    FilterEnergy global = global_dim_energy(img, bank, domain);
    out.breakdown.global_dim = global.energy;
    for (std::size_t i = 0; i < bank.num_filters(); ++i)
      out.gradient.taps[i] += mu * global.gradient.taps[i];
  } else {
    out.breakdown.global_dim = -nuclear_norm(stack_rows(modulated_reconstructions(bank, img, domain)));
  }
  out.breakdown.total = out.breakdown.local_dim + lambda * out.breakdown.recons + mu * out.breakdown.global_dim;
  return out;
}

} // namespace lcov
