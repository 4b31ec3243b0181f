#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <string>

namespace lcov {

using Grid = Eigen::Array<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexGrid = Eigen::Array<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Image {
  Grid pixels;
  std::string provenance;

  Image() = default;
  explicit Image(Grid p, std::string prov = {}) : pixels(std::move(p)), provenance(std::move(prov)) {}
  static Image zeros(Eigen::Index height, Eigen::Index width) { return Image(Grid::Zero(height, width)); }

  Eigen::Index height() const { return pixels.rows(); }
  Eigen::Index width() const { return pixels.cols(); }
  double &operator()(Eigen::Index r, Eigen::Index c) { return pixels(r, c); }
  double operator()(Eigen::Index r, Eigen::Index c) const { return pixels(r, c); }
};

// Square K x K taps. The anchor (zero offset) sits at index floor(K/2) on
// both axes: tap (i, j) acts at spatial offset (i - K/2, j - K/2).
struct Kernel {
  Grid taps;

  Kernel() = default;
  explicit Kernel(Grid t) : taps(std::move(t)) {}
  Eigen::Index size() const { return taps.rows(); }
  Eigen::Index anchor() const { return taps.rows() / 2; }
};

// Forward transform is unnormalized, the inverse carries 1/(H W):
//   sum |x|^2 == sum |X|^2 / (H W).
struct Spectrum {
  ComplexGrid bins;

  Eigen::Index height() const { return bins.rows(); }
  Eigen::Index width() const { return bins.cols(); }
};

void validate(const Image &img, const char *what);
void validate(const Kernel &k, const char *what);

ComplexGrid fft2(const Grid &g);
ComplexGrid fft2(const ComplexGrid &g);
Grid ifft2_real(const ComplexGrid &s);

Spectrum fft2(const Image &img);
Image ifft2(const Spectrum &s);

/// Kernel taps laid out on an H x W periodic grid with the anchor at (0, 0).
Grid embed_kernel(const Kernel &k, Eigen::Index height, Eigen::Index width);
/// Inverse of embed_kernel: reads the K x K tap support back off a periodic grid.
Kernel crop_taps(const Grid &g, Eigen::Index size);
ComplexGrid kernel_spectrum(const Kernel &k, Eigen::Index height, Eigen::Index width);

/// Circular convolution y(t) = sum_s k(s) x(t - (s - anchor)).
Image convolve(const Image &img, const Kernel &k);
/// Exact adjoint of convolve under circular boundaries (correlation with k).
Image adjoint_convolve(const Image &img, const Kernel &k);

/// Tap-space correlation c(s) = sum_t u(t) v(t - (s - anchor)) for an
/// `size` x `size` support. This is d<u, convolve(v, f)>/df(s).
Kernel correlate_taps(const Grid &u, const Grid &v, Eigen::Index size);

Kernel gaussian_window(Eigen::Index size, double sigma);

/// Same Fourier magnitudes, uniformly random Hermitian-consistent phases.
/// Self-conjugate bins (DC and Nyquist lines) keep their original values.
Image phase_randomize(const Image &img, std::uint64_t seed);
Kernel phase_randomize_kernel(const Kernel &k, std::uint64_t seed);

double inner(const Grid &a, const Grid &b);

} // namespace lcov
