#include "signal.hpp"

#include "error.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <tuple>

namespace lcov {

namespace {

// FFTW planning is not thread-safe; execution of an existing plan on new
// arrays is. Plans are created once under the lock and never mutated.
class PlanCache {
public:
  fftw_plan get(int rows, int cols, int sign) {
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(rows, cols, sign);
    if (auto it = plans_.find(key); it != plans_.end())
      return it->second;
    auto *buf = fftw_alloc_complex(static_cast<std::size_t>(rows) * cols);
    fftw_plan p = fftw_plan_dft_2d(rows, cols, buf, buf, sign, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(buf);
    plans_.emplace(key, p);
    return p;
  }
  ~PlanCache() {
    for (auto &[key, plan] : plans_)
      fftw_destroy_plan(plan);
  }

private:
  std::mutex mutex_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache &plan_cache() {
  static PlanCache cache;
  return cache;
}

void execute(ComplexGrid &data, int sign) {
  fftw_plan p = plan_cache().get(static_cast<int>(data.rows()), static_cast<int>(data.cols()), sign);
  auto *ptr = reinterpret_cast<fftw_complex *>(data.data());
  fftw_execute_dft(p, ptr, ptr);
}

Eigen::Index wrap(Eigen::Index i, Eigen::Index n) { return ((i % n) + n) % n; }

} // namespace

void validate(const Image &img, const char *what) {
  require(img.height() >= 1 && img.width() >= 1, std::string(what) + ": empty image");
  require(img.pixels.allFinite(), std::string(what) + ": non-finite pixels");
}

void validate(const Kernel &k, const char *what) {
  require(k.taps.rows() >= 1 && k.taps.rows() == k.taps.cols(), std::string(what) + ": kernel must be square");
  require(k.taps.allFinite(), std::string(what) + ": non-finite taps");
}

ComplexGrid fft2(const Grid &g) {
  ComplexGrid out = g.cast<std::complex<double>>();
  execute(out, FFTW_FORWARD);
  return out;
}

ComplexGrid fft2(const ComplexGrid &g) {
  ComplexGrid out = g;
  execute(out, FFTW_FORWARD);
  return out;
}

Grid ifft2_real(const ComplexGrid &s) {
  ComplexGrid tmp = s;
  execute(tmp, FFTW_BACKWARD);
  return tmp.real() / static_cast<double>(s.size());
}

Spectrum fft2(const Image &img) { return Spectrum{fft2(img.pixels)}; }

Image ifft2(const Spectrum &s) { return Image(ifft2_real(s.bins)); }

Grid embed_kernel(const Kernel &k, Eigen::Index height, Eigen::Index width) {
  require(k.size() <= height && k.size() <= width, "kernel larger than image");
  Grid g = Grid::Zero(height, width);
  const Eigen::Index a = k.anchor();
  for (Eigen::Index i = 0; i < k.size(); ++i)
    for (Eigen::Index j = 0; j < k.size(); ++j)
      g(wrap(i - a, height), wrap(j - a, width)) += k.taps(i, j);
  return g;
}

Kernel crop_taps(const Grid &g, Eigen::Index size) {
  Grid t(size, size);
  const Eigen::Index a = size / 2;
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j)
      t(i, j) = g(wrap(i - a, g.rows()), wrap(j - a, g.cols()));
  return Kernel(std::move(t));
}

ComplexGrid kernel_spectrum(const Kernel &k, Eigen::Index height, Eigen::Index width) {
  return fft2(embed_kernel(k, height, width));
}

Image convolve(const Image &img, const Kernel &k) {
  validate(img, "convolve");
  validate(k, "convolve");
  require(k.size() <= img.height() && k.size() <= img.width(), "convolve: kernel larger than image");
  const ComplexGrid prod = fft2(img.pixels) * kernel_spectrum(k, img.height(), img.width());
  return Image(ifft2_real(prod));
}

Image adjoint_convolve(const Image &img, const Kernel &k) {
  validate(img, "adjoint_convolve");
  validate(k, "adjoint_convolve");
  require(k.size() <= img.height() && k.size() <= img.width(), "adjoint_convolve: kernel larger than image");
  const ComplexGrid prod = fft2(img.pixels) * kernel_spectrum(k, img.height(), img.width()).conjugate();
  return Image(ifft2_real(prod));
}

Kernel correlate_taps(const Grid &u, const Grid &v, Eigen::Index size) {
  require(u.rows() == v.rows() && u.cols() == v.cols(), "correlate_taps: shape mismatch");
  require(size <= u.rows() && size <= u.cols(), "correlate_taps: support larger than grid");
  return crop_taps(ifft2_real(fft2(u) * fft2(v).conjugate()), size);
}

Kernel gaussian_window(Eigen::Index size, double sigma) {
  require(size >= 1, "gaussian_window: size must be >= 1");
  require(sigma > 0.0 && std::isfinite(sigma), "gaussian_window: sigma must be positive");
  const double m = (static_cast<double>(size) - 1.0) / 2.0;
  Grid t(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) {
      const double di = static_cast<double>(i) - m, dj = static_cast<double>(j) - m;
      t(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  t /= t.sum();
  return Kernel(std::move(t));
}

namespace {

Grid randomize_phases(const Grid &g, std::uint64_t seed) {
  const Eigen::Index h = g.rows(), w = g.cols();
  ComplexGrid s = fft2(g);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      const Eigen::Index mr = wrap(-r, h), mc = wrap(-c, w);
      const Eigen::Index self = r * w + c, mirror = mr * w + mc;
      if (self >= mirror)
        continue; // self-conjugate bins stay real; mirrors are filled below
      const double mag = std::abs(s(r, c));
      const std::complex<double> v = std::polar(mag, angle(rng));
      s(r, c) = v;
      s(mr, mc) = std::conj(v);
    }
  return ifft2_real(s);
}

} // namespace

Image phase_randomize(const Image &img, std::uint64_t seed) {
  validate(img, "phase_randomize");
  return Image(randomize_phases(img.pixels, seed), img.provenance + "|phase-randomized");
}

Kernel phase_randomize_kernel(const Kernel &k, std::uint64_t seed) {
  validate(k, "phase_randomize_kernel");
  return Kernel(randomize_phases(k.taps, seed));
}

double inner(const Grid &a, const Grid &b) { return (a * b).sum(); }

} // namespace lcov
