#include "filterbank.hpp"

#include "error.hpp"

namespace lcov {

FilterBank::FilterBank(std::vector<Kernel> kernels, double blur_sigma)
    : kernels_(std::move(kernels)), blur_sigma_(blur_sigma) {
  require(!kernels_.empty(), "filter bank needs at least one kernel");
  const Eigen::Index k = kernels_.front().size();
  for (const auto &kern : kernels_) {
    validate(kern, "filter bank");
    require(kern.size() == k, "filter bank kernels must share one size");
  }
  blur_ = gaussian_window(k, blur_sigma);
}

Kernel FilterBank::windowed(std::size_t i) const { return Kernel(kernels_[i].taps * blur_.taps); }

ResponseMap ResponseMap::zeros(std::size_t n, Eigen::Index height, Eigen::Index width) {
  return ResponseMap{std::vector<Grid>(n, Grid::Zero(height, width))};
}

double inner(const ResponseMap &a, const ResponseMap &b) {
  require(a.num_channels() == b.num_channels(), "inner: channel mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.num_channels(); ++i)
    s += inner(a.channels[i], b.channels[i]);
  return s;
}

namespace {

void check_sizes(const FilterBank &bank, const Image &img, const char *what) {
  validate(img, what);
  require(bank.num_filters() > 0, std::string(what) + ": empty filter bank");
  require(bank.kernel_size() <= img.height() && bank.kernel_size() <= img.width(),
          std::string(what) + ": image smaller than kernels");
}

} // namespace

ResponseMap apply(const FilterBank &bank, const Image &img) {
  check_sizes(bank, img, "apply");
  const ComplexGrid xs = fft2(img.pixels);
  ResponseMap out;
  out.channels.reserve(bank.num_filters());
  for (const auto &k : bank.kernels())
    out.channels.push_back(ifft2_real(xs * kernel_spectrum(k, img.height(), img.width())));
  return out;
}

Image reconstruct(const FilterBank &bank, const ResponseMap &r) {
  require(r.num_channels() == bank.num_filters(), "reconstruct: channel count does not match bank");
  require(r.height() >= bank.kernel_size() && r.width() >= bank.kernel_size(),
          "reconstruct: responses smaller than kernels");
  ComplexGrid acc = ComplexGrid::Zero(r.height(), r.width());
  for (std::size_t i = 0; i < bank.num_filters(); ++i) {
    require(r.channels[i].rows() == r.height() && r.channels[i].cols() == r.width(),
            "reconstruct: channels differ in size");
    acc += fft2(r.channels[i]) * kernel_spectrum(bank.kernel(i), r.height(), r.width()).conjugate();
  }
  return Image(ifft2_real(acc));
}

Grid blurred_magnitude(const FilterBank &bank, std::size_t i, Eigen::Index height, Eigen::Index width) {
  const Grid mag = kernel_spectrum(bank.kernel(i), height, width).abs();
  const Grid hmag = kernel_spectrum(bank.blur(), height, width).abs();
  // Circular convolution over frequency bins, done with a pair of transforms.
  const Grid conv = ifft2_real(fft2(mag) * fft2(hmag));
  return conv / static_cast<double>(height * width);
}

ResponseMap modulated_reconstructions(const FilterBank &bank, const Image &img, BlurDomain domain) {
  check_sizes(bank, img, "modulated_reconstructions");
  const ComplexGrid xs = fft2(img.pixels);
  ResponseMap out;
  out.channels.reserve(bank.num_filters());
  for (std::size_t i = 0; i < bank.num_filters(); ++i) {
    Grid gain;
    if (domain == BlurDomain::Spatial)
      gain = kernel_spectrum(bank.windowed(i), img.height(), img.width()).abs2();
    else
      gain = blurred_magnitude(bank, i, img.height(), img.width()).square();
    out.channels.push_back(ifft2_real(xs * gain.cast<std::complex<double>>()));
  }
  return out;
}

} // namespace lcov
