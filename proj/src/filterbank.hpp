#pragma once

#include "signal.hpp"

#include <vector>

namespace lcov {

// How the blur window h enters the modulated reconstructions.
//  Spatial:   taps of each filter are multiplied by h before filtering, so the
//             complex filter spectrum is blurred by h's transform.
//  Frequency: the filter's Fourier magnitude |f^| is blurred by |h^| directly.
enum class BlurDomain { Spatial, Frequency };

class FilterBank {
public:
  FilterBank() = default;
  FilterBank(std::vector<Kernel> kernels, double blur_sigma);

  std::size_t num_filters() const { return kernels_.size(); }
  Eigen::Index kernel_size() const { return kernels_.empty() ? 0 : kernels_.front().size(); }
  double blur_sigma() const { return blur_sigma_; }
  const std::vector<Kernel> &kernels() const { return kernels_; }
  const Kernel &kernel(std::size_t i) const { return kernels_[i]; }
  const Kernel &blur() const { return blur_; }

  /// Blur-windowed taps h * f_i (tap-wise product).
  Kernel windowed(std::size_t i) const;

private:
  std::vector<Kernel> kernels_;
  Kernel blur_;
  double blur_sigma_ = 3.0;
};

struct ResponseMap {
  std::vector<Grid> channels;

  std::size_t num_channels() const { return channels.size(); }
  Eigen::Index height() const { return channels.empty() ? 0 : channels.front().rows(); }
  Eigen::Index width() const { return channels.empty() ? 0 : channels.front().cols(); }

  static ResponseMap zeros(std::size_t n, Eigen::Index height, Eigen::Index width);
};

double inner(const ResponseMap &a, const ResponseMap &b);

/// y_i = f_i * x (circular).
ResponseMap apply(const FilterBank &bank, const Image &img);

/// sum_i f~_i * y_i, the adjoint of apply.
Image reconstruct(const FilterBank &bank, const ResponseMap &r);

/// z~_i = (h f~_i) * (h f_i) * x.
ResponseMap modulated_reconstructions(const FilterBank &bank, const Image &img,
                                      BlurDomain domain = BlurDomain::Spatial);

/// Frequency-domain blur of the filter magnitude |f^_i| by |h^| / (H W),
/// on an H x W frequency grid. Used by BlurDomain::Frequency.
Grid blurred_magnitude(const FilterBank &bank, std::size_t i, Eigen::Index height, Eigen::Index width);

} // namespace lcov
