#pragma once

#include "covmap.hpp"
#include "filterbank.hpp"
#include "signal.hpp"

#include <string>

namespace lcov {

enum class Preprocess {
  None,
  MeanSubtract,
  Standardize,  // mean-subtract, then unit variance
  LogNormalize, // log(1 + v), then standardize
};

Preprocess parse_preprocess(const std::string &name);
const char *preprocess_name(Preprocess p);
Image preprocess(Image img, Preprocess p);

// PGM (P2 ASCII / P5 binary, 8 or 16 bit) or van Hateren raw .iml
// (1536 x 1024, 16-bit little-endian, no header).
Image load_image(const std::string &path, Preprocess p = Preprocess::None);

constexpr Eigen::Index kImlWidth = 1536;
constexpr Eigen::Index kImlHeight = 1024;

/// Writes pixel values rounded and clamped to [0, maxval]. Binary P5 unless
/// `ascii` is set.
void write_pgm(const std::string &path, const Image &img, int maxval = 65535, bool ascii = false);

struct AffineMap {
  double offset = 0.0;
  double scale = 1.0; // value = offset + scale * code
};

/// 16-bit PGM spanning the full code range, plus `<path>.affine` recording
/// the map back to the unquantized values.
AffineMap write_pgm_rescaled(const std::string &path, const Image &img);

// Filter bank container:
//   "LCOVBANK1" | u32 N | u32 K | f64 blur_sigma | N*K*K f64 taps
// little-endian, filter-major, row-major taps.
constexpr std::size_t kBankHeaderBytes = 9 + 4 + 4 + 8;
void write_bank(const std::string &path, const FilterBank &bank);
FilterBank read_bank(const std::string &path);

// Covariance map container:
//   "LCOVMAP1" | u32 image_h | u32 image_w | u32 grid_h | u32 grid_w | u32 N
//   | u32 neighborhood | u32 stride | u8 window_kind | u8 diagonal_only
//   | u16 reserved | f64 window_sigma
// then, per grid location in row-major order, the upper triangle (i <= j,
// row-major) of C_P as f64.
constexpr std::size_t kCovMapHeaderBytes = 8 + 7 * 4 + 4 + 8;
void write_covmap(const std::string &path, const CovarianceMap &cm);
CovarianceMap read_covmap(const std::string &path);

} // namespace lcov
