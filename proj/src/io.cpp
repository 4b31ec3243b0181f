#include "io.hpp"

#include "error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <vector>

namespace lcov {

Preprocess parse_preprocess(const std::string &name) {
  if (name == "none")
    return Preprocess::None;
  if (name == "mean-subtract")
    return Preprocess::MeanSubtract;
  if (name == "standardize")
    return Preprocess::Standardize;
  if (name == "log-normalize")
    return Preprocess::LogNormalize;
  fail(ErrorCode::InvalidInput,
       "unknown preprocessing '" + name + "' (expected none, mean-subtract, standardize, log-normalize)");
}

const char *preprocess_name(Preprocess p) {
  switch (p) {
  case Preprocess::None:
    return "none";
  case Preprocess::MeanSubtract:
    return "mean-subtract";
  case Preprocess::Standardize:
    return "standardize";
  case Preprocess::LogNormalize:
    return "log-normalize";
  }
  return "none";
}

Image preprocess(Image img, Preprocess p) {
  if (p == Preprocess::None)
    return img;
  if (p == Preprocess::LogNormalize)
    img.pixels = (img.pixels.max(0.0) + 1.0).log();
  img.pixels -= img.pixels.mean();
  if (p != Preprocess::MeanSubtract) {
    const double sd = std::sqrt(img.pixels.square().mean());
    if (sd > 0.0)
      img.pixels /= sd;
  }
  img.provenance += std::string("|") + preprocess_name(p);
  return img;
}

namespace {

std::vector<unsigned char> read_all(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ErrorCode::Io, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

bool ends_with(const std::string &s, const std::string &suffix) {
  if (s.size() < suffix.size())
    return false;
  std::string tail = s.substr(s.size() - suffix.size());
  for (auto &c : tail)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return tail == suffix;
}

class HeaderReader {
public:
  HeaderReader(const std::vector<unsigned char> &buf, const std::string &path) : buf_(buf), path_(path) {}

  long next_int() {
    skip_space();
    if (pos_ >= buf_.size() || !std::isdigit(buf_[pos_]))
      fail(ErrorCode::Format, "'" + path_ + "': malformed PGM header");
    long v = 0;
    while (pos_ < buf_.size() && std::isdigit(buf_[pos_])) {
      v = v * 10 + (buf_[pos_++] - '0');
      if (v > 1'000'000'000)
        fail(ErrorCode::Format, "'" + path_ + "': PGM header value out of range");
    }
    return v;
  }
  void skip_space() {
    while (pos_ < buf_.size()) {
      if (buf_[pos_] == '#') {
        while (pos_ < buf_.size() && buf_[pos_] != '\n')
          ++pos_;
      } else if (std::isspace(buf_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }
  // Binary data starts after exactly one whitespace byte following maxval.
  std::size_t binary_start() const { return pos_ + 1; }

private:
  const std::vector<unsigned char> &buf_;
  const std::string &path_;
  std::size_t pos_ = 2;
};

Image decode_pgm(const std::vector<unsigned char> &buf, const std::string &path) {
  if (buf.size() < 2 || buf[0] != 'P' || (buf[1] != '2' && buf[1] != '5'))
    fail(ErrorCode::Format, "'" + path + "': not a P2/P5 PGM file");
  HeaderReader hdr(buf, path);
  const long w = hdr.next_int(), h = hdr.next_int(), maxval = hdr.next_int();
  if (w < 1 || h < 1 || maxval < 1 || maxval > 65535)
    fail(ErrorCode::Format, "'" + path + "': invalid PGM dimensions or maxval");
  Image img = Image::zeros(h, w);
  img.provenance = path;
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (buf[1] == '2') {
    for (std::size_t i = 0; i < count; ++i) {
      long v = 0;
      try {
        v = hdr.next_int();
      } catch (const Error &) {
        fail(ErrorCode::Format, "'" + path + "': truncated ASCII PGM data");
      }
      img.pixels.data()[i] = static_cast<double>(v);
    }
    return img;
  }
  const std::size_t bytes = maxval > 255 ? 2 : 1;
  const std::size_t start = hdr.binary_start();
  if (buf.size() < start + count * bytes)
    fail(ErrorCode::Format, "'" + path + "': truncated PGM data");
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned char *p = buf.data() + start + i * bytes;
    img.pixels.data()[i] = bytes == 2 ? static_cast<double>((p[0] << 8) | p[1]) : static_cast<double>(p[0]);
  }
  return img;
}

Image decode_iml(const std::vector<unsigned char> &buf, const std::string &path) {
  const std::size_t expected = static_cast<std::size_t>(kImlWidth * kImlHeight) * 2;
  if (buf.size() != expected)
    fail(ErrorCode::Format, "'" + path + "': .iml must be exactly " + std::to_string(expected) + " bytes, got " +
                                std::to_string(buf.size()) + " (truncated or wrong dimensions)");
  Image img = Image::zeros(kImlHeight, kImlWidth);
  img.provenance = path;
  for (std::size_t i = 0; i < expected / 2; ++i)
    img.pixels.data()[i] = static_cast<double>(buf[2 * i] | (buf[2 * i + 1] << 8));
  return img;
}

// Little-endian primitives.
void put_u32(std::string &out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u16(std::string &out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}
void put_f64(std::string &out, double d) {
  const auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class ByteReader {
public:
  ByteReader(const std::vector<unsigned char> &buf, const std::string &path) : buf_(buf), path_(path) {}
  void need(std::size_t n) const {
    if (pos_ + n > buf_.size())
      fail(ErrorCode::Format, "'" + path_ + "': truncated file");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s(buf_.begin() + static_cast<long>(pos_), buf_.begin() + static_cast<long>(pos_ + n));
    pos_ += n;
    return s;
  }
  std::uint64_t uint(std::size_t n) {
    need(n);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < n; ++i)
      v |= static_cast<std::uint64_t>(buf_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }
  double f64() { return std::bit_cast<double>(uint(8)); }
  std::size_t remaining() const { return buf_.size() - pos_; }

private:
  const std::vector<unsigned char> &buf_;
  const std::string &path_;
  std::size_t pos_ = 0;
};

void write_all(const std::string &path, const std::string &data) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    fail(ErrorCode::Io, "cannot write '" + path + "'");
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out)
    fail(ErrorCode::Io, "write failed for '" + path + "'");
}

} // namespace

Image load_image(const std::string &path, Preprocess p) {
  const auto buf = read_all(path);
  Image img = ends_with(path, ".iml") ? decode_iml(buf, path) : decode_pgm(buf, path);
  return preprocess(std::move(img), p);
}

void write_pgm(const std::string &path, const Image &img, int maxval, bool ascii) {
  validate(img, "write_pgm");
  require(maxval >= 1 && maxval <= 65535, "write_pgm: maxval must be in [1, 65535]");
  std::string out = (ascii ? "P2\n" : "P5\n") + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n" + std::to_string(maxval) + "\n";
  const Eigen::Index n = img.pixels.size();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double v = std::clamp(std::round(img.pixels.data()[i]), 0.0, static_cast<double>(maxval));
    const auto q = static_cast<unsigned>(v);
    if (ascii) {
      out += std::to_string(q);
      out.push_back((i + 1) % img.width() == 0 ? '\n' : ' ');
    } else if (maxval > 255) {
      out.push_back(static_cast<char>(q >> 8));
      out.push_back(static_cast<char>(q & 0xff));
    } else {
      out.push_back(static_cast<char>(q));
    }
  }
  write_all(path, out);
}

AffineMap write_pgm_rescaled(const std::string &path, const Image &img) {
  validate(img, "write_pgm_rescaled");
  const double lo = img.pixels.minCoeff(), hi = img.pixels.maxCoeff();
  AffineMap map{lo, hi > lo ? (hi - lo) / 65535.0 : 1.0};
  write_pgm(path, Image((img.pixels - map.offset) / map.scale), 65535, false);
  std::ostringstream side;
  side << std::setprecision(17) << "offset=" << map.offset << "\nscale=" << map.scale << "\n";
  write_all(path + ".affine", side.str());
  return map;
}

void write_bank(const std::string &path, const FilterBank &bank) {
  std::string out = "LCOVBANK1";
  put_u32(out, static_cast<std::uint32_t>(bank.num_filters()));
  put_u32(out, static_cast<std::uint32_t>(bank.kernel_size()));
  put_f64(out, bank.blur_sigma());
  for (const auto &k : bank.kernels())
    for (Eigen::Index i = 0; i < k.taps.size(); ++i)
      put_f64(out, k.taps.data()[i]);
  write_all(path, out);
}

FilterBank read_bank(const std::string &path) {
  const auto buf = read_all(path);
  ByteReader in(buf, path);
  if (in.bytes(9) != "LCOVBANK1")
    fail(ErrorCode::Format, "'" + path + "': not a filter bank file (bad magic)");
  const auto n = in.uint(4), k = in.uint(4);
  const double blur = in.f64();
  if (n < 1 || k < 1 || n > 4096 || k > 4096)
    fail(ErrorCode::Format, "'" + path + "': implausible bank dimensions");
  if (in.remaining() != n * k * k * 8)
    fail(ErrorCode::Format, "'" + path + "': byte length does not match header (truncated or trailing data)");
  std::vector<Kernel> ks;
  for (std::uint64_t f = 0; f < n; ++f) {
    Grid t(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (Eigen::Index i = 0; i < t.size(); ++i)
      t.data()[i] = in.f64();
    ks.emplace_back(std::move(t));
  }
  try {
    return FilterBank(std::move(ks), blur);
  } catch (const Error &e) {
    fail(ErrorCode::Format, "'" + path + "': " + e.what());
  }
}

void write_covmap(const std::string &path, const CovarianceMap &cm) {
  std::string out = "LCOVMAP1";
  for (auto v : {cm.image_height, cm.image_width, cm.grid_height, cm.grid_width,
                 static_cast<Eigen::Index>(cm.num_filters), cm.neighborhood, cm.stride})
    put_u32(out, static_cast<std::uint32_t>(v));
  out.push_back(static_cast<char>(cm.window.kind));
  out.push_back(static_cast<char>(cm.diagonal_only ? 1 : 0));
  put_u16(out, 0);
  put_f64(out, cm.window.sigma);
  const auto n = static_cast<Eigen::Index>(cm.num_filters);
  for (const auto &m : cm.matrices)
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        put_f64(out, m(i, j));
  write_all(path, out);
}

CovarianceMap read_covmap(const std::string &path) {
  const auto buf = read_all(path);
  ByteReader in(buf, path);
  if (in.bytes(8) != "LCOVMAP1")
    fail(ErrorCode::Format, "'" + path + "': not a covariance map file (bad magic)");
  CovarianceMap cm;
  cm.image_height = static_cast<Eigen::Index>(in.uint(4));
  cm.image_width = static_cast<Eigen::Index>(in.uint(4));
  cm.grid_height = static_cast<Eigen::Index>(in.uint(4));
  cm.grid_width = static_cast<Eigen::Index>(in.uint(4));
  cm.num_filters = static_cast<std::size_t>(in.uint(4));
  cm.neighborhood = static_cast<Eigen::Index>(in.uint(4));
  cm.stride = static_cast<Eigen::Index>(in.uint(4));
  const auto kind = in.uint(1);
  const auto diag = in.uint(1);
  in.uint(2);
  cm.window.sigma = in.f64();
  if (kind > 1 || diag > 1)
    fail(ErrorCode::Format, "'" + path + "': unknown window kind or flags");
  cm.window.kind = static_cast<WindowKind>(kind);
  cm.diagonal_only = diag == 1;
  if (cm.num_filters < 1 || cm.neighborhood < 1 || cm.stride < 1 ||
      cm.grid_height != grid_extent(cm.image_height, cm.stride) ||
      cm.grid_width != grid_extent(cm.image_width, cm.stride))
    fail(ErrorCode::Format, "'" + path + "': inconsistent covariance map header");
  const auto n = static_cast<Eigen::Index>(cm.num_filters);
  const std::size_t locs = static_cast<std::size_t>(cm.grid_height * cm.grid_width);
  const std::size_t per = cm.num_filters * (cm.num_filters + 1) / 2;
  if (in.remaining() != locs * per * 8)
    fail(ErrorCode::Format, "'" + path + "': byte length does not match header (truncated or trailing data)");
  cm.matrices.reserve(locs);
  for (std::size_t l = 0; l < locs; ++l) {
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i; j < n; ++j)
        m(i, j) = m(j, i) = in.f64();
    cm.matrices.push_back(std::move(m));
  }
  return cm;
}

} // namespace lcov
