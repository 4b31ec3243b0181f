#include "io.hpp"

#include "banks.hpp"
#include "error.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

using namespace lcov;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / "lcov_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path &p, const std::string &bytes) {
  std::ofstream out(p, std::ios::binary);
  out << bytes;
}

} // namespace

TEST_CASE("bank files round-trip bit-exactly") {
  const FilterBank bank = random_bank(3, 7, 2.5, 11);
  const auto p = temp_path("bank.bin");
  write_bank(p.string(), bank);
  CHECK(fs::file_size(p) == kBankHeaderBytes + 3 * 49 * 8);
  const FilterBank back = read_bank(p.string());
  REQUIRE(back.num_filters() == 3);
  CHECK(back.blur_sigma() == 2.5);
  for (std::size_t i = 0; i < 3; ++i)
    CHECK((back.kernel(i).taps == bank.kernel(i).taps).all());
  const auto again = temp_path("bank2.bin");
  write_bank(again.string(), back);
  CHECK(slurp(p) == slurp(again));
}

TEST_CASE("corrupt bank files are rejected") {
  const auto p = temp_path("bank_bad.bin");
  write_bank(p.string(), random_bank(2, 5, 3.0, 1));
  std::string bytes = slurp(p);
  spit(p, bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_bank(p.string()), Error);
  bytes[0] = 'X';
  spit(p, bytes);
  CHECK_THROWS_AS(read_bank(p.string()), Error);
  CHECK_THROWS_AS(read_bank(temp_path("missing.bin").string()), Error);
}

TEST_CASE("covariance map files round-trip bit-exactly") {
  std::mt19937_64 rng(3);
  ResponseMap r;
  for (int i = 0; i < 4; ++i)
    r.channels.push_back(oracle::random_grid(rng, 20, 24));
  for (bool diag : {false, true}) {
    CovarianceMap cm = extract(r, 8, 2, {WindowKind::Boxcar, 0.0});
    if (diag)
      cm = restrict_to_variances(cm);
    const auto p = temp_path(diag ? "var.map" : "cov.map");
    write_covmap(p.string(), cm);
    CHECK(fs::file_size(p) == kCovMapHeaderBytes + cm.locations() * 10 * 8);
    const CovarianceMap back = read_covmap(p.string());
    CHECK(back.image_height == 20);
    CHECK(back.image_width == 24);
    CHECK(back.grid_height == cm.grid_height);
    CHECK(back.grid_width == cm.grid_width);
    CHECK(back.num_filters == 4);
    CHECK(back.neighborhood == 8);
    CHECK(back.stride == 2);
    CHECK(back.window == cm.window);
    CHECK(back.diagonal_only == diag);
    for (std::size_t i = 0; i < cm.locations(); ++i)
      CHECK(back.matrices[i] == cm.matrices[i]);
    const auto again = temp_path("again.map");
    write_covmap(again.string(), back);
    CHECK(slurp(p) == slurp(again));
  }
}

TEST_CASE("truncated covariance maps are rejected") {
  std::mt19937_64 rng(4);
  ResponseMap r;
  r.channels.push_back(oracle::random_grid(rng, 8, 8));
  const auto p = temp_path("short.map");
  write_covmap(p.string(), extract(r, 4, 2, {}));
  const std::string bytes = slurp(p);
  spit(p, bytes.substr(0, bytes.size() - 8));
  CHECK_THROWS_AS(read_covmap(p.string()), Error);
  spit(p, bytes + "x");
  CHECK_THROWS_AS(read_covmap(p.string()), Error);
}

TEST_CASE("PGM round trip for 8 and 16 bit, binary and ASCII") {
  Grid g(3, 4);
  g << 0, 1, 2, 3, 100, 200, 255, 7, 9, 8, 6, 5;
  for (int maxval : {255, 65535})
    for (bool ascii : {false, true}) {
      const auto p = temp_path("img.pgm");
      write_pgm(p.string(), Image(g), maxval, ascii);
      const Image back = load_image(p.string());
      CHECK((back.pixels == g).all());
    }
  const auto p = temp_path("clamp.pgm");
  Grid h(1, 3);
  h << -4.0, 2.6, 300.0;
  write_pgm(p.string(), Image(h), 255);
  const Image back = load_image(p.string());
  CHECK(back(0, 0) == 0.0);
  CHECK(back(0, 1) == 3.0);
  CHECK(back(0, 2) == 255.0);
}

TEST_CASE("PGM header comments and malformed files") {
  const auto p = temp_path("hand.pgm");
  spit(p, "P2\n# comment\n2 2\n# another\n10\n1 2\n3 10\n");
  const Image img = load_image(p.string());
  CHECK(img.height() == 2);
  CHECK(img(1, 1) == 10.0);
  spit(p, "P2\n2 2\n10\n1 2 3\n");
  CHECK_THROWS_AS(load_image(p.string()), Error);
  spit(p, "P6\n1 1\n255\nabc");
  CHECK_THROWS_AS(load_image(p.string()), Error);
}

TEST_CASE("rescaled PGM records an affine map back to the values") {
  std::mt19937_64 rng(2);
  const Image img(oracle::random_grid(rng, 6, 5));
  const auto p = temp_path("rescaled.pgm");
  const AffineMap m = write_pgm_rescaled(p.string(), img);
  const Image codes = load_image(p.string());
  CHECK(codes.pixels.minCoeff() == 0.0);
  CHECK(codes.pixels.maxCoeff() == 65535.0);
  const Grid values = m.offset + m.scale * codes.pixels;
  CHECK((values - img.pixels).abs().maxCoeff() <= 0.5 * m.scale + 1e-12);
  const std::string side = slurp(p.string() + ".affine");
  CHECK(side.find("offset=") != std::string::npos);
  CHECK(side.find("scale=") != std::string::npos);
}

TEST_CASE("iml files are 1536x1024 little-endian 16 bit") {
  const auto p = temp_path("img.iml");
  std::string bytes(static_cast<std::size_t>(kImlWidth * kImlHeight * 2), '\0');
  bytes[0] = 0x34;
  bytes[1] = 0x12;
  const std::size_t last = bytes.size() - 2;
  bytes[last] = 0x01;
  spit(p, bytes);
  const Image img = load_image(p.string());
  CHECK(img.height() == kImlHeight);
  CHECK(img.width() == kImlWidth);
  CHECK(img(0, 0) == 0x1234);
  CHECK(img(kImlHeight - 1, kImlWidth - 1) == 1.0);
  spit(p, bytes.substr(2));
  CHECK_THROWS_AS(load_image(p.string()), Error);
}

TEST_CASE("preprocessing modes") {
  Grid g(2, 2);
  g << 1, 2, 3, 6;
  const Image img(g);
  CHECK(preprocess(img, Preprocess::None).pixels.isApprox(g));
  CHECK(std::abs(preprocess(img, Preprocess::MeanSubtract).pixels.mean()) < 1e-12);
  const Image s = preprocess(img, Preprocess::Standardize);
  CHECK(std::abs(s.pixels.mean()) < 1e-12);
  CHECK(std::sqrt(s.pixels.square().mean()) == doctest::Approx(1.0));
  const Image l = preprocess(img, Preprocess::LogNormalize);
  CHECK(std::sqrt(l.pixels.square().mean()) == doctest::Approx(1.0));
  CHECK(l(1, 1) > l(0, 0));
  for (Preprocess p : {Preprocess::None, Preprocess::MeanSubtract, Preprocess::Standardize, Preprocess::LogNormalize})
    CHECK(parse_preprocess(preprocess_name(p)) == p);
  CHECK_THROWS_AS(parse_preprocess("bogus"), Error);
  CHECK((preprocess(Image(Grid::Constant(2, 2, 4.0)), Preprocess::Standardize).pixels == 0.0).all());
}

TEST_CASE("bundled test photographs load") {
  for (const char *name : {"camera", "astronaut", "coffee", "chelsea", "rocket", "coins", "moon"}) {
    const Image img = load_image(std::string(LCOV_TEST_DATA) + "/" + name + ".pgm");
    CHECK(img.height() >= 128);
    CHECK(img.pixels.maxCoeff() <= 255.0);
  }
}
