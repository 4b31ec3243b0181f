#include "synthesis.hpp"

#include "error.hpp"
#include "parallel.hpp"

#include <cmath>
#include <random>

namespace lcov {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

} // namespace

SynthObjective synth_objective(const Image &x, const FilterBank &bank, const CovarianceMap &target,
                               bool double_count_offdiagonal) {
  validate(x, "synth_objective");
  require(x.height() == target.image_height && x.width() == target.image_width,
          "synth_objective: image size does not match the target map");
  require(bank.num_filters() == target.num_filters, "synth_objective: filter count does not match the target map");

  const ResponseMap y = apply(bank, x);
  const CovarianceMap cur = extract(y, target.neighborhood, target.stride, target.window);
  require(cur.locations() == target.locations(), "synth_objective: grid mismatch");

  const auto n = static_cast<Eigen::Index>(bank.num_filters());
  const Eigen::Index p = target.neighborhood, h = x.height(), w = x.width();
  const Grid win = target.window.make(p).taps;
  const double off_weight = double_count_offdiagonal ? 2.0 : 1.0;

  struct Local {
    double value = 0.0;
    Matrix grad; // n x p*p
  };
  std::vector<Local> locals(cur.locations());
  parallel_for(locals.size(), [&](std::size_t idx) {
    const Matrix diff = cur.matrices[idx] - target.matrices[idx];
    // dE/dC as a symmetric weight matrix; the diagonal picks up the factor 2
    // from d(y_i^2).
    Matrix m = Matrix::Zero(n, n);
    double value = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      value += std::abs(diff(i, i));
      m(i, i) = 2.0 * sign(diff(i, i));
      if (target.diagonal_only)
        continue;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        value += off_weight * std::abs(diff(i, j));
        m(i, j) = m(j, i) = off_weight * sign(diff(i, j));
      }
    }
    const Eigen::Index a = static_cast<Eigen::Index>(idx) / cur.grid_width;
    const Eigen::Index b = static_cast<Eigen::Index>(idx) % cur.grid_width;
    Matrix yp(n, p * p);
    for (Eigen::Index u = 0; u < p; ++u)
      for (Eigen::Index v = 0; v < p; ++v) {
        const Eigen::Index rr = (a * target.stride + u) % h, cc = (b * target.stride + v) % w;
        for (Eigen::Index i = 0; i < n; ++i)
          yp(i, u * p + v) = win(u, v) * y.channels[static_cast<std::size_t>(i)](rr, cc);
      }
    locals[idx] = {value, m * yp};
  });

  ResponseMap g = ResponseMap::zeros(bank.num_filters(), h, w);
  SynthObjective out;
  for (std::size_t idx = 0; idx < locals.size(); ++idx) {
    out.value += locals[idx].value;
    const Eigen::Index a = static_cast<Eigen::Index>(idx) / cur.grid_width;
    const Eigen::Index b = static_cast<Eigen::Index>(idx) % cur.grid_width;
    const Matrix &lg = locals[idx].grad;
    for (Eigen::Index u = 0; u < p; ++u)
      for (Eigen::Index v = 0; v < p; ++v) {
        const Eigen::Index rr = (a * target.stride + u) % h, cc = (b * target.stride + v) % w;
        for (Eigen::Index i = 0; i < n; ++i)
          g.channels[static_cast<std::size_t>(i)](rr, cc) += lg(i, u * p + v);
      }
  }
  out.gradient = reconstruct(bank, g);
  return out;
}

double harmonic_step(double step0, std::size_t k) {
  require(k >= 1, "harmonic_step: steps are numbered from 1");
  return step0 / static_cast<double>(k);
}

SynthResult synthesize(const CovarianceMap &target, const FilterBank &bank, const SynthConfig &config,
                       const Image *init, const Image *reference) {
  require(config.step0 > 0.0, "synthesize: step size must be positive");
  require(config.log_every >= 1, "synthesize: log cadence must be >= 1");

  Image x;
  if (init) {
    require(init->height() == target.image_height && init->width() == target.image_width,
            "synthesize: initial image does not match the target map");
    x = *init;
  } else {
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    x = Image::zeros(target.image_height, target.image_width);
    for (Eigen::Index i = 0; i < x.pixels.size(); ++i)
      x.pixels.data()[i] = noise(rng);
    if (config.nonnegative)
      x.pixels = x.pixels.abs();
  }
  if (config.nonnegative)
    x.pixels = x.pixels.max(0.0);

  SynthResult res;
  SynthObjective obj = synth_objective(x, bank, target, config.double_count_offdiagonal);
  res.trace.push_back({0, obj.value, 0.0});
  res.best_objective = obj.value;
  res.image = x;

  std::size_t k = 0;
  while (k < config.max_steps && obj.value > config.tolerance) {
    ++k;
    const double eta = harmonic_step(config.step0, k);
    x.pixels -= eta * obj.gradient.pixels;
    if (config.nonnegative)
      x.pixels = x.pixels.max(0.0);
    obj = synth_objective(x, bank, target, config.double_count_offdiagonal);
    if (!std::isfinite(obj.value))
      fail(ErrorCode::Numeric, "synthesize: objective diverged at step " + std::to_string(k) +
                                   " (step size " + std::to_string(eta) + ")");
    if (obj.value < res.best_objective) {
      res.best_objective = obj.value;
      res.image = x;
    }
    if (k % config.log_every == 0 || k == config.max_steps || obj.value <= config.tolerance)
      res.trace.push_back({k, obj.value, eta});
  }
  res.steps = k;
  res.image.provenance = "synthesized";
  if (reference)
    res.relative_error = signless_relative_error(res.image, *reference);
  return res;
}

double relative_error(const Image &x, const Image &ref) {
  require(x.height() == ref.height() && x.width() == ref.width(), "relative_error: size mismatch");
  const double den = std::sqrt(ref.pixels.square().sum());
  require(den > 0.0, "relative_error: reference has zero norm");
  return std::sqrt((x.pixels - ref.pixels).square().sum()) / den;
}

double signless_relative_error(const Image &x, const Image &ref) {
  return std::min(relative_error(x, ref), relative_error(Image(-x.pixels), ref));
}

Image noise_baseline(const Image &ref, double target_rel_error, std::uint64_t seed) {
  require(target_rel_error >= 0.0, "noise_baseline: target error must be >= 0");
  validate(ref, "noise_baseline");
  const double ref_norm = std::sqrt(ref.pixels.square().sum());
  require(ref_norm > 0.0, "noise_baseline: reference has zero norm");
  if (target_rel_error == 0.0)
    return ref;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Grid n(ref.height(), ref.width());
  for (Eigen::Index i = 0; i < n.size(); ++i)
    n.data()[i] = noise(rng);
  const double scale = target_rel_error * ref_norm / std::sqrt(n.square().sum());
  return Image(ref.pixels + scale * n, ref.provenance + "|noise-baseline");
}

} // namespace lcov
