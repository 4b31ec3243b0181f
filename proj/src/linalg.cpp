#include "linalg.hpp"

#include "error.hpp"

#include <algorithm>
#include <cmath>

namespace lcov {

bool all_finite(const Matrix &m) { return m.allFinite(); }

SvdResult svd(const Matrix &m) {
  require(m.rows() >= 1 && m.cols() >= 1, "svd: empty matrix");
  require(all_finite(m), "svd: non-finite entries");
  // Jacobi with column-pivoted QR preconditioning: wide/tall inputs are first
  // reduced to a min(rows, cols) square factor, so patch matrices stay cheap
  // without squaring the condition number through a Gram matrix.
  Eigen::JacobiSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {solver.matrixU(), solver.singularValues(), solver.matrixV()};
}

double nuclear_norm(const Matrix &m) { return svd(m).singular_values.sum(); }

namespace {

Matrix truncated_polar(const SvdResult &d, double tol, Eigen::Index rows, Eigen::Index cols) {
  Eigen::Index active = 0;
  while (active < d.singular_values.size() && d.singular_values[active] > tol)
    ++active;
  if (active == 0)
    return Matrix::Zero(rows, cols);
  return d.left_vectors.leftCols(active) * d.right_vectors.leftCols(active).transpose();
}

} // namespace

Matrix nuclear_norm_subgradient(const Matrix &m, double tol) {
  require(tol > 0.0, "nuclear_norm_subgradient: tol must be positive");
  return truncated_polar(svd(m), tol, m.rows(), m.cols());
}

NuclearNormEval nuclear_norm_eval(const Matrix &m, double rel_tol) {
  const SvdResult d = svd(m);
  NuclearNormEval out;
  out.value = d.singular_values.sum();
  const double smax = d.singular_values.size() ? d.singular_values[0] : 0.0;
  if (smax <= 0.0) {
    out.subgradient = Matrix::Zero(m.rows(), m.cols());
    return out;
  }
  out.subgradient = truncated_polar(d, rel_tol * smax, m.rows(), m.cols());
  return out;
}

EigResult eig_sym(const Matrix &m) {
  require(m.rows() == m.cols() && m.rows() >= 1, "eig_sym: matrix must be square");
  require(all_finite(m), "eig_sym: non-finite entries");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, "eig_sym: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success)
    fail(ErrorCode::Numeric, "eig_sym: eigensolver did not converge");
  const Eigen::Index n = m.rows();
  EigResult out{Vector(n), Matrix(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.eigenvalues[k] = solver.eigenvalues()[n - 1 - k];
    out.eigenvectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return out;
}

} // namespace lcov
