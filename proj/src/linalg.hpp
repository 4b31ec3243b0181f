#pragma once

#include <Eigen/Dense>

namespace lcov {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct SvdResult {
  Matrix left_vectors;    // rows x r, orthonormal columns
  Vector singular_values; // r = min(rows, cols), non-increasing, >= 0
  Matrix right_vectors;   // cols x r, orthonormal columns
};

struct EigResult {
  Vector eigenvalues; // non-increasing
  Matrix eigenvectors;
};

struct NuclearNormEval {
  double value = 0.0;
  Matrix subgradient;
};

/// Thin SVD. Throws InvalidInput on empty or non-finite input.
SvdResult svd(const Matrix &m);

/// Sum of singular values.
double nuclear_norm(const Matrix &m);

/// U_r V_r^T over the singular values strictly above `tol` (absolute).
Matrix nuclear_norm_subgradient(const Matrix &m, double tol);

/// Norm and subgradient from one decomposition. Singular values at or below
/// rel_tol * s_max are treated as zero; an all-zero matrix yields a zero
/// subgradient.
NuclearNormEval nuclear_norm_eval(const Matrix &m, double rel_tol = 1e-8);

/// Symmetric eigendecomposition, eigenvalues sorted descending. The input must
/// be square and symmetric to 1e-10 (relative to its largest entry).
EigResult eig_sym(const Matrix &m);

bool all_finite(const Matrix &m);

} // namespace lcov
