// Dense linear-algebra primitives used throughout the library.
//
// All routines are pure functions of their inputs. Singular values are
// returned in nonincreasing order; rank decisions use a tolerance relative to
// the largest singular value.

#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fletcher {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Thrown when a factorization fails to converge or produces non-finite data.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when Dh(x) is rank deficient, i.e. x lies outside the set where
/// the least-squares multipliers are well defined.
class RankDeficiency : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SvdResult {
  Vector singular_values;  // nonincreasing
  Matrix left_vectors;     // rows x rows
  Matrix right_vectors;    // cols x cols

  double largest() const { return singular_values.size() ? singular_values(0) : 0.0; }
  // Smallest of the min(rows, cols) singular values.
  double smallest() const {
    return singular_values.size() ? singular_values(singular_values.size() - 1) : 0.0;
  }
  // Number of singular values strictly above rank_tol * sigma_1.
  Index rank(double rank_tol) const;
};

struct EigenPair {
  double value;
  Vector vector;
};

/// rank_tol default: 1e-12 * max(rows, cols).
double default_rank_tol(const Matrix& a);

bool all_finite(const Matrix& a);

/// Full SVD with singular values sorted descending.
SvdResult svd(const Matrix& a);

/// A^+ b with singular values sigma_i <= rank_tol * sigma_1 truncated.
Vector pinv_apply(const Matrix& a, const Vector& b, double rank_tol);
Vector pinv_apply(const SvdResult& decomposition, const Vector& b, double rank_tol);

/// Smallest eigenpair of (H + H^T)/2. The eigenvector has unit norm.
EigenPair sym_eig_min(const Matrix& h);

/// Orthonormal basis of the numerical kernel of an m x n matrix, m <= n.
Matrix kernel_basis(const Matrix& a, double rank_tol);
Matrix kernel_basis(const SvdResult& decomposition, Index cols, double rank_tol);

inline Matrix symmetrize(const Matrix& h) { return 0.5 * (h + h.transpose()); }

}  // namespace fletcher
