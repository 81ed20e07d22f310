#include "fletcher/numerics.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace fletcher {

Index SvdResult::rank(double rank_tol) const {
  const double cutoff = rank_tol * largest();
  Index r = 0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    if (singular_values(i) > cutoff) ++r;
  }
  return r;
}

double default_rank_tol(const Matrix& a) {
  return 1e-12 * static_cast<double>(std::max(a.rows(), a.cols()));
}

bool all_finite(const Matrix& a) { return a.allFinite(); }

SvdResult svd(const Matrix& a) {
  if (!a.allFinite()) {
    throw NumericalFailure("svd: input contains non-finite entries");
  }
  SvdResult out;
  if (a.size() == 0) {
    out.singular_values.resize(0);
    out.left_vectors = Matrix::Identity(a.rows(), a.rows());
    out.right_vectors = Matrix::Identity(a.cols(), a.cols());
    return out;
  }
  // One-sided Jacobi is unconditionally convergent; the finiteness check below
  // catches the only failure mode (overflow during rotations).
  Eigen::JacobiSVD<Matrix> solver(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.singular_values = solver.singularValues();
  out.left_vectors = solver.matrixU();
  out.right_vectors = solver.matrixV();
  if (!out.singular_values.allFinite() || !out.left_vectors.allFinite() ||
      !out.right_vectors.allFinite()) {
    throw NumericalFailure("svd: factorization produced non-finite values");
  }
  return out;
}

Vector pinv_apply(const SvdResult& d, const Vector& b, double rank_tol) {
  const Index rows = d.left_vectors.rows();
  const Index cols = d.right_vectors.rows();
  if (b.size() != rows) {
    throw std::invalid_argument("pinv_apply: size mismatch");
  }
  const double cutoff = rank_tol * d.largest();
  Vector out = Vector::Zero(cols);
  for (Index i = 0; i < d.singular_values.size(); ++i) {
    const double s = d.singular_values(i);
    if (s <= cutoff || s == 0.0) continue;
    out += (d.left_vectors.col(i).dot(b) / s) * d.right_vectors.col(i);
  }
  return out;
}

Vector pinv_apply(const Matrix& a, const Vector& b, double rank_tol) {
  return pinv_apply(svd(a), b, rank_tol);
}

EigenPair sym_eig_min(const Matrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0) {
    throw std::invalid_argument("sym_eig_min: matrix must be square and nonempty");
  }
  if (!h.allFinite()) {
    throw NumericalFailure("sym_eig_min: input contains non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetrize(h));
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("sym_eig_min: eigensolver did not converge");
  }
  // Eigenvalues come back sorted ascending.
  EigenPair out{solver.eigenvalues()(0), solver.eigenvectors().col(0)};
  out.vector.normalize();
  return out;
}

Matrix kernel_basis(const SvdResult& d, Index cols, double rank_tol) {
  const Index r = d.rank(rank_tol);
  return d.right_vectors.rightCols(cols - r);
}

Matrix kernel_basis(const Matrix& a, double rank_tol) {
  if (a.rows() > a.cols()) {
    throw std::invalid_argument("kernel_basis: expected rows <= cols");
  }
  return kernel_basis(svd(a), a.cols(), rank_tol);
}

}  // namespace fletcher
