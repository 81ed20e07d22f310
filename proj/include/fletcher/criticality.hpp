// Riemannian quantities on the layer M_x = {y : h(y) = h(x)} and the
// approximate criticality certificates built from them.
//
// A point x is an (eps0, eps1)-approximate first-order critical point when
// ||h(x)|| <= eps0 and ||grad_{M_x} f(x)|| <= eps1; it is additionally
// second-order critical when Hess_{M_x} f(x) >= -eps2 Id on ker Dh(x).

#pragma once

#include <limits>
#include <optional>

#include "fletcher/numerics.hpp"
#include "fletcher/problem.hpp"

namespace fletcher {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct LayeredQuantities {
  double h_norm = 0.0;
  Vector riem_grad;
  double riem_grad_norm = 0.0;
  Matrix tangent_basis;  // n x (n - m), orthonormal columns
  Matrix reduced_hess;   // Q^T (Hess f - sum lambda_i Hess h_i) Q
  double min_eig = 0.0;
  Vector min_eig_vec;    // tangent, unit norm
};

struct CriticalityTargets {
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = kInfinity;
};

struct CriticalityCertificate {
  double eps0_measured = 0.0;  // ||h||
  double eps1_measured = 0.0;  // ||grad_{M_x} f||
  double eps2_measured = 0.0;  // max(0, -lambda_min(Hess_{M_x} f))
  CriticalityTargets targets;
  bool focp_pass = false;
  bool socp_pass = false;
  // lambda_min(Hess_{M_x} f); absent when eps2 is infinite.
  std::optional<double> min_eig;
};

/// grad f(x) - Dh(x)^T lambda(x).
Vector layered_grad(const Problem& p, const Vector& x);

LayeredQuantities layered_hess(const Problem& p, const Vector& x);

/// Hess f(x) - sum_i lambda_i Hess h_i(x) for the given multipliers.
Matrix lagrangian_hessian(const Problem& p, const Vector& x, const Vector& lambda);

/// Smallest eigenpair of Q^T H Q, with the eigenvector lifted back by Q.
EigenPair tangent_min_eig(const Matrix& hess, const Matrix& basis);

CriticalityCertificate certify(const Problem& p, const Vector& x, const CriticalityTargets& targets);

struct LagrangianCheck {
  bool first_order = false;
  bool second_order = false;
};

/// Criticality in terms of the Lagrangian L(x, lambda) = f - <lambda, h> for
/// an arbitrary multiplier vector: ||h|| <= eps0 and ||grad_x L|| <= eps1,
/// and for the second flag additionally Q^T Hess_x L Q >= -eps2 I.
LagrangianCheck lagrangian_check(const Problem& p, const Vector& x, const Vector& lambda,
                                 const CriticalityTargets& targets);

}  // namespace fletcher
