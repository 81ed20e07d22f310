// Fletcher's augmented Lagrangian
//
//   g(x) = f(x) - <h(x), lambda(x)> + beta ||h(x)||^2,
//   lambda(x) = (Dh(x)^T)^+ grad f(x),
//
// its gradient, a finite-difference Hessian, the Jacobian of the multiplier
// map and the pointwise penalty thresholds beta_1, beta_2, beta_3.

#pragma once

#include "fletcher/fdcheck.hpp"
#include "fletcher/numerics.hpp"
#include "fletcher/problem.hpp"

namespace fletcher {

struct Multipliers {
  Vector lambda;
  Matrix jac;
  SvdResult jac_svd;
};

/// Cached evaluation of the penalty at one point.
struct PenaltyEval {
  Vector x;
  double beta = 0.0;
  Vector h_val;
  Matrix jac;
  SvdResult jac_svd;
  Vector grad_f;
  Vector lambda_val;
  Matrix dlambda;  // m x n
  double f_val = 0.0;
  double g_val = 0.0;
  Vector riem_grad;  // grad f - Dh^T lambda
  Vector grad_g;
};

struct BetaThresholds {
  double beta1 = 0.0;
  double beta2 = 0.0;
  double beta3 = 0.0;
  double b_max = 0.0;
  double c_lambda = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
};

enum class DlambdaMethod { analytic, finite_difference };

/// Throws RankDeficiency when sigma_min(Dh(x)) <= rank_tol * sigma_1.
Multipliers multipliers(const Problem& p, const Vector& x);

/// D lambda(x) as an m x n matrix. The analytic route differentiates the normal
/// equations Dh Dh^T lambda = Dh grad f and needs only second derivatives.
Matrix dlambda_jacobian(const Problem& p, const Vector& x,
                        DlambdaMethod method = DlambdaMethod::analytic);

/// Full evaluation (value and gradient) at x.
PenaltyEval evaluate_penalty(const Problem& p, const Vector& x, double beta);
/// Value only; cheaper than evaluate_penalty since D lambda is not needed.
double penalty_value(const Problem& p, const Vector& x, double beta);
Vector penalty_grad(const Problem& p, const Vector& x, double beta);

/// Symmetrized central-difference Jacobian of penalty_grad with
/// delta = fd_step * (1 + ||x||).
Matrix penalty_hess(const Problem& p, const Vector& x, double beta,
                    double fd_step = kFirstDerivativeStep);

BetaThresholds beta_thresholds(const Problem& p, const Vector& x);
BetaThresholds beta_thresholds(const PenaltyEval& e);

/// Bounds that hold at x whenever ||grad g(x)|| <= eps1 and
/// beta > max(beta_2(x), beta_3(x)).
struct FirstOrderBounds {
  bool applicable = false;    // beta > max(beta2, beta3) and ||grad g|| <= eps1
  double h_norm = 0.0;
  double h_bound = 0.0;       // eps1 / (beta sigma_min)
  double riem_grad_norm = 0.0;
  double riem_grad_bound = 0.0;  // (1 + C_lambda / (beta sigma_min)) eps1
  bool holds = false;
};
FirstOrderBounds first_order_bounds(const Problem& p, const Vector& x, double beta, double eps1);

}  // namespace fletcher
