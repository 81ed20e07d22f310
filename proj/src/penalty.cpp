#include "fletcher/penalty.hpp"

#include <algorithm>
#include <sstream>

#include "fletcher/criticality.hpp"

namespace fletcher {

namespace {

std::string describe_point(const Vector& x) {
  std::ostringstream os;
  os.precision(6);
  os << "[";
  for (Index i = 0; i < std::min<Index>(x.size(), 6); ++i) os << (i ? ", " : "") << x(i);
  if (x.size() > 6) os << ", ...";
  os << "]";
  return os.str();
}

// Solves (Dh Dh^T) y = b using the cached SVD of Dh.
Matrix normal_solve(const SvdResult& d, const Matrix& b) {
  const Matrix& u = d.left_vectors;
  const Vector inv_sq = d.singular_values.array().square().inverse();
  return u * (inv_sq.asDiagonal() * (u.transpose() * b));
}

Matrix dlambda_analytic(const Problem& p, const Vector& x, const Multipliers& mult,
                        const Vector& riem_grad) {
  const Index m = p.dim_h();
  // d/dv of Dh Dh^T lambda = Dh grad f gives
  //   A (D lambda[v]) = Jdot (grad f - Dh^T lambda) + Dh (Hess f - sum lambda_i Hess h_i) v
  // with A = Dh Dh^T and Jdot row i = v^T Hess h_i.
  Matrix rhs = mult.jac * lagrangian_hessian(p, x, mult.lambda);
  for (Index i = 0; i < m; ++i) {
    rhs.row(i) += (p.hess_h(x, i) * riem_grad).transpose();
  }
  return normal_solve(mult.jac_svd, rhs);
}

}  // namespace

Multipliers multipliers(const Problem& p, const Vector& x) {
  Multipliers out;
  out.jac = p.jac_h(x);
  out.jac_svd = svd(out.jac);
  const double tol = default_rank_tol(out.jac);
  if (out.jac_svd.largest() == 0.0 || out.jac_svd.smallest() <= tol * out.jac_svd.largest()) {
    throw RankDeficiency("Dh(x) is rank deficient at x = " + describe_point(x) +
                         " (sigma_min = " + std::to_string(out.jac_svd.smallest()) + ")");
  }
  // lambda = (Dh^T)^+ grad f; the SVD of Dh^T swaps the roles of U and V.
  SvdResult transposed{out.jac_svd.singular_values, out.jac_svd.right_vectors,
                       out.jac_svd.left_vectors};
  out.lambda = pinv_apply(transposed, p.grad_f(x), tol);
  return out;
}

Matrix dlambda_jacobian(const Problem& p, const Vector& x, DlambdaMethod method) {
  if (method == DlambdaMethod::finite_difference) {
    multipliers(p, x);  // rank check at the center
    auto lam = [&p](const Vector& y) -> Vector { return multipliers(p, y).lambda; };
    return fd_jacobian(lam, x, kFirstDerivativeStep);
  }
  const Multipliers mult = multipliers(p, x);
  const Vector riem_grad = p.grad_f(x) - mult.jac.transpose() * mult.lambda;
  return dlambda_analytic(p, x, mult, riem_grad);
}

PenaltyEval evaluate_penalty(const Problem& p, const Vector& x, double beta) {
  PenaltyEval e;
  e.x = x;
  e.beta = beta;
  Multipliers mult = multipliers(p, x);
  e.jac = std::move(mult.jac);
  e.jac_svd = std::move(mult.jac_svd);
  e.lambda_val = std::move(mult.lambda);
  e.h_val = p.h(x);
  e.grad_f = p.grad_f(x);
  e.f_val = p.f(x);
  e.g_val = e.f_val - e.h_val.dot(e.lambda_val) + beta * e.h_val.squaredNorm();
  e.riem_grad = e.grad_f - e.jac.transpose() * e.lambda_val;
  const Multipliers view{e.lambda_val, e.jac, e.jac_svd};
  e.dlambda = dlambda_analytic(p, x, view, e.riem_grad);
  e.grad_g = e.riem_grad + 2.0 * beta * (e.jac.transpose() * e.h_val) -
             e.dlambda.transpose() * e.h_val;
  return e;
}

double penalty_value(const Problem& p, const Vector& x, double beta) {
  const Vector lambda = multipliers(p, x).lambda;
  const Vector hv = p.h(x);
  return p.f(x) - hv.dot(lambda) + beta * hv.squaredNorm();
}

Vector penalty_grad(const Problem& p, const Vector& x, double beta) {
  return evaluate_penalty(p, x, beta).grad_g;
}

Matrix penalty_hess(const Problem& p, const Vector& x, double beta, double fd_step) {
  auto grad = [&p, beta](const Vector& y) -> Vector { return penalty_grad(p, y, beta); };
  return symmetrize(fd_jacobian(grad, x, fd_step));
}

BetaThresholds beta_thresholds(const PenaltyEval& e) {
  BetaThresholds b;
  b.sigma_max = e.jac_svd.largest();
  b.sigma_min = e.jac_svd.smallest();
  b.c_lambda = svd(e.dlambda).largest();
  b.beta1 = b.sigma_max * b.c_lambda / (2.0 * b.sigma_min * b.sigma_min);
  b.beta2 = b.c_lambda / b.sigma_min;
  b.beta3 = 1.0 / b.sigma_min;
  b.b_max = std::max({b.beta1, b.beta2, b.beta3});
  return b;
}

BetaThresholds beta_thresholds(const Problem& p, const Vector& x) {
  return beta_thresholds(evaluate_penalty(p, x, 0.0));
}

FirstOrderBounds first_order_bounds(const Problem& p, const Vector& x, double beta, double eps1) {
  const PenaltyEval e = evaluate_penalty(p, x, beta);
  const BetaThresholds b = beta_thresholds(e);
  FirstOrderBounds out;
  out.applicable = beta > std::max(b.beta2, b.beta3) && e.grad_g.norm() <= eps1;
  out.h_norm = e.h_val.norm();
  out.h_bound = eps1 / (beta * b.sigma_min);
  out.riem_grad_norm = e.riem_grad.norm();
  out.riem_grad_bound = (1.0 + b.c_lambda / (beta * b.sigma_min)) * eps1;
  out.holds = out.h_norm <= out.h_bound && out.riem_grad_norm <= out.riem_grad_bound;
  return out;
}

}  // namespace fletcher
