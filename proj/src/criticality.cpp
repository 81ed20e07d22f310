#include "fletcher/criticality.hpp"

#include <algorithm>
#include <cmath>

#include "fletcher/penalty.hpp"

namespace fletcher {

Vector layered_grad(const Problem& p, const Vector& x) {
  const Multipliers mult = multipliers(p, x);
  return p.grad_f(x) - mult.jac.transpose() * mult.lambda;
}

Matrix lagrangian_hessian(const Problem& p, const Vector& x, const Vector& lambda) {
  Matrix hl = p.hess_f(x);
  for (Index i = 0; i < p.dim_h(); ++i) {
    if (lambda(i) != 0.0) hl -= lambda(i) * p.hess_h(x, i);
  }
  return hl;
}

EigenPair tangent_min_eig(const Matrix& hess, const Matrix& basis) {
  if (basis.cols() == 0) {
    return {kInfinity, Vector::Zero(hess.rows())};
  }
  const Matrix reduced = symmetrize(basis.transpose() * hess * basis);
  const EigenPair small = sym_eig_min(reduced);
  Vector lifted = basis * small.vector;
  lifted.normalize();
  return {small.value, lifted};
}

LayeredQuantities layered_hess(const Problem& p, const Vector& x) {
  const Multipliers mult = multipliers(p, x);
  LayeredQuantities q;
  q.h_norm = p.h(x).norm();
  q.riem_grad = p.grad_f(x) - mult.jac.transpose() * mult.lambda;
  q.riem_grad_norm = q.riem_grad.norm();
  q.tangent_basis = kernel_basis(mult.jac_svd, p.dim_x(), default_rank_tol(mult.jac));
  const Matrix hl = lagrangian_hessian(p, x, mult.lambda);
  q.reduced_hess = symmetrize(q.tangent_basis.transpose() * hl * q.tangent_basis);
  const EigenPair small = tangent_min_eig(hl, q.tangent_basis);
  q.min_eig = small.value;
  q.min_eig_vec = small.vector;
  return q;
}

CriticalityCertificate certify(const Problem& p, const Vector& x, const CriticalityTargets& targets) {
  CriticalityCertificate c;
  c.targets = targets;
  c.eps0_measured = p.h(x).norm();
  if (std::isinf(targets.eps2)) {
    c.eps1_measured = layered_grad(p, x).norm();
  } else {
    const LayeredQuantities q = layered_hess(p, x);
    c.eps1_measured = q.riem_grad_norm;
    c.min_eig = q.min_eig;
    c.eps2_measured = std::max(0.0, -q.min_eig);
  }
  c.focp_pass = c.eps0_measured <= targets.eps0 && c.eps1_measured <= targets.eps1;
  c.socp_pass = c.focp_pass && (!c.min_eig || *c.min_eig >= -targets.eps2);
  return c;
}

LagrangianCheck lagrangian_check(const Problem& p, const Vector& x, const Vector& lambda,
                                 const CriticalityTargets& targets) {
  if (lambda.size() != p.dim_h()) throw std::invalid_argument("lagrangian_check: lambda has wrong size");
  const Matrix jac = p.jac_h(x);
  LagrangianCheck out;
  out.first_order = p.h(x).norm() <= targets.eps0 &&
                    (p.grad_f(x) - jac.transpose() * lambda).norm() <= targets.eps1;
  if (!out.first_order) return out;
  if (std::isinf(targets.eps2)) {
    out.second_order = true;
    return out;
  }
  const Matrix basis = kernel_basis(jac, default_rank_tol(jac));
  const EigenPair small = tangent_min_eig(lagrangian_hessian(p, x, lambda), basis);
  out.second_order = small.value >= -targets.eps2;
  return out;
}

}  // namespace fletcher
