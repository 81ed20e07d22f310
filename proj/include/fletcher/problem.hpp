// Problem interface: a smooth cost f and smooth equality constraints h with
// first and second derivatives, plus the constants describing the region
// C = {x : ||h(x)|| <= R} on which sigma_min(Dh(x)) >= sigma_lb.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fletcher/numerics.hpp"

namespace fletcher {

/// Thrown when a user evaluator returns NaN/Inf or a wrongly sized result.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RegionParams {
  double radius = 0.5;    // R
  double sigma_lb = 1.0;  // lower bound on sigma_min(Dh) over C
  double c_h = 1.0;       // Taylor remainder constant of h
};

struct CostFunction {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;
};

struct ConstraintFunction {
  Index dim = 0;
  std::function<Vector(const Vector&)> value;
  std::function<Matrix(const Vector&)> jacobian;
  // Hessian of the i-th component. May be left empty, in which case it is
  // approximated by central differences of the i-th Jacobian row.
  std::function<Matrix(const Vector&, Index)> hessian;
};

using InitFunction = std::function<Vector(std::uint64_t seed)>;

class Problem {
 public:
  Problem(std::string name, Index dim_x, CostFunction cost, ConstraintFunction constraint,
          RegionParams region, InitFunction init);

  const std::string& name() const { return name_; }
  Index dim_x() const { return dim_x_; }
  Index dim_h() const { return constraint_.dim; }
  const RegionParams& region() const { return region_; }
  const CostFunction& cost() const { return cost_; }
  const ConstraintFunction& constraint() const { return constraint_; }
  bool has_constraint_hessian() const { return static_cast<bool>(constraint_.hessian); }

  // Evaluators validate shape and finiteness of what the callables return.
  double f(const Vector& x) const;
  Vector grad_f(const Vector& x) const;
  Matrix hess_f(const Vector& x) const;
  Vector h(const Vector& x) const;
  Matrix jac_h(const Vector& x) const;
  Matrix hess_h(const Vector& x, Index i) const;
  Vector init_point(std::uint64_t seed) const;

  /// Same problem with the cost replaced.
  Problem with_cost(CostFunction cost, std::string name) const;

 private:
  void check_x(const Vector& x) const;

  std::string name_;
  Index dim_x_;
  CostFunction cost_;
  ConstraintFunction constraint_;
  RegionParams region_;
  InitFunction init_;
};

/// True iff ||h(x)|| <= R (inclusive).
bool in_region(const Problem& p, const Vector& x);

// Cost builders with closed-form derivatives.
CostFunction linear_cost(Vector c);
/// f(x) = 1/2 <x, A x> + <c, x>, A symmetric.
CostFunction quadratic_cost(Matrix a, Vector c);
CostFunction zero_cost(Index n);

/// Unit sphere in R^n with f(x) = <x, w>; h(x) = ||x||^2 - 1.
Problem make_sphere(Index n, const Vector& w, double radius = 0.5);
/// Unit sphere with f(x) = 1/2 <x, A x>.
Problem make_rayleigh_sphere(const Matrix& a, double radius = 0.5);
/// Stiefel manifold St(n, p) with x = vec(X) (column-major) and h(X) = X^T X - I
/// written in an orthonormal basis of Sym(p).
Problem make_stiefel(Index n, Index p, double radius, CostFunction cost);
/// Cartesian product of the constraint blocks with a single cost on the product.
Problem make_product(const std::vector<Problem>& blocks, CostFunction cost);

/// Orthonormal basis of Sym(p): diagonal units first, then (E_ij + E_ji)/sqrt(2)
/// for i < j in row-major order.
std::vector<Matrix> sym_basis(Index p);

/// A point of C obtained by perturbing init_point(seed) with Gaussian noise,
/// shrunk until ||h|| <= R. Used for sampling the region in tests and checks.
Vector sample_region_point(const Problem& p, std::uint64_t seed);

struct BuiltinParams {
  Index n = 10;
  Index p = 2;
  double radius = 0.5;
  std::uint64_t seed = 0;
  std::optional<Matrix> matrix;  // rayleigh: overrides diag(1..n)
};

/// Built-in problems by id: "sphere", "rayleigh", "stiefel",
/// "product:<block>,<block>,..." where each block is "sphere<n>" or
/// "stiefel<n>x<p>".
Problem make_builtin(const std::string& id, const BuiltinParams& params);
std::vector<std::string> builtin_ids();

}  // namespace fletcher
