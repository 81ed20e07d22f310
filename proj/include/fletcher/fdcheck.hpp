// Central-difference oracles and the derivative checker for problems.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "fletcher/numerics.hpp"

namespace fletcher {

class Problem;

// eps^(1/3) and eps^(1/4): truncation/roundoff balance for central differences
// of first and second derivatives respectively.
inline const double kFirstDerivativeStep = std::cbrt(std::numeric_limits<double>::epsilon());
inline const double kSecondDerivativeStep = std::sqrt(std::sqrt(std::numeric_limits<double>::epsilon()));

inline constexpr double kFirstDerivativeTol = 1e-6;
inline constexpr double kSecondDerivativeTol = 1e-4;

using ScalarFunction = std::function<double(const Vector&)>;
using VectorFunction = std::function<Vector(const Vector&)>;

/// Central differences with delta = step * (1 + ||x||). Throws EvaluationError
/// if any stencil value is non-finite.
Vector fd_grad(const ScalarFunction& fun, const Vector& x, double step);
/// Column j is the central difference along e_j.
Matrix fd_jacobian(const VectorFunction& fun, const Vector& x, double step);

/// ||a - b|| / (1 + max(||a||, ||b||)), so zero targets reduce to absolute error.
double relative_error(const Matrix& a, const Matrix& b);

struct DerivativeReport {
  std::string target;
  double max_rel_err = 0.0;
  std::uint64_t worst_point_seed = 0;
  double step_used = 0.0;
  double tolerance = 0.0;
  bool pass = true;
};

/// Compares every analytic derivative of the problem (and of the penalty and
/// multiplier maps) against central differences at init_point(seed) and at a
/// perturbed point of the region drawn from the same seed. Failures are
/// reported, not thrown.
/// step_scale multiplies both default difference steps.
std::vector<DerivativeReport> check_problem(const Problem& p, const std::vector<std::uint64_t>& seeds,
                                            double beta = 1.0, double step_scale = 1.0);

}  // namespace fletcher
