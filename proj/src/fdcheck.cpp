#include "fletcher/fdcheck.hpp"

#include <algorithm>

#include "fletcher/penalty.hpp"
#include "fletcher/problem.hpp"

namespace fletcher {

Vector fd_grad(const ScalarFunction& fun, const Vector& x, double step) {
  const double delta = step * (1.0 + x.norm());
  Vector out(x.size());
  Vector y = x;
  for (Index j = 0; j < x.size(); ++j) {
    y(j) = x(j) + delta;
    const double plus = fun(y);
    y(j) = x(j) - delta;
    const double minus = fun(y);
    y(j) = x(j);
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw EvaluationError("fd_grad: non-finite value on the stencil");
    }
    out(j) = (plus - minus) / (2.0 * delta);
  }
  return out;
}

Matrix fd_jacobian(const VectorFunction& fun, const Vector& x, double step) {
  const double delta = step * (1.0 + x.norm());
  Matrix out;
  Vector y = x;
  for (Index j = 0; j < x.size(); ++j) {
    y(j) = x(j) + delta;
    const Vector plus = fun(y);
    y(j) = x(j) - delta;
    const Vector minus = fun(y);
    y(j) = x(j);
    if (!plus.allFinite() || !minus.allFinite()) {
      throw EvaluationError("fd_jacobian: non-finite value on the stencil");
    }
    if (j == 0) out.resize(plus.size(), x.size());
    out.col(j) = (plus - minus) / (2.0 * delta);
  }
  return out;
}

double relative_error(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / (1.0 + std::max(a.norm(), b.norm()));
}

namespace {

struct Accumulator {
  DerivativeReport report;

  void add(double err, std::uint64_t seed) {
    if (!std::isfinite(err) || err > report.max_rel_err) {
      report.max_rel_err = std::isfinite(err) ? err : std::numeric_limits<double>::infinity();
      report.worst_point_seed = seed;
    }
  }
};

}  // namespace

std::vector<DerivativeReport> check_problem(const Problem& p, const std::vector<std::uint64_t>& seeds,
                                            double beta, double step_scale) {
  if (seeds.empty()) throw std::invalid_argument("check_problem: seeds must be nonempty");
  const double s1 = step_scale * kFirstDerivativeStep;
  const double s2 = step_scale * kSecondDerivativeStep;
  std::vector<Accumulator> acc(6);
  acc[0].report = {"grad_f", 0.0, seeds.front(), s1, kFirstDerivativeTol, true};
  acc[1].report = {"hess_f", 0.0, seeds.front(), s2, kSecondDerivativeTol, true};
  acc[2].report = {"jac_h", 0.0, seeds.front(), s1, kFirstDerivativeTol, true};
  acc[3].report = {"hess_h", 0.0, seeds.front(), s2, kSecondDerivativeTol, true};
  acc[4].report = {"penalty_grad", 0.0, seeds.front(), s1, kFirstDerivativeTol, true};
  acc[5].report = {"dlambda_jacobian", 0.0, seeds.front(), s1, kFirstDerivativeTol, true};

  auto run = [&](std::size_t slot, std::uint64_t seed, auto&& compute) {
    try {
      acc[slot].add(compute(), seed);
    } catch (const std::exception&) {
      acc[slot].add(std::numeric_limits<double>::infinity(), seed);
    }
  };

  for (const std::uint64_t seed : seeds) {
    for (const Vector& x : {p.init_point(seed), sample_region_point(p, seed)}) {
      run(0, seed, [&] {
        return relative_error(p.grad_f(x), fd_grad([&](const Vector& y) { return p.f(y); }, x, s1));
      });
      run(1, seed, [&] {
        return relative_error(p.hess_f(x),
                              fd_jacobian([&](const Vector& y) { return p.grad_f(y); }, x, s2));
      });
      run(2, seed, [&] {
        return relative_error(p.jac_h(x), fd_jacobian([&](const Vector& y) { return p.h(y); }, x, s1));
      });
      run(3, seed, [&] {
        double worst = 0.0;
        for (Index i = 0; i < p.dim_h(); ++i) {
          auto row = [&](const Vector& y) -> Vector { return p.jac_h(y).row(i).transpose(); };
          worst = std::max(worst, relative_error(p.hess_h(x, i), fd_jacobian(row, x, s2)));
        }
        return worst;
      });
      run(4, seed, [&] {
        auto g = [&](const Vector& y) { return penalty_value(p, y, beta); };
        return relative_error(penalty_grad(p, x, beta), fd_grad(g, x, s1));
      });
      run(5, seed, [&] {
        auto lam = [&](const Vector& y) -> Vector { return multipliers(p, y).lambda; };
        return relative_error(dlambda_jacobian(p, x), fd_jacobian(lam, x, s1));
      });
    }
  }

  std::vector<DerivativeReport> out;
  for (auto& a : acc) {
    a.report.pass = a.report.max_rel_err <= a.report.tolerance;
    out.push_back(a.report);
  }
  return out;
}

}  // namespace fletcher
