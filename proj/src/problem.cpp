#include "fletcher/problem.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <utility>

#include <Eigen/QR>

#include "fletcher/fdcheck.hpp"

namespace fletcher {

namespace {

void require_finite(const Matrix& a, const std::string& what) {
  if (!a.allFinite()) throw EvaluationError(what + " returned non-finite values");
}

}  // namespace

Problem::Problem(std::string name, Index dim_x, CostFunction cost, ConstraintFunction constraint,
                 RegionParams region, InitFunction init)
    : name_(std::move(name)),
      dim_x_(dim_x),
      cost_(std::move(cost)),
      constraint_(std::move(constraint)),
      region_(region),
      init_(std::move(init)) {
  if (dim_x_ <= 0 || constraint_.dim <= 0) {
    throw std::invalid_argument("problem '" + name_ + "': dimensions must be positive");
  }
  if (constraint_.dim >= dim_x_) {
    throw std::invalid_argument("problem '" + name_ + "': need m < n (got m=" +
                                std::to_string(constraint_.dim) + ", n=" + std::to_string(dim_x_) +
                                ")");
  }
  if (!(region_.radius > 0) || !(region_.sigma_lb > 0) || !(region_.c_h > 0)) {
    throw std::invalid_argument("problem '" + name_ + "': region constants must be positive");
  }
  if (!cost_.value || !cost_.gradient || !cost_.hessian || !constraint_.value ||
      !constraint_.jacobian || !init_) {
    throw std::invalid_argument("problem '" + name_ + "': missing evaluator");
  }
}

void Problem::check_x(const Vector& x) const {
  if (x.size() != dim_x_) {
    throw std::invalid_argument("problem '" + name_ + "': expected x of size " +
                                std::to_string(dim_x_) + ", got " + std::to_string(x.size()));
  }
}

double Problem::f(const Vector& x) const {
  check_x(x);
  const double v = cost_.value(x);
  if (!std::isfinite(v)) throw EvaluationError("f returned a non-finite value");
  return v;
}

Vector Problem::grad_f(const Vector& x) const {
  check_x(x);
  Vector g = cost_.gradient(x);
  if (g.size() != dim_x_) throw EvaluationError("grad_f has wrong size");
  require_finite(g, "grad_f");
  return g;
}

Matrix Problem::hess_f(const Vector& x) const {
  check_x(x);
  Matrix hm = cost_.hessian(x);
  if (hm.rows() != dim_x_ || hm.cols() != dim_x_) throw EvaluationError("hess_f has wrong shape");
  require_finite(hm, "hess_f");
  return hm;
}

Vector Problem::h(const Vector& x) const {
  check_x(x);
  Vector v = constraint_.value(x);
  if (v.size() != dim_h()) throw EvaluationError("h has wrong size");
  require_finite(v, "h");
  return v;
}

Matrix Problem::jac_h(const Vector& x) const {
  check_x(x);
  Matrix j = constraint_.jacobian(x);
  if (j.rows() != dim_h() || j.cols() != dim_x_) throw EvaluationError("jac_h has wrong shape");
  require_finite(j, "jac_h");
  return j;
}

Matrix Problem::hess_h(const Vector& x, Index i) const {
  check_x(x);
  if (i < 0 || i >= dim_h()) throw std::out_of_range("hess_h: component index out of range");
  Matrix hm;
  if (constraint_.hessian) {
    hm = constraint_.hessian(x, i);
  } else {
    auto row = [this, i](const Vector& y) -> Vector { return jac_h(y).row(i).transpose(); };
    hm = symmetrize(fd_jacobian(row, x, kFirstDerivativeStep));
  }
  if (hm.rows() != dim_x_ || hm.cols() != dim_x_) throw EvaluationError("hess_h has wrong shape");
  require_finite(hm, "hess_h");
  return hm;
}

Vector Problem::init_point(std::uint64_t seed) const {
  Vector x = init_(seed);
  check_x(x);
  require_finite(x, "init_point");
  return x;
}

Problem Problem::with_cost(CostFunction cost, std::string name) const {
  return Problem(std::move(name), dim_x_, std::move(cost), constraint_, region_, init_);
}

bool in_region(const Problem& p, const Vector& x) {
  return p.h(x).norm() <= p.region().radius;
}

CostFunction linear_cost(Vector c) {
  const Index n = c.size();
  return CostFunction{
      [c](const Vector& x) { return c.dot(x); },
      [c](const Vector&) -> Vector { return c; },
      [n](const Vector&) -> Matrix { return Matrix::Zero(n, n); },
  };
}

CostFunction quadratic_cost(Matrix a, Vector c) {
  if (a.rows() != a.cols() || a.rows() != c.size()) {
    throw std::invalid_argument("quadratic_cost: shape mismatch");
  }
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("quadratic_cost: matrix is not symmetric");
  }
  return CostFunction{
      [a, c](const Vector& x) { return 0.5 * x.dot(a * x) + c.dot(x); },
      [a, c](const Vector& x) -> Vector { return a * x + c; },
      [a](const Vector&) -> Matrix { return a; },
  };
}

CostFunction zero_cost(Index n) { return linear_cost(Vector::Zero(n)); }

namespace {

Vector gaussian_vector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = normal(rng);
  return v;
}

ConstraintFunction sphere_constraint(Index n) {
  return ConstraintFunction{
      1,
      [](const Vector& x) -> Vector { return Vector::Constant(1, x.squaredNorm() - 1.0); },
      [](const Vector& x) -> Matrix { return 2.0 * x.transpose(); },
      [n](const Vector&, Index) -> Matrix { return 2.0 * Matrix::Identity(n, n); },
  };
}

void check_radius(double radius) {
  if (!(radius > 0.0) || !(radius < 1.0)) {
    throw std::invalid_argument("region radius must satisfy 0 < R < 1");
  }
}

Problem sphere_with_cost(Index n, CostFunction cost, double radius, std::string name) {
  if (n < 2) throw std::invalid_argument("sphere: need n >= 2");
  check_radius(radius);
  RegionParams region{radius, 2.0 * std::sqrt(1.0 - radius), 1.0};
  auto init = [n](std::uint64_t seed) -> Vector {
    std::mt19937_64 rng(seed);
    Vector v = gaussian_vector(n, rng);
    return v / v.norm();
  };
  return Problem(std::move(name), n, std::move(cost), sphere_constraint(n), region, init);
}

}  // namespace

Problem make_sphere(Index n, const Vector& w, double radius) {
  if (w.size() != n) throw std::invalid_argument("sphere: w must have size n");
  if (std::abs(w.norm() - 1.0) > 1e-12) throw std::invalid_argument("sphere: w must be a unit vector");
  return sphere_with_cost(n, linear_cost(w), radius, "sphere");
}

Problem make_rayleigh_sphere(const Matrix& a, double radius) {
  if (a.rows() != a.cols()) throw std::invalid_argument("rayleigh: matrix must be square");
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("rayleigh: matrix must be symmetric");
  }
  return sphere_with_cost(a.rows(), quadratic_cost(a, Vector::Zero(a.rows())), radius, "rayleigh");
}

std::vector<Matrix> sym_basis(Index p) {
  std::vector<Matrix> basis;
  basis.reserve(static_cast<std::size_t>(p * (p + 1) / 2));
  for (Index i = 0; i < p; ++i) {
    Matrix b = Matrix::Zero(p, p);
    b(i, i) = 1.0;
    basis.push_back(std::move(b));
  }
  const double s = 1.0 / std::sqrt(2.0);
  for (Index i = 0; i < p; ++i) {
    for (Index j = i + 1; j < p; ++j) {
      Matrix b = Matrix::Zero(p, p);
      b(i, j) = s;
      b(j, i) = s;
      basis.push_back(std::move(b));
    }
  }
  return basis;
}

Problem make_stiefel(Index n, Index p, double radius, CostFunction cost) {
  if (p < 1 || p > n) throw std::invalid_argument("stiefel: need 1 <= p <= n");
  check_radius(radius);
  const auto basis = sym_basis(p);
  const Index m = static_cast<Index>(basis.size());
  const Index dim = n * p;

  ConstraintFunction constraint;
  constraint.dim = m;
  constraint.value = [n, p, basis](const Vector& x) -> Vector {
    const Eigen::Map<const Matrix> xm(x.data(), n, p);
    const Matrix s = xm.transpose() * xm - Matrix::Identity(p, p);
    Vector out(static_cast<Index>(basis.size()));
    for (std::size_t k = 0; k < basis.size(); ++k) out(static_cast<Index>(k)) = basis[k].cwiseProduct(s).sum();
    return out;
  };
  // Row k of Dh(X) is vec(2 X B_k) since <B_k, X^T U + U^T X> = <2 X B_k, U>.
  constraint.jacobian = [n, p, basis, dim](const Vector& x) -> Matrix {
    const Eigen::Map<const Matrix> xm(x.data(), n, p);
    Matrix j(static_cast<Index>(basis.size()), dim);
    for (std::size_t k = 0; k < basis.size(); ++k) {
      const Matrix row = 2.0 * xm * basis[k];
      j.row(static_cast<Index>(k)) = Eigen::Map<const Vector>(row.data(), dim).transpose();
    }
    return j;
  };
  // Hess h_k = 2 (B_k kron I_n) in column-major vectorization.
  constraint.hessian = [n, basis](const Vector&, Index k) -> Matrix {
    const Matrix& b = basis[static_cast<std::size_t>(k)];
    const Index p = b.rows();
    Matrix out = Matrix::Zero(n * p, n * p);
    for (Index r = 0; r < p; ++r) {
      for (Index c = 0; c < p; ++c) {
        if (b(r, c) != 0.0) out.block(r * n, c * n, n, n).diagonal().setConstant(2.0 * b(r, c));
      }
    }
    return out;
  };

  RegionParams region{radius, 2.0 * std::sqrt(1.0 - radius), 1.0};
  auto init = [n, p](std::uint64_t seed) -> Vector {
    std::mt19937_64 rng(seed);
    const Vector g = gaussian_vector(n * p, rng);
    const Matrix gm = Eigen::Map<const Matrix>(g.data(), n, p);
    Eigen::HouseholderQR<Matrix> qr(gm);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, p);
    return Eigen::Map<const Vector>(q.data(), n * p);
  };
  return Problem("stiefel", dim, std::move(cost), std::move(constraint), region, init);
}

Problem make_product(const std::vector<Problem>& blocks, CostFunction cost) {
  if (blocks.empty()) throw std::invalid_argument("product: need at least one block");
  std::vector<Index> x_offsets, h_offsets;
  Index n = 0, m = 0;
  RegionParams region{std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity(), 0.0};
  for (const Problem& b : blocks) {
    x_offsets.push_back(n);
    h_offsets.push_back(m);
    n += b.dim_x();
    m += b.dim_h();
    region.radius = std::min(region.radius, b.region().radius);
    region.sigma_lb = std::min(region.sigma_lb, b.region().sigma_lb);
    region.c_h = std::max(region.c_h, b.region().c_h);
  }

  ConstraintFunction constraint;
  constraint.dim = m;
  constraint.value = [blocks, x_offsets, h_offsets, m](const Vector& x) -> Vector {
    Vector out(m);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      out.segment(h_offsets[i], blocks[i].dim_h()) =
          blocks[i].h(x.segment(x_offsets[i], blocks[i].dim_x()));
    }
    return out;
  };
  constraint.jacobian = [blocks, x_offsets, h_offsets, m, n](const Vector& x) -> Matrix {
    Matrix j = Matrix::Zero(m, n);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      j.block(h_offsets[i], x_offsets[i], blocks[i].dim_h(), blocks[i].dim_x()) =
          blocks[i].jac_h(x.segment(x_offsets[i], blocks[i].dim_x()));
    }
    return j;
  };
  constraint.hessian = [blocks, x_offsets, h_offsets, n](const Vector& x, Index k) -> Matrix {
    std::size_t i = 0;
    while (i + 1 < blocks.size() && k >= h_offsets[i + 1]) ++i;
    Matrix out = Matrix::Zero(n, n);
    out.block(x_offsets[i], x_offsets[i], blocks[i].dim_x(), blocks[i].dim_x()) =
        blocks[i].hess_h(x.segment(x_offsets[i], blocks[i].dim_x()), k - h_offsets[i]);
    return out;
  };
  auto init = [blocks, x_offsets, n](std::uint64_t seed) -> Vector {
    std::mt19937_64 rng(seed);
    Vector out(n);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      out.segment(x_offsets[i], blocks[i].dim_x()) = blocks[i].init_point(rng());
    }
    return out;
  };
  std::string name = "product";
  for (std::size_t i = 0; i < blocks.size(); ++i) name += (i ? "," : ":") + blocks[i].name();
  return Problem(std::move(name), n, std::move(cost), std::move(constraint), region, init);
}

Vector sample_region_point(const Problem& p, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Vector x0 = p.init_point(seed);
  const Matrix jac = p.jac_h(x0);
  // Normal displacement sized so the linearized constraint value is u * R,
  // plus a tangential-ish Gaussian perturbation of comparable size.
  const Vector normal = jac.transpose() * gaussian_vector(p.dim_h(), rng);
  const double gain = (jac * normal).norm() / normal.norm();
  const double target = unit(rng) * p.region().radius;
  Vector dir = normal / normal.norm() * (target / gain);
  const Vector noise = gaussian_vector(p.dim_x(), rng);
  dir += noise / noise.norm() * (0.5 * unit(rng) * target / gain);
  for (int i = 0; i < 60; ++i) {
    const Vector x = x0 + dir;
    if (in_region(p, x)) return x;
    dir *= 0.75;
  }
  return x0;
}

}  // namespace fletcher
