#include <algorithm>
#include <cmath>

#include "fletcher/solver.hpp"

namespace fletcher {

namespace {

constexpr double kPhiFloor = 1e-16;
constexpr int kMaxHalvings = 40;

Vector flow_field(const Problem& p, const Vector& x) { return -(p.jac_h(x).transpose() * p.h(x)); }

double phi(const Problem& p, const Vector& x) { return 0.5 * p.h(x).squaredNorm(); }

Vector rk4_step(const Problem& p, const Vector& x, double dt) {
  const Vector k1 = flow_field(p, x);
  const Vector k2 = flow_field(p, x + 0.5 * dt * k1);
  const Vector k3 = flow_field(p, x + 0.5 * dt * k2);
  const Vector k4 = flow_field(p, x + dt * k3);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

RestoreResult restore_feasibility(const Problem& p, const Vector& x0, double step, double t_end) {
  if (!(step > 0.0)) throw std::invalid_argument("restore_feasibility: step must be positive");
  if (!(t_end >= 0.0)) throw std::invalid_argument("restore_feasibility: t_end must be nonnegative");
  if (!in_region(p, x0)) throw std::invalid_argument("restore_feasibility: x0 must lie in C");

  RestoreResult out;
  out.x = x0;
  double t = 0.0;
  double value = phi(p, out.x);
  out.decay_log.emplace_back(t, value);
  double dt = step;
  while (t < t_end && value > kPhiFloor) {
    const double h_step = std::min(dt, t_end - t);
    Vector next = rk4_step(p, out.x, h_step);
    double next_value = next.allFinite() ? phi(p, next) : INFINITY;
    int halvings = 0;
    while (!(next_value <= value)) {
      if (++halvings > kMaxHalvings) {
        throw StepSizeError("restore_feasibility: phi increased even after " +
                            std::to_string(kMaxHalvings) + " step halvings");
      }
      dt *= 0.5;
      next = rk4_step(p, out.x, std::min(dt, t_end - t));
      next_value = next.allFinite() ? phi(p, next) : INFINITY;
    }
    t += std::min(dt, h_step);
    out.x = std::move(next);
    value = next_value;
    out.decay_log.emplace_back(t, value);
  }
  out.final_step = dt;
  return out;
}

}  // namespace fletcher
