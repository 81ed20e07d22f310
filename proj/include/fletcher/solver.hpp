// Gradient-Eigenstep minimization of Fletcher's augmented Lagrangian, the
// plateau scheme that grows the penalty parameter until the inner solve
// converges, and the feasibility-restoring gradient flow of 1/2 ||h||^2.
//
// Every accepted iterate stays in C = {x : ||h(x)|| <= R}: both backtracking
// searches reject trial points outside C in addition to enforcing their
// sufficient-decrease condition.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fletcher/criticality.hpp"
#include "fletcher/fdcheck.hpp"
#include "fletcher/numerics.hpp"
#include "fletcher/penalty.hpp"
#include "fletcher/problem.hpp"

namespace fletcher {

struct SolverConfig {
  double eps1 = 1e-5;
  double eps2 = 1e-4;  // kInfinity selects the first-order variant
  double beta = 10.0;
  double c1 = 1e-4;
  double c2 = 0.4;
  double tau1 = 0.5;
  double tau2 = 0.5;
  double alpha01 = 1.0;
  double alpha02 = 1.0;
  long max_iters = 100000;
  int max_backtracks = 60;
  double fd_step = kFirstDerivativeStep;
};

/// Rejects configurations outside the admissible ranges, including eps1 > R/2.
void validate_config(const SolverConfig& cfg, const Problem& p);

class BacktrackFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class StepSizeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonTermination : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class StepKind { gradient, eigen, terminal };

struct IterationRecord {
  long k = 0;
  StepKind kind = StepKind::gradient;
  double step_len = 0.0;
  double g_before = 0.0;
  double g_after = 0.0;
  double grad_norm = 0.0;  // ||grad g(x_k)||
  double h_norm = 0.0;     // ||h(x_k)||
  std::optional<double> curvature;  // <d, Hess g d> for eigensteps
  int backtracks = 0;
};

enum class Termination { converged, max_iters, rank_deficient, beta_too_small };

struct RunTrace {
  SolverConfig config;
  std::vector<IterationRecord> records;
  Vector final_x;
  CriticalityCertificate final_certificate;
  Termination termination = Termination::max_iters;
  std::string message;  // diagnostic for non-converged runs
};

struct StepResult {
  double alpha = 0.0;
  Vector x_next;
  int backtracks = 0;
  double g_next = 0.0;
};

/// First alpha in {alpha01 tau1^j} with Armijo decrease and x - alpha grad_g in C.
StepResult gradient_backtrack(const Problem& p, const Vector& x, double beta, const Vector& grad_g,
                              const SolverConfig& cfg);

/// First alpha in {alpha02 tau2^j} with g(x) - g(x + alpha d) >= -c2 alpha^2 hess_quad
/// and x + alpha d in C.
StepResult eigen_backtrack(const Problem& p, const Vector& x, double beta, const Vector& d,
                           double hess_quad, const SolverConfig& cfg);

/// Observed once per accepted step, before the iterate moves.
struct StepEvent {
  long k;
  StepKind kind;
  const Vector& x;
  const Vector& direction;  // -grad g for gradient steps, d for eigensteps
  const Vector& grad_g;
  double alpha;
};
using StepObserver = std::function<void(const StepEvent&)>;

RunTrace gradient_eigenstep(const Problem& p, const Vector& x0, const SolverConfig& cfg,
                            const StepObserver& observer = {});

struct PlateauConfig {
  double gamma = 2.0;
  double beta0 = 1.0;
  double lp0 = 100.0;
  int max_plateaus = 60;
};

enum class PlateauStop { converged, b_trigger, budget, backtrack_failure, rank_deficient, max_iters };

struct PlateauRecord {
  int index = 0;
  double beta = 0.0;
  double lp = 0.0;
  long iterations = 0;
  PlateauStop stop = PlateauStop::budget;
  std::optional<double> b_value;  // B(x) at the returned point on a B-trigger
};

struct PlateauResult {
  RunTrace trace;
  std::vector<PlateauRecord> plateaus;
  double final_beta = 0.0;
};

/// Reruns Gradient-Eigenstep with growing beta and plateau lengths. cfg.beta is
/// ignored; cfg.max_iters caps the total number of steps over all plateaus.
/// Throws NonTermination when max_plateaus is exceeded.
PlateauResult plateau(const Problem& p, const Vector& x0, const SolverConfig& cfg,
                      const PlateauConfig& schedule, const StepObserver& observer = {});

struct RestoreResult {
  Vector x;
  std::vector<std::pair<double, double>> decay_log;  // (t, phi(x(t)))
  double final_step = 0.0;
};

/// Integrates x' = -Dh(x)^T h(x) with classical RK4 until t_end or
/// phi = 1/2 ||h||^2 <= 1e-16. A step that increases phi is halved and
/// retried; StepSizeError is thrown once halving stops helping.
RestoreResult restore_feasibility(const Problem& p, const Vector& x0, double step, double t_end);

const char* to_string(StepKind kind);
const char* to_string(Termination t);
const char* to_string(PlateauStop s);

}  // namespace fletcher
