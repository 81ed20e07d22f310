#include <cmath>
#include <string>

#include "fletcher/solver.hpp"
#include "solver_internal.hpp"

namespace fletcher {

void validate_config(const SolverConfig& cfg, const Problem& p) {
  auto fail = [](const std::string& what) { throw std::invalid_argument("solver config: " + what); };
  const double radius = p.region().radius;
  if (!(cfg.eps1 >= 0.0)) fail("eps1 must be nonnegative");
  if (cfg.eps1 > radius / 2.0) {
    fail("eps1 = " + std::to_string(cfg.eps1) + " violates eps1 <= R/2 = " +
         std::to_string(radius / 2.0));
  }
  if (!(cfg.eps2 >= 0.0)) fail("eps2 must be nonnegative (or infinite)");
  if (!(cfg.beta > 0.0) || !std::isfinite(cfg.beta)) fail("beta must be positive");
  if (!(cfg.c1 > 0.0 && cfg.c1 < 1.0)) fail("c1 must lie in (0, 1)");
  if (!(cfg.c2 > 0.0 && cfg.c2 < 0.5)) fail("c2 must lie in (0, 1/2)");
  if (!(cfg.tau1 > 0.0 && cfg.tau1 < 1.0)) fail("tau1 must lie in (0, 1)");
  if (!(cfg.tau2 > 0.0 && cfg.tau2 < 1.0)) fail("tau2 must lie in (0, 1)");
  if (!(cfg.alpha01 > 0.0) || !(cfg.alpha02 > 0.0)) fail("initial steps must be positive");
  if (cfg.max_iters < 0) fail("max_iters must be nonnegative");
  if (cfg.max_backtracks < 0) fail("max_backtracks must be nonnegative");
  if (!(cfg.fd_step > 0.0)) fail("fd_step must be positive");
}

namespace {

// Penalty value at a trial point, or nullopt when the point is rejected
// (outside C, or the value is not finite).
std::optional<double> trial_value(const Problem& p, const Vector& y, double beta) {
  if (!y.allFinite() || !in_region(p, y)) return std::nullopt;
  const double g = penalty_value(p, y, beta);
  if (!std::isfinite(g)) return std::nullopt;
  return g;
}

}  // namespace

StepResult gradient_backtrack(const Problem& p, const Vector& x, double beta, const Vector& grad_g,
                              const SolverConfig& cfg) {
  const double g_x = penalty_value(p, x, beta);
  const double slope = grad_g.squaredNorm();
  double alpha = cfg.alpha01;
  for (int j = 0; j <= cfg.max_backtracks; ++j) {
    Vector y = x - alpha * grad_g;
    const auto g_y = trial_value(p, y, beta);
    if (g_y && g_x - *g_y >= cfg.c1 * alpha * slope) {
      return {alpha, std::move(y), j, *g_y};
    }
    alpha *= cfg.tau1;
  }
  throw BacktrackFailure("gradient backtracking exceeded " + std::to_string(cfg.max_backtracks) +
                         " reductions (beta may be below beta_1(x))");
}

StepResult eigen_backtrack(const Problem& p, const Vector& x, double beta, const Vector& d,
                           double hess_quad, const SolverConfig& cfg) {
  const double g_x = penalty_value(p, x, beta);
  double alpha = cfg.alpha02;
  for (int j = 0; j <= cfg.max_backtracks; ++j) {
    Vector y = x + alpha * d;
    const auto g_y = trial_value(p, y, beta);
    if (g_y && g_x - *g_y >= -cfg.c2 * alpha * alpha * hess_quad) {
      return {alpha, std::move(y), j, *g_y};
    }
    alpha *= cfg.tau2;
  }
  throw BacktrackFailure("eigenstep backtracking exceeded " + std::to_string(cfg.max_backtracks) +
                         " reductions");
}

namespace detail {

InnerResult run_inner(const Problem& p, const Vector& x0, const SolverConfig& cfg,
                      const StopHook& stop, const StepObserver& observer,
                      std::vector<IterationRecord>& records, long k_offset) {
  InnerResult out;
  out.x = x0;
  const bool second_order = std::isfinite(cfg.eps2);
  try {
    for (long k = 0;; ++k) {
      out.steps = k;
      const PenaltyEval e = evaluate_penalty(p, out.x, cfg.beta);
      if (stop && stop(k, e)) {
        out.stop = InnerStop::stop_hook;
        return out;
      }
      if (k >= cfg.max_iters) {
        out.stop = InnerStop::max_iters;
        return out;
      }
      IterationRecord rec;
      rec.k = k_offset + k;
      rec.g_before = e.g_val;
      rec.grad_norm = e.grad_g.norm();
      rec.h_norm = e.h_val.norm();

      StepResult step;
      if (rec.grad_norm > cfg.eps1) {
        rec.kind = StepKind::gradient;
        step = gradient_backtrack(p, out.x, cfg.beta, e.grad_g, cfg);
        if (observer) {
          const Vector dir = -e.grad_g;
          observer(StepEvent{rec.k, rec.kind, out.x, dir, e.grad_g, step.alpha});
        }
      } else {
        if (!second_order) {
          out.stop = InnerStop::converged;
          return out;
        }
        const Matrix hess = penalty_hess(p, out.x, cfg.beta, cfg.fd_step);
        EigenPair eig = sym_eig_min(hess);
        if (eig.value >= -cfg.eps2) {
          out.stop = InnerStop::converged;
          return out;
        }
        Vector d = std::move(eig.vector);
        if (d.dot(e.grad_g) > 0.0) d = -d;
        const double hess_quad = d.dot(hess * d);
        rec.kind = StepKind::eigen;
        rec.curvature = hess_quad;
        step = eigen_backtrack(p, out.x, cfg.beta, d, hess_quad, cfg);
        if (observer) observer(StepEvent{rec.k, rec.kind, out.x, d, e.grad_g, step.alpha});
      }
      rec.step_len = step.alpha;
      rec.g_after = step.g_next;
      rec.backtracks = step.backtracks;
      records.push_back(rec);
      out.x = std::move(step.x_next);
    }
  } catch (const RankDeficiency& err) {
    out.stop = InnerStop::rank_deficient;
    out.message = err.what();
  } catch (const BacktrackFailure& err) {
    out.stop = InnerStop::backtrack_failure;
    out.message = err.what();
  }
  return out;
}

void finish_trace(const Problem& p, const Vector& x, double beta, RunTrace& trace) {
  const SolverConfig& cfg = trace.config;
  trace.final_x = x;
  IterationRecord rec;
  rec.k = trace.records.empty() ? 0 : trace.records.back().k + 1;
  rec.kind = StepKind::terminal;
  try {
    const PenaltyEval e = evaluate_penalty(p, x, beta);
    rec.g_before = rec.g_after = e.g_val;
    rec.grad_norm = e.grad_g.norm();
    rec.h_norm = e.h_val.norm();
    if (std::isfinite(cfg.eps2) && rec.grad_norm <= cfg.eps1) {
      rec.curvature = sym_eig_min(penalty_hess(p, x, beta, cfg.fd_step)).value;
    }
    trace.final_certificate = certify(p, x, {cfg.eps1, 2.0 * cfg.eps1, cfg.eps2});
  } catch (const RankDeficiency& err) {
    rec.h_norm = p.h(x).norm();
    trace.final_certificate.targets = {cfg.eps1, 2.0 * cfg.eps1, cfg.eps2};
    if (trace.message.empty()) trace.message = err.what();
  }
  trace.records.push_back(rec);
}

}  // namespace detail

RunTrace gradient_eigenstep(const Problem& p, const Vector& x0, const SolverConfig& cfg,
                            const StepObserver& observer) {
  validate_config(cfg, p);
  if (!in_region(p, x0)) {
    throw std::invalid_argument("gradient_eigenstep: x0 must satisfy ||h(x0)|| <= R");
  }
  RunTrace trace;
  trace.config = cfg;
  const detail::InnerResult inner = detail::run_inner(p, x0, cfg, {}, observer, trace.records, 0);
  switch (inner.stop) {
    case detail::InnerStop::converged:
      trace.termination = Termination::converged;
      break;
    case detail::InnerStop::rank_deficient:
      trace.termination = Termination::rank_deficient;
      break;
    case detail::InnerStop::backtrack_failure:
      trace.termination = Termination::beta_too_small;
      break;
    case detail::InnerStop::max_iters:
    case detail::InnerStop::stop_hook:
      trace.termination = Termination::max_iters;
      break;
  }
  trace.message = inner.message;
  detail::finish_trace(p, inner.x, cfg.beta, trace);
  return trace;
}

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::gradient: return "gradient";
    case StepKind::eigen: return "eigen";
    case StepKind::terminal: return "terminal";
  }
  return "unknown";
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::converged: return "converged";
    case Termination::max_iters: return "max_iters";
    case Termination::rank_deficient: return "rank_deficient";
    case Termination::beta_too_small: return "beta_too_small";
  }
  return "unknown";
}

const char* to_string(PlateauStop s) {
  switch (s) {
    case PlateauStop::converged: return "converged";
    case PlateauStop::b_trigger: return "b_trigger";
    case PlateauStop::budget: return "budget";
    case PlateauStop::backtrack_failure: return "backtrack_failure";
    case PlateauStop::rank_deficient: return "rank_deficient";
    case PlateauStop::max_iters: return "max_iters";
  }
  return "unknown";
}

}  // namespace fletcher
