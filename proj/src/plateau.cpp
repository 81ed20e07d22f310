#include <cmath>
#include <string>

#include "fletcher/solver.hpp"
#include "solver_internal.hpp"

namespace fletcher {

namespace {

bool is_critical(const Problem& p, const Vector& x, const SolverConfig& cfg) {
  if (penalty_grad(p, x, cfg.beta).norm() > cfg.eps1) return false;
  if (!std::isfinite(cfg.eps2)) return true;
  return sym_eig_min(penalty_hess(p, x, cfg.beta, cfg.fd_step)).value >= -cfg.eps2;
}

}  // namespace

PlateauResult plateau(const Problem& p, const Vector& x0, const SolverConfig& cfg,
                      const PlateauConfig& schedule, const StepObserver& observer) {
  if (!(schedule.gamma > 1.0)) throw std::invalid_argument("plateau: gamma must exceed 1");
  if (!(schedule.beta0 > 0.0)) throw std::invalid_argument("plateau: beta0 must be positive");
  if (!(schedule.lp0 >= 0.0)) throw std::invalid_argument("plateau: lp0 must be nonnegative");
  SolverConfig inner_cfg = cfg;
  inner_cfg.beta = schedule.beta0;
  validate_config(inner_cfg, p);
  if (!in_region(p, x0)) throw std::invalid_argument("plateau: x0 must satisfy ||h(x0)|| <= R");

  PlateauResult result;
  result.trace.config = cfg;
  Vector x = x0;
  double beta = schedule.beta0;
  double lp = schedule.lp0;
  long total_steps = 0;
  const double gamma4 = std::pow(schedule.gamma, 4);

  for (int l = 0; l < schedule.max_plateaus; ++l) {
    inner_cfg.beta = beta;
    inner_cfg.max_iters = cfg.max_iters - total_steps;
    std::optional<double> trigger;
    const double lp_now = lp;
    auto stop = [&](long k, const PenaltyEval& e) {
      const double b = beta_thresholds(e).b_max;
      if (b >= beta) {
        trigger = b;
        return true;
      }
      return static_cast<double>(k) > lp_now;
    };
    const long k_offset = result.trace.records.empty() ? 0 : result.trace.records.back().k + 1;
    const detail::InnerResult inner =
        detail::run_inner(p, x, inner_cfg, stop, observer, result.trace.records, k_offset);
    total_steps += inner.steps;
    x = inner.x;

    PlateauRecord rec;
    rec.index = l;
    rec.beta = beta;
    rec.lp = lp;
    rec.iterations = inner.steps;
    rec.b_value = trigger;

    auto finish = [&](Termination t, PlateauStop s) {
      rec.stop = s;
      result.plateaus.push_back(rec);
      result.trace.termination = t;
      result.trace.message = inner.message;
      result.trace.config.beta = beta;
      result.final_beta = beta;
      detail::finish_trace(p, x, beta, result.trace);
      return result;
    };

    if (inner.stop == detail::InnerStop::converged) return finish(Termination::converged, PlateauStop::converged);
    if (inner.stop == detail::InnerStop::rank_deficient) {
      return finish(Termination::rank_deficient, PlateauStop::rank_deficient);
    }
    if (inner.stop == detail::InnerStop::max_iters) return finish(Termination::max_iters, PlateauStop::max_iters);
    try {
      if (is_critical(p, x, inner_cfg)) return finish(Termination::converged, PlateauStop::converged);
    } catch (const RankDeficiency&) {
      return finish(Termination::rank_deficient, PlateauStop::rank_deficient);
    }

    if (trigger) {
      rec.stop = PlateauStop::b_trigger;
      lp = std::pow(schedule.gamma * *trigger / beta, 4) * lp;
      beta = schedule.gamma * *trigger;
    } else if (inner.stop == detail::InnerStop::backtrack_failure) {
      // Same update as a B-trigger with B = beta.
      rec.stop = PlateauStop::backtrack_failure;
      lp = gamma4 * lp;
      beta = schedule.gamma * beta;
    } else {
      rec.stop = PlateauStop::budget;
      lp = gamma4 * lp;
      beta = schedule.gamma * beta;
    }
    result.plateaus.push_back(rec);
  }
  throw NonTermination("plateau scheme exceeded " + std::to_string(schedule.max_plateaus) +
                       " plateaus without converging");
}

}  // namespace fletcher
