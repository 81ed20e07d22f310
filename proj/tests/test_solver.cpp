#include <gtest/gtest.h>

#include <cmath>

#include "fletcher/serialize.hpp"
#include "fletcher/solver.hpp"
#include "test_util.hpp"

namespace fletcher {
namespace {

Problem rayleigh10() {
  return make_rayleigh_sphere(Vector::LinSpaced(10, 1.0, 10.0).asDiagonal());
}

SolverConfig rayleigh_config() {
  SolverConfig cfg;
  cfg.eps1 = 1e-5;
  cfg.eps2 = 1e-4;
  cfg.beta = 10.0;
  return cfg;
}

// Checks the per-record invariants every accepted run must satisfy.
void expect_trace_invariants(const Problem& p, const RunTrace& trace) {
  ASSERT_FALSE(trace.records.empty());
  EXPECT_EQ(trace.records.back().kind, StepKind::terminal);
  for (const IterationRecord& r : trace.records) {
    EXPECT_LE(r.h_norm, p.region().radius);
    if (r.kind == StepKind::terminal) continue;
    EXPECT_LT(r.g_after, r.g_before);
    if (r.kind == StepKind::gradient) {
      EXPECT_GT(r.grad_norm, trace.config.eps1);
      EXPECT_GE(r.g_before - r.g_after, trace.config.c1 * r.step_len * r.grad_norm * r.grad_norm);
    } else {
      ASSERT_TRUE(r.curvature.has_value());
      EXPECT_LT(*r.curvature, -trace.config.eps2);
      EXPECT_LE(r.grad_norm, trace.config.eps1);
      EXPECT_GE(r.g_before - r.g_after, -trace.config.c2 * r.step_len * r.step_len * *r.curvature);
    }
  }
}

TEST(Config, Validation) {
  const Problem p = rayleigh10();
  SolverConfig cfg;
  EXPECT_NO_THROW(validate_config(cfg, p));
  cfg.eps1 = 0.26;  // R/2 = 0.25
  EXPECT_THROW(validate_config(cfg, p), std::invalid_argument);
  cfg = {};
  cfg.c2 = 0.5;
  EXPECT_THROW(validate_config(cfg, p), std::invalid_argument);
  cfg = {};
  cfg.tau1 = 1.0;
  EXPECT_THROW(validate_config(cfg, p), std::invalid_argument);
  cfg = {};
  cfg.eps2 = kInfinity;
  EXPECT_NO_THROW(validate_config(cfg, p));
}

TEST(GradientBacktrack, AcceptsFirstTrialWhenAdmissible) {
  // Tiny gradient: the unit step already satisfies both tests.
  const Problem p = rayleigh10();
  const Vector x = p.init_point(2);
  const Vector grad = penalty_grad(p, x, 10.0);
  SolverConfig cfg = rayleigh_config();
  cfg.alpha01 = 1e-4;
  const StepResult s = gradient_backtrack(p, x, 10.0, grad, cfg);
  EXPECT_EQ(s.backtracks, 0);
  EXPECT_EQ(s.alpha, 1e-4);
  EXPECT_TRUE(s.x_next.isApprox(x - 1e-4 * grad));
  EXPECT_GE(penalty_value(p, x, 10.0) - s.g_next, cfg.c1 * s.alpha * grad.squaredNorm());
}

TEST(GradientBacktrack, StaysInRegionFromNearBoundary) {
  const Problem p = rayleigh10();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    // ||x||^2 - 1 = 0.49
    const Vector x = std::sqrt(1.49) * p.init_point(seed);
    ASSERT_NEAR(p.h(x).norm(), 0.49, 1e-12);
    const Vector grad = penalty_grad(p, x, 10.0);
    const StepResult s = gradient_backtrack(p, x, 10.0, grad, rayleigh_config());
    EXPECT_LE(p.h(s.x_next).norm(), 0.5);
    EXPECT_LT(s.g_next, penalty_value(p, x, 10.0));
  }
}

TEST(GradientBacktrack, ExhaustedBudgetThrows) {
  const Problem p = rayleigh10();
  const Vector x = p.init_point(1);
  SolverConfig cfg = rayleigh_config();
  cfg.max_backtracks = 0;
  cfg.alpha01 = 1e3;
  EXPECT_THROW(gradient_backtrack(p, x, 10.0, penalty_grad(p, x, 10.0), cfg), BacktrackFailure);
}

TEST(EigenBacktrack, NegativeCurvatureDirection) {
  // At the maximizer w of <x, w> on the sphere the gradient vanishes and every
  // tangent direction has curvature -1.
  const Vector w = Vector::Unit(4, 0);
  const Problem p = make_sphere(4, w);
  const double beta = 10.0;
  const Matrix hess = penalty_hess(p, w, beta);
  const EigenPair eig = sym_eig_min(hess);
  EXPECT_NEAR(eig.value, -1.0, 1e-6);
  Vector d = eig.vector;
  if (d.dot(penalty_grad(p, w, beta)) > 0) d = -d;
  SolverConfig cfg;
  cfg.alpha02 = 0.1;
  const StepResult s = eigen_backtrack(p, w, beta, d, d.dot(hess * d), cfg);
  EXPECT_LE(s.alpha, 0.1);
  EXPECT_GE(penalty_value(p, w, beta) - s.g_next, -cfg.c2 * s.alpha * s.alpha * d.dot(hess * d));
  EXPECT_TRUE(in_region(p, s.x_next));
}

TEST(GradientEigenstep, ImmediateReturnAtCriticalPoint) {
  const Matrix a = Vector::LinSpaced(5, 1.0, 5.0).asDiagonal();
  const Problem p = make_rayleigh_sphere(a);
  const RunTrace t = gradient_eigenstep(p, Vector::Unit(5, 0), rayleigh_config());
  EXPECT_EQ(t.termination, Termination::converged);
  ASSERT_EQ(t.records.size(), 1u);
  EXPECT_EQ(t.records[0].kind, StepKind::terminal);
  EXPECT_TRUE(t.final_certificate.socp_pass);
}

TEST(GradientEigenstep, EscapesSaddleWithEigenstep) {
  // e_2 is a saddle of the Rayleigh quotient: gradient zero, negative curvature.
  const Matrix a = Vector::LinSpaced(4, 1.0, 4.0).asDiagonal();
  const Problem p = make_rayleigh_sphere(a);
  const RunTrace t = gradient_eigenstep(p, Vector::Unit(4, 1), rayleigh_config());
  ASSERT_EQ(t.termination, Termination::converged);
  ASSERT_GE(t.records.size(), 2u);
  EXPECT_EQ(t.records[0].kind, StepKind::eigen);
  EXPECT_NEAR(p.f(t.final_x), 0.5, 1e-6);
  expect_trace_invariants(p, t);
}

TEST(GradientEigenstep, RayleighReachesGlobalMinimum) {
  const Problem p = rayleigh10();
  const SolverConfig cfg = rayleigh_config();
  long eigen_steps_seen = 0;
  auto observer = [&](const StepEvent& ev) {
    EXPECT_TRUE(in_region(p, ev.x));
    if (ev.kind == StepKind::eigen) {
      ++eigen_steps_seen;
      EXPECT_LE(ev.direction.dot(ev.grad_g), 0.0);
      EXPECT_NEAR(ev.direction.norm(), 1.0, 1e-12);
    }
  };
  const RunTrace t = gradient_eigenstep(p, p.init_point(1), cfg, observer);
  ASSERT_EQ(t.termination, Termination::converged) << t.message;
  EXPECT_LE(p.f(t.final_x), 0.5 + 1e-3);
  expect_trace_invariants(p, t);
  const auto eigen_records = std::count_if(t.records.begin(), t.records.end(),
                                           [](const auto& r) { return r.kind == StepKind::eigen; });
  EXPECT_EQ(eigen_records, eigen_steps_seen);

  const FirstOrderBounds b = first_order_bounds(p, t.final_x, cfg.beta, cfg.eps1);
  EXPECT_TRUE(b.applicable);
  EXPECT_TRUE(b.holds) << b.h_norm << " vs " << b.h_bound << ", " << b.riem_grad_norm << " vs "
                       << b.riem_grad_bound;
  EXPECT_TRUE(t.final_certificate.focp_pass);
}

TEST(GradientEigenstep, StiefelLinearCost) {
  BuiltinParams params;
  params.n = 8;
  params.p = 2;
  params.seed = 4;
  const Problem p = make_builtin("stiefel", params);
  SolverConfig cfg = rayleigh_config();
  const RunTrace t = gradient_eigenstep(p, p.init_point(4), cfg);
  ASSERT_EQ(t.termination, Termination::converged) << t.message;
  expect_trace_invariants(p, t);
  const FirstOrderBounds b = first_order_bounds(p, t.final_x, cfg.beta, cfg.eps1);
  EXPECT_TRUE(!b.applicable || b.holds);
}

TEST(GradientEigenstep, FirstOrderVariantNeverTakesEigensteps) {
  const Matrix a = Vector::LinSpaced(4, 1.0, 4.0).asDiagonal();
  const Problem p = make_rayleigh_sphere(a);
  SolverConfig cfg = rayleigh_config();
  cfg.eps2 = kInfinity;
  const RunTrace t = gradient_eigenstep(p, Vector::Unit(4, 1), cfg);
  EXPECT_EQ(t.termination, Termination::converged);
  EXPECT_EQ(t.records.size(), 1u);  // the saddle is accepted
  EXPECT_FALSE(t.final_certificate.min_eig.has_value());
}

TEST(GradientEigenstep, MaxItersAndPreconditions) {
  const Problem p = rayleigh10();
  SolverConfig cfg = rayleigh_config();
  cfg.max_iters = 3;
  const RunTrace t = gradient_eigenstep(p, p.init_point(1), cfg);
  EXPECT_EQ(t.termination, Termination::max_iters);
  EXPECT_EQ(t.records.size(), 4u);
  EXPECT_THROW(gradient_eigenstep(p, 1.3 * p.init_point(1), cfg), std::invalid_argument);
}

TEST(GradientEigenstep, BacktrackFailureReportsBetaTooSmall) {
  const Problem p = rayleigh10();
  SolverConfig cfg = rayleigh_config();
  cfg.max_backtracks = 0;
  cfg.alpha01 = 10.0;
  const RunTrace t = gradient_eigenstep(p, p.init_point(1), cfg);
  EXPECT_EQ(t.termination, Termination::beta_too_small);
  EXPECT_FALSE(t.message.empty());
}

TEST(GradientEigenstep, DecreaseBudgetFromTrace) {
  const Problem p = rayleigh10();
  const RunTrace t = gradient_eigenstep(p, p.init_point(3), rayleigh_config());
  double total = 0.0, min_g = t.records.front().g_before;
  for (const auto& r : t.records) {
    if (r.kind != StepKind::terminal) total += r.g_before - r.g_after;
    min_g = std::min(min_g, r.g_after);
  }
  EXPECT_LE(total, t.records.front().g_before - min_g + 1e-9);
}

TEST(GradientEigenstep, DeterministicTrace) {
  const Problem p = rayleigh10();
  const std::string a = to_json(gradient_eigenstep(p, p.init_point(5), rayleigh_config())).dump();
  const std::string b = to_json(gradient_eigenstep(p, p.init_point(5), rayleigh_config())).dump();
  EXPECT_EQ(a, b);
}

TEST(Plateau, DegenerateScheduleMatchesSingleSolve) {
  const Problem p = rayleigh10();
  const SolverConfig cfg = rayleigh_config();
  PlateauConfig schedule;
  schedule.beta0 = 1e3;  // far above B(x) along the run
  schedule.lp0 = 1e12;
  const PlateauResult r = plateau(p, p.init_point(1), cfg, schedule);
  SolverConfig single = cfg;
  single.beta = 1e3;
  const RunTrace t = gradient_eigenstep(p, p.init_point(1), single);
  ASSERT_EQ(r.plateaus.size(), 1u);
  EXPECT_EQ(r.trace.termination, Termination::converged);
  EXPECT_EQ(to_json(r.trace)["records"].dump(), to_json(t)["records"].dump());
}

TEST(Plateau, GrowsBetaFromTinyStart) {
  const Problem p = rayleigh10();
  PlateauConfig schedule;
  schedule.beta0 = 1e-3;
  schedule.gamma = 2.0;
  schedule.lp0 = 50;
  const PlateauResult r = plateau(p, p.init_point(1), rayleigh_config(), schedule);
  ASSERT_EQ(r.trace.termination, Termination::converged) << r.trace.message;
  EXPECT_GT(r.plateaus.size(), 1u);
  EXPECT_TRUE(std::isfinite(r.final_beta));
  EXPECT_TRUE(r.trace.final_certificate.focp_pass);
  for (std::size_t i = 0; i + 1 < r.plateaus.size(); ++i) {
    const PlateauRecord& cur = r.plateaus[i];
    const PlateauRecord& next = r.plateaus[i + 1];
    if (cur.stop == PlateauStop::b_trigger) {
      ASSERT_TRUE(cur.b_value.has_value());
      EXPECT_GE(*cur.b_value, cur.beta);
      EXPECT_EQ(next.beta, 2.0 * *cur.b_value);
      EXPECT_EQ(next.lp, std::pow(2.0 * *cur.b_value / cur.beta, 4) * cur.lp);
    } else {
      EXPECT_EQ(next.beta, 2.0 * cur.beta);
      EXPECT_EQ(next.lp / cur.lp, 16.0);
    }
  }
}

TEST(Plateau, BudgetStopsGrowLpByGammaToTheFourth) {
  // beta0 above B(x) along the whole run, so only the step budget can stop a plateau.
  const Problem p = rayleigh10();
  PlateauConfig schedule;
  schedule.beta0 = 5.0;
  schedule.gamma = 3.0;
  schedule.lp0 = 2;
  const PlateauResult r = plateau(p, p.init_point(1), rayleigh_config(), schedule);
  ASSERT_EQ(r.trace.termination, Termination::converged) << r.trace.message;
  ASSERT_GE(r.plateaus.size(), 2u);
  for (std::size_t i = 0; i + 1 < r.plateaus.size(); ++i) {
    const PlateauRecord& cur = r.plateaus[i];
    EXPECT_EQ(cur.stop, PlateauStop::budget);
    EXPECT_EQ(cur.iterations, static_cast<long>(cur.lp) + 1);
    EXPECT_EQ(r.plateaus[i + 1].beta, 3.0 * cur.beta);
    EXPECT_EQ(r.plateaus[i + 1].lp, 81.0 * cur.lp);
  }
  long total = 0;
  for (const auto& pl : r.plateaus) total += pl.iterations;
  EXPECT_EQ(total + 1, static_cast<long>(r.trace.records.size()));
}

TEST(Plateau, NonTerminationIsReported) {
  const Problem p = rayleigh10();
  PlateauConfig schedule;
  schedule.beta0 = 1e-3;
  schedule.lp0 = 0;
  schedule.max_plateaus = 2;
  EXPECT_THROW(plateau(p, p.init_point(1), rayleigh_config(), schedule), NonTermination);
}

TEST(Restore, FeasibleStartIsStationary) {
  const Problem p = make_builtin("stiefel", {});
  const Vector x0 = p.init_point(2);
  const RestoreResult r = restore_feasibility(p, x0, 1e-3, 1.0);
  EXPECT_EQ(r.x, x0);
  for (const auto& [t, phi] : r.decay_log) EXPECT_LE(phi, 1e-16);
}

TEST(Restore, SphereFlowConvergesRadially) {
  const Vector w = testing::random_unit(4, 3);
  const Problem p = make_sphere(4, w);
  const RestoreResult r = restore_feasibility(p, 1.2 * w, 1e-3, 10.0);
  // The flow stops once ||h||^2 / 2 <= 1e-16.
  EXPECT_LE(p.h(r.x).norm(), std::sqrt(2e-16) * (1 + 1e-9));
  EXPECT_LE((r.x - w).norm(), 1e-8);
}

TEST(Restore, GronwallDecay) {
  const Problem p = make_stiefel(6, 2, 0.5, zero_cost(12));
  const double sigma = p.region().sigma_lb;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector x0 = sample_region_point(p, seed);
    const RestoreResult r = restore_feasibility(p, x0, 1e-3, 2.0);
    const double phi0 = r.decay_log.front().second;
    for (const auto& [t, phi] : r.decay_log) {
      EXPECT_LE(phi, phi0 * std::exp(-2.0 * sigma * sigma * t) * 1.05);
    }
  }
}

TEST(Restore, HugeStepIsHalved) {
  const Vector w = Vector::Unit(3, 0);
  const Problem p = make_sphere(3, w);
  const RestoreResult r = restore_feasibility(p, 1.2 * w, 5.0, 20.0);
  EXPECT_LT(r.final_step, 5.0);
  for (std::size_t i = 1; i < r.decay_log.size(); ++i) {
    EXPECT_LE(r.decay_log[i].second, r.decay_log[i - 1].second);
  }
}

}  // namespace
}  // namespace fletcher
