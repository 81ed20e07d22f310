// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fletcher/cli.hpp"
#include "fletcher/criticality.hpp"
#include "fletcher/fdcheck.hpp"
#include "fletcher/penalty.hpp"
#include "fletcher/serialize.hpp"
#include "fletcher/solver.hpp"

using namespace fletcher;

namespace {

// Collects failed conditions for one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const std::vector<std::string> kBuiltins = {"sphere", "rayleigh", "stiefel", "product:sphere3,stiefel4x2"};

Problem rayleigh10() { return make_rayleigh_sphere(Vector::LinSpaced(10, 1.0, 10.0).asDiagonal()); }

SolverConfig rayleigh_config() {
  SolverConfig cfg;
  cfg.eps1 = 1e-5;
  cfg.eps2 = 1e-4;
  cfg.beta = 10.0;
  return cfg;
}

void counterexample(Check& c) {
  const Vector w = Vector::Unit(5, 0);
  const Problem p = make_sphere(5, w);
  const CriticalityCertificate cert = certify(p, w, {0.5, 0.5, 0.5});
  c.expect(cert.eps0_measured <= 1e-12, "||h|| = " + num(cert.eps0_measured));
  c.expect(cert.eps1_measured <= 1e-10, "||grad|| = " + num(cert.eps1_measured));
  c.expect(cert.min_eig && std::abs(*cert.min_eig + 1.0) <= 1e-8,
           "lambda_min = " + num(cert.min_eig.value_or(NAN)));
  c.expect(!cert.socp_pass, "certify accepted the maximizer as second-order critical");
  const LagrangianCheck lc = lagrangian_check(p, w, Vector::Constant(1, 0.5), {0.5, 0.5, 0.5});
  c.expect(lc.first_order && !lc.second_order, "lagrangian_check did not return (true, false)");
}

void stiefel_constants(Check& c) {
  const Problem p = make_stiefel(8, 3, 0.5, zero_cost(24));
  const double floor = 2.0 * std::sqrt(0.5) - 1e-9;
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> normal;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Vector x = sample_region_point(p, seed);
    c.expect(p.h(x).norm() <= 0.5, "sample outside C for seed " + std::to_string(seed));
    const double smin = svd(p.jac_h(x)).smallest();
    c.expect(smin >= floor, "sigma_min = " + num(smin) + " at seed " + std::to_string(seed));

    const Vector x0 = p.init_point(seed);
    const double s0 = svd(p.jac_h(x0)).smallest();
    c.expect(std::abs(s0 - 2.0) <= 1e-9, "sigma_min at orthonormal X = " + num(s0));

    Vector v(24);
    for (Index i = 0; i < v.size(); ++i) v(i) = normal(rng);
    v *= std::pow(10.0, -3.0 + 3.0 * static_cast<double>(seed % 4) / 3.0);
    const double rem = (p.h(x + v) - p.h(x) - p.jac_h(x) * v).norm();
    // Tolerance covers only floating-point rounding of the three evaluations.
    c.expect(rem <= v.squaredNorm() + 1e-14 * (1.0 + v.squaredNorm()),
             "Taylor remainder " + num(rem) + " > ||V||^2 = " + num(v.squaredNorm()));
  }
}

void derivative_consistency(Check& c) {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(s);
  for (const std::string& id : kBuiltins) {
    const Problem p = make_builtin(id, {});
    for (const DerivativeReport& r : check_problem(p, seeds, 10.0)) {
      c.expect(r.pass, id + "/" + r.target + " rel err " + num(r.max_rel_err) + " > " + num(r.tolerance));
    }
  }
}

void feasible_identities(Check& c) {
  const double beta = 10.0;
  for (const std::string& id : kBuiltins) {
    const Problem p = make_builtin(id, {});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Vector x = p.init_point(seed);
      const Vector gf = p.grad_f(x);
      const double grad_err = (penalty_grad(p, x, beta) - layered_grad(p, x)).norm();
      c.expect(grad_err <= 1e-9 * (1.0 + gf.norm()), id + ": ||grad g - grad_M f|| = " + num(grad_err));
      const LayeredQuantities lq = layered_hess(p, x);
      const Matrix& q = lq.tangent_basis;
      const Matrix projected = q.transpose() * penalty_hess(p, x, beta) * q;
      const double hess_err = (projected - lq.reduced_hess).cwiseAbs().maxCoeff();
      c.expect(hess_err <= 1e-4, id + ": projected Hessian mismatch " + num(hess_err));
    }
  }
}

void solver_correctness(Check& c, std::string* trace_json) {
  const Problem p = rayleigh10();
  const SolverConfig cfg = rayleigh_config();
  bool all_in_region = true;
  const RunTrace t = gradient_eigenstep(p, p.init_point(1), cfg, [&](const StepEvent& ev) {
    all_in_region = all_in_region && in_region(p, ev.x);
  });
  if (trace_json) *trace_json = to_json(t).dump();
  c.expect(t.termination == Termination::converged, std::string("termination ") + to_string(t.termination));
  c.expect(p.f(t.final_x) <= 0.5 + 1e-3, "final f = " + num(p.f(t.final_x)));
  c.expect(all_in_region && in_region(p, t.final_x), "an iterate left C");
  for (const IterationRecord& r : t.records) {
    if (r.kind == StepKind::terminal) continue;
    c.expect(r.g_after < r.g_before, "g did not decrease at k = " + std::to_string(r.k));
  }
  const FirstOrderBounds b = first_order_bounds(p, t.final_x, cfg.beta, cfg.eps1);
  c.expect(b.applicable, "beta below the pointwise thresholds at the final point");
  c.expect(b.h_norm <= b.h_bound, "||h|| = " + num(b.h_norm) + " > " + num(b.h_bound));
  c.expect(b.riem_grad_norm <= b.riem_grad_bound,
           "||grad_M f|| = " + num(b.riem_grad_norm) + " > " + num(b.riem_grad_bound));
}

void plateau_termination(Check& c) {
  BuiltinParams sp;
  sp.n = 8;
  sp.p = 2;
  const std::vector<std::pair<std::string, Problem>> problems = {{"rayleigh", rayleigh10()},
                                                                 {"stiefel", make_builtin("stiefel", sp)}};
  PlateauConfig schedule;
  schedule.beta0 = 1e-3;
  schedule.gamma = 2.0;
  schedule.lp0 = 50;
  for (const auto& [name, p] : problems) {
    const PlateauResult r = plateau(p, p.init_point(1), rayleigh_config(), schedule);
    c.expect(r.plateaus.size() <= 60, name + ": " + std::to_string(r.plateaus.size()) + " plateaus");
    c.expect(r.trace.termination == Termination::converged, name + ": termination " + to_string(r.trace.termination));
    c.expect(r.trace.final_certificate.focp_pass && r.trace.final_certificate.socp_pass,
             name + ": final certificate fails");
    c.expect(r.plateaus.front().beta == schedule.beta0 && r.plateaus.front().lp == schedule.lp0,
             name + ": first plateau does not start at (beta0, lp0)");
    for (std::size_t i = 0; i + 1 < r.plateaus.size(); ++i) {
      const PlateauRecord& cur = r.plateaus[i];
      const PlateauRecord& nxt = r.plateaus[i + 1];
      double beta = 0.0, lp = 0.0;
      if (cur.stop == PlateauStop::b_trigger) {
        beta = schedule.gamma * *cur.b_value;
        lp = std::pow(schedule.gamma * *cur.b_value / cur.beta, 4) * cur.lp;
        c.expect(*cur.b_value >= cur.beta, name + ": trigger with B < beta");
      } else {
        beta = schedule.gamma * cur.beta;
        lp = std::pow(schedule.gamma, 4) * cur.lp;
        c.expect(cur.stop == PlateauStop::budget || cur.stop == PlateauStop::backtrack_failure,
                 name + ": unexpected plateau stop " + to_string(cur.stop));
        if (cur.stop == PlateauStop::budget) {
          c.expect(static_cast<double>(cur.iterations) > cur.lp, name + ": budget stop before LP steps");
        }
      }
      c.expect(nxt.beta == beta && nxt.lp == lp, name + ": beta/LP update mismatch at plateau " + std::to_string(i));
    }
    c.expect(r.final_beta == r.plateaus.back().beta, name + ": final beta mismatch");
  }
}

void gronwall(Check& c) {
  const Problem p = make_stiefel(8, 3, 0.5, zero_cost(24));
  const double sigma = 2.0 * std::sqrt(0.5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector x0 = sample_region_point(p, seed);
    c.expect(p.h(x0).norm() <= 0.5, "start outside C");
    const RestoreResult r = restore_feasibility(p, x0, 1e-3, 3.0);
    const double phi0 = r.decay_log.front().second;
    for (const auto& [t, phi] : r.decay_log) {
      if (phi > phi0 * std::exp(-2.0 * sigma * sigma * t) * 1.05) {
        c.expect(false, "seed " + std::to_string(seed) + ": phi(" + num(t) + ") = " + num(phi));
        break;
      }
    }
  }
}

void complexity_trend(Check& c) {
  RunSpec spec;
  spec.mode = "sweep";
  spec.problem_id = "rayleigh";
  spec.params.n = 10;
  spec.params.seed = 1;
  spec.solver.beta = 10.0;
  spec.eps_list = {1e-2, 1e-3, 1e-4};
  std::ostringstream out, err;
  const int code = run(spec, out, err);
  c.expect(code == 0, "sweep exit code " + std::to_string(code) + ": " + err.str());
  std::stringstream csv(out.str());
  std::string line;
  std::getline(csv, line);
  std::vector<long> iters;
  while (std::getline(csv, line)) iters.push_back(std::stol(line.substr(line.find(',') + 1)));
  c.expect(iters.size() == 3, "expected 3 CSV rows");
  for (std::size_t i = 1; i < iters.size(); ++i) {
    c.expect(iters[i] >= iters[i - 1], "iteration counts not nondecreasing");
  }

  const Problem p = rayleigh10();
  for (std::size_t i = 0; i < spec.eps_list.size(); ++i) {
    SolverConfig cfg = spec.solver;
    cfg.eps1 = spec.eps_list[i];
    cfg.eps2 = kInfinity;
    const RunTrace t = gradient_eigenstep(p, p.init_point(1), cfg);
    long steps = 0;
    for (const IterationRecord& r : t.records) {
      if (r.kind == StepKind::terminal) continue;
      ++steps;
      c.expect(r.kind == StepKind::gradient, "eigenstep in a first-order run");
      const double need = cfg.c1 * r.step_len * cfg.eps1 * cfg.eps1;
      c.expect(r.g_before - r.g_after >= need, "insufficient decrease at k = " + std::to_string(r.k));
    }
    if (i < iters.size()) c.expect(steps == iters[i], "CSV iteration count differs from the solve");
  }
}

void determinism(Check& c) {
  std::string a, b;
  Check scratch;
  solver_correctness(scratch, &a);
  solver_correctness(scratch, &b);
  c.expect(!a.empty() && a == b, "JSON traces differ");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria = {
      {"counterexample at the sphere maximizer", counterexample},
      {"Stiefel constants sigma_min and C_h", stiefel_constants},
      {"derivative consistency for all builtins", derivative_consistency},
      {"feasible identities for gradient and Hessian", feasible_identities},
      {"solver correctness on rayleigh-sphere", [](Check& c) { solver_correctness(c, nullptr); }},
      {"plateau termination and beta replay", plateau_termination},
      {"Gronwall decay of feasibility restoration", gronwall},
      {"complexity trend of first-order sweep", complexity_trend},
      {"determinism of the JSON trace", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("%s criterion %zu: %s (%.2fs)", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), secs);
    if (!ok) {
      std::printf(" -- %s", c.failures.front().c_str());
      if (c.failures.size() > 1) std::printf(" (+%zu more)", c.failures.size() - 1);
    }
    std::printf("\n");
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
