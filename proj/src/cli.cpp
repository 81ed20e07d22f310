#include "fletcher/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>

#include "fletcher/criticality.hpp"
#include "fletcher/fdcheck.hpp"
#include "fletcher/serialize.hpp"

namespace fletcher {

using nlohmann::json;

namespace {

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

const std::vector<std::string> kModes = {"solve", "plateau", "restore", "check", "sweep"};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string csv_number(double v) { return fmt("%.12g", v); }

Matrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open matrix file '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw UsageError("matrix file '" + path + "': bad entry '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Index>(rows.size());
  Matrix a(n, n);
  for (Index i = 0; i < n; ++i) {
    if (static_cast<Index>(rows[i].size()) != n) {
      throw UsageError("matrix file '" + path + "' must hold a square matrix");
    }
    for (Index j = 0; j < n; ++j) a(i, j) = rows[i][j];
  }
  return a;
}

Matrix parse_diag(const std::string& text, Index n) {
  if (text == "1..n") return Vector::LinSpaced(n, 1.0, static_cast<double>(n)).asDiagonal();
  std::vector<double> vals;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      vals.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw UsageError("--diag expects '1..n' or comma-separated numbers, got '" + text + "'");
    }
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Index>(vals.size())).asDiagonal();
}

void write_output(const RunSpec& spec, const std::string& text, std::ostream& out) {
  if (spec.output_path.empty() || spec.output_path == "-") {
    out << text;
    return;
  }
  std::ofstream file(spec.output_path, std::ios::binary);
  if (!file) throw UsageError("cannot write output file '" + spec.output_path + "'");
  file << text;
}

long step_count(const RunTrace& t) {
  return static_cast<long>(std::count_if(t.records.begin(), t.records.end(),
                                         [](const IterationRecord& r) { return r.kind != StepKind::terminal; }));
}

// lambda_min(Hess_{M_x} f) at x, NaN when the layer is singular.
double layered_min_eig(const Problem& p, const Vector& x) {
  try {
    return layered_hess(p, x).min_eig;
  } catch (const RankDeficiency&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

int exit_code(Termination t) {
  switch (t) {
    case Termination::converged: return kExitConverged;
    case Termination::max_iters: return kExitNotReached;
    case Termination::rank_deficient:
    case Termination::beta_too_small: return kExitNumericalFailure;
  }
  return kExitNumericalFailure;
}

std::string summary(const Problem& p, const RunTrace& t) {
  const CriticalityCertificate& c = t.final_certificate;
  return std::string("termination=") + to_string(t.termination) + " iterations=" +
         std::to_string(step_count(t)) + " h_norm=" + fmt("%.3e", c.eps0_measured) +
         " grad_norm=" + fmt("%.3e", c.eps1_measured) +
         " min_eig=" + fmt("%.6g", c.min_eig ? *c.min_eig : layered_min_eig(p, t.final_x));
}

}  // namespace

RunSpec run_spec_from_json(const std::string& json_text, RunSpec base) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("spec file is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("spec file must hold a JSON object");
  static const std::vector<std::string> known = {"mode",    "problem_id", "problem_params", "solver",
                                                 "plateau", "restore",    "seeds",          "eps_list",
                                                 "second_order", "output_path"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw UsageError("spec file: unknown key '" + key + "'");
    }
  }
  try {
    if (j.contains("mode")) base.mode = j["mode"].get<std::string>();
    if (j.contains("problem_id")) base.problem_id = j["problem_id"].get<std::string>();
    if (j.contains("problem_params")) {
      const json& pp = j["problem_params"];
      if (pp.contains("n")) base.params.n = pp["n"].get<Index>();
      if (pp.contains("p")) base.params.p = pp["p"].get<Index>();
      if (pp.contains("R")) base.params.radius = pp["R"].get<double>();
      if (pp.contains("seed")) base.params.seed = pp["seed"].get<std::uint64_t>();
      if (pp.contains("diag")) base.diag = pp["diag"].get<std::string>();
      if (pp.contains("matrix")) base.matrix_path = pp["matrix"].get<std::string>();
    }
    if (j.contains("solver")) base.solver = solver_config_from_json(j["solver"], base.solver);
    if (j.contains("plateau")) {
      const json& pl = j["plateau"];
      if (pl.contains("gamma")) base.schedule.gamma = pl["gamma"].get<double>();
      if (pl.contains("beta0")) base.schedule.beta0 = pl["beta0"].get<double>();
      if (pl.contains("lp0")) base.schedule.lp0 = pl["lp0"].get<double>();
    }
    if (j.contains("restore")) {
      const json& r = j["restore"];
      if (r.contains("step")) base.restore_step = r["step"].get<double>();
      if (r.contains("t_end")) base.t_end = r["t_end"].get<double>();
    }
    if (j.contains("seeds")) base.check_seeds = j["seeds"].get<int>();
    if (j.contains("eps_list")) base.eps_list = j["eps_list"].get<std::vector<double>>();
    if (j.contains("second_order")) base.second_order = j["second_order"].get<bool>();
    if (j.contains("output_path")) base.output_path = j["output_path"].get<std::string>();
  } catch (const json::exception& e) {
    throw UsageError(std::string("spec file: ") + e.what());
  }
  return base;
}

Problem build_problem(const RunSpec& spec) {
  BuiltinParams params = spec.params;
  if (spec.problem_id == "rayleigh") {
    if (!spec.diag.empty() && !spec.matrix_path.empty()) {
      throw UsageError("--diag and --matrix are mutually exclusive");
    }
    if (!spec.matrix_path.empty()) params.matrix = read_matrix_csv(spec.matrix_path);
    if (!spec.diag.empty()) params.matrix = parse_diag(spec.diag, params.n);
  } else if (!spec.diag.empty() || !spec.matrix_path.empty()) {
    throw UsageError("--diag/--matrix only apply to the rayleigh problem");
  }
  try {
    return make_builtin(spec.problem_id, params);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

namespace {

RunTrace solve_once(const Problem& p, const RunSpec& spec, const SolverConfig& cfg) {
  return gradient_eigenstep(p, p.init_point(spec.params.seed), cfg);
}

}  // namespace

int cmd_solve(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Problem p = build_problem(spec);
  validate_config(spec.solver, p);
  const RunTrace t = solve_once(p, spec, spec.solver);
  write_output(spec, to_json(t).dump(2) + "\n", out);
  err << summary(p, t) << "\n";
  return exit_code(t.termination);
}

int cmd_plateau(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Problem p = build_problem(spec);
  SolverConfig cfg = spec.solver;
  cfg.beta = spec.schedule.beta0;
  validate_config(cfg, p);
  const PlateauResult r = plateau(p, p.init_point(spec.params.seed), spec.solver, spec.schedule);
  write_output(spec, to_json(r).dump(2) + "\n", out);
  err << summary(p, r.trace) << " plateaus=" << r.plateaus.size() << " final_beta=" << fmt("%.6g", r.final_beta)
      << "\n";
  return exit_code(r.trace.termination);
}

int cmd_restore(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Problem p = build_problem(spec);
  const RestoreResult r = restore_feasibility(p, sample_region_point(p, spec.params.seed), spec.restore_step,
                                              spec.t_end);
  write_output(spec, to_json(r).dump(2) + "\n", out);
  const auto& [t_last, phi_last] = r.decay_log.back();
  const bool reached = phi_last <= 1e-16;
  err << "termination=" << (reached ? "converged" : "t_end") << " samples=" << r.decay_log.size()
      << " t=" << fmt("%.6g", t_last) << " phi0=" << fmt("%.3e", r.decay_log.front().second)
      << " phi=" << fmt("%.3e", phi_last) << " h_norm=" << fmt("%.3e", p.h(r.x).norm()) << "\n";
  return reached ? kExitConverged : kExitNotReached;
}

int cmd_check(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  const Problem p = build_problem(spec);
  if (spec.check_seeds < 1) throw UsageError("--seeds must be at least 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < spec.check_seeds; ++i) seeds.push_back(spec.params.seed + static_cast<std::uint64_t>(i));
  const std::vector<DerivativeReport> reports = check_problem(p, seeds, spec.solver.beta);
  json arr = json::array();
  std::size_t passed = 0;
  double worst = 0.0;
  for (const DerivativeReport& r : reports) {
    arr.push_back(to_json(r));
    passed += r.pass ? 1 : 0;
    worst = std::max(worst, r.max_rel_err / r.tolerance);
  }
  write_output(spec, arr.dump(2) + "\n", out);
  err << "termination=" << (passed == reports.size() ? "pass" : "fail") << " passed=" << passed << "/"
      << reports.size() << " worst_err_over_tol=" << fmt("%.3e", worst) << "\n";
  return passed == reports.size() ? kExitConverged : kExitNotReached;
}

int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  if (spec.eps_list.empty()) throw UsageError("sweep needs a nonempty --eps-list");
  const Problem p = build_problem(spec);
  std::vector<double> eps = spec.eps_list;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  std::vector<SolverConfig> configs;
  for (const double e : eps) {
    SolverConfig cfg = spec.solver;
    cfg.eps1 = e;
    cfg.eps2 = spec.second_order ? e : kInfinity;
    validate_config(cfg, p);
    configs.push_back(cfg);
  }
  std::vector<std::future<RunTrace>> jobs;
  for (const SolverConfig& cfg : configs) {
    jobs.push_back(std::async(std::launch::async, [&p, &spec, cfg] { return solve_once(p, spec, cfg); }));
  }
  std::vector<RunTrace> traces;
  for (auto& job : jobs) traces.push_back(job.get());

  const bool all_converged = std::all_of(traces.begin(), traces.end(),
                                         [](const RunTrace& t) { return t.termination == Termination::converged; });
  std::string csv = "eps,iters_total,iters_grad,iters_eigen,final_h_norm,final_grad_norm,final_min_eig,g_final";
  if (!all_converged) csv += ",termination";
  csv += "\n";
  int code = kExitConverged;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const RunTrace& t = traces[i];
    long grad = 0, eig = 0;
    for (const IterationRecord& r : t.records) {
      grad += r.kind == StepKind::gradient;
      eig += r.kind == StepKind::eigen;
    }
    const CriticalityCertificate& c = t.final_certificate;
    const double min_eig = c.min_eig ? *c.min_eig : layered_min_eig(p, t.final_x);
    csv += csv_number(eps[i]) + "," + std::to_string(grad + eig) + "," + std::to_string(grad) + "," +
           std::to_string(eig) + "," + csv_number(c.eps0_measured) + "," + csv_number(c.eps1_measured) + "," +
           csv_number(min_eig) + "," + csv_number(t.records.back().g_after);
    if (!all_converged) csv += std::string(",") + to_string(t.termination);
    csv += "\n";
    if (t.termination != Termination::converged) code = std::max(code, exit_code(t.termination));
  }
  write_output(spec, csv, out);
  err << "termination=" << (all_converged ? "converged" : "incomplete") << " runs=" << traces.size()
      << " iterations=" << step_count(traces.back()) << " h_norm=" << fmt("%.3e", traces.back().final_certificate.eps0_measured)
      << " grad_norm=" << fmt("%.3e", traces.back().final_certificate.eps1_measured) << "\n";
  return all_converged ? kExitConverged : kExitNotReached;
}

int run(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    if (spec.mode == "solve") return cmd_solve(spec, out, err);
    if (spec.mode == "plateau") return cmd_plateau(spec, out, err);
    if (spec.mode == "restore") return cmd_restore(spec, out, err);
    if (spec.mode == "check") return cmd_check(spec, out, err);
    if (spec.mode == "sweep") return cmd_sweep(spec, out, err);
    throw UsageError("unknown mode '" + spec.mode + "' (expected solve, plateau, restore, check or sweep)");
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumericalFailure;
  }
}

namespace {

// Flag values as parsed; unset options leave the spec untouched.
struct Flags {
  std::optional<std::string> spec_file, problem, diag, matrix, output;
  std::optional<Index> n, p;
  std::optional<double> radius, eps1, eps2, beta, c1, c2, tau1, tau2, alpha01, alpha02, fd_step;
  std::optional<long> max_iters;
  std::optional<int> max_backtracks, seeds;
  std::optional<std::uint64_t> seed;
  std::optional<double> gamma, beta0, lp0, step, t_end;
  std::vector<double> eps_list;
  bool second_order = false;
};

void add_flags(CLI::App* app, Flags& f) {
  app->add_option("--spec", f.spec_file, "JSON RunSpec file; flags override its values");
  app->add_option("--problem", f.problem, "Problem id: sphere, rayleigh, stiefel, product:<blocks>");
  app->add_option("--n", f.n, "Ambient dimension");
  app->add_option("--p", f.p, "Stiefel columns");
  app->add_option("--R", f.radius, "Region radius R");
  app->add_option("--seed", f.seed, "Seed for problem data and start point (FLETCHER_SEED overrides)");
  app->add_option("--diag", f.diag, "rayleigh: '1..n' or comma-separated diagonal of A");
  app->add_option("--matrix", f.matrix, "rayleigh: CSV file holding A");
  app->add_option("--eps1", f.eps1);
  app->add_option("--eps2", f.eps2, "inf disables the second-order test");
  app->add_option("--beta", f.beta);
  app->add_option("--c1", f.c1);
  app->add_option("--c2", f.c2);
  app->add_option("--tau1", f.tau1);
  app->add_option("--tau2", f.tau2);
  app->add_option("--alpha01", f.alpha01);
  app->add_option("--alpha02", f.alpha02);
  app->add_option("--max-iters", f.max_iters);
  app->add_option("--max-backtracks", f.max_backtracks);
  app->add_option("--fd-step", f.fd_step);
  app->add_option("--output", f.output, "Output path (default: stdout)");
  app->add_option("--gamma", f.gamma, "plateau: beta growth factor");
  app->add_option("--beta0", f.beta0, "plateau: initial beta");
  app->add_option("--lp0", f.lp0, "plateau: initial plateau length");
  app->add_option("--step", f.step, "restore: initial integration step");
  app->add_option("--t-end", f.t_end, "restore: final time");
  app->add_option("--seeds", f.seeds, "check: number of seeds");
  app->add_option("--eps-list", f.eps_list, "sweep: tolerances")->delimiter(',');
  app->add_flag("--second-order", f.second_order, "sweep: set eps2 = eps as well");
}

void apply_flags(const Flags& f, RunSpec& s) {
  auto set = [](const auto& opt, auto& field) {
    if (opt) field = *opt;
  };
  set(f.problem, s.problem_id);
  set(f.n, s.params.n);
  set(f.p, s.params.p);
  set(f.radius, s.params.radius);
  set(f.seed, s.params.seed);
  set(f.diag, s.diag);
  set(f.matrix, s.matrix_path);
  set(f.eps1, s.solver.eps1);
  set(f.eps2, s.solver.eps2);
  set(f.beta, s.solver.beta);
  set(f.c1, s.solver.c1);
  set(f.c2, s.solver.c2);
  set(f.tau1, s.solver.tau1);
  set(f.tau2, s.solver.tau2);
  set(f.alpha01, s.solver.alpha01);
  set(f.alpha02, s.solver.alpha02);
  set(f.max_iters, s.solver.max_iters);
  set(f.max_backtracks, s.solver.max_backtracks);
  set(f.fd_step, s.solver.fd_step);
  set(f.output, s.output_path);
  set(f.gamma, s.schedule.gamma);
  set(f.beta0, s.schedule.beta0);
  set(f.lp0, s.schedule.lp0);
  set(f.step, s.restore_step);
  set(f.t_end, s.t_end);
  set(f.seeds, s.check_seeds);
  if (!f.eps_list.empty()) s.eps_list = f.eps_list;
  if (f.second_order) s.second_order = true;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fletcher augmented Lagrangian solver"};
  app.name("fletcher_cli");
  app.require_subcommand(0, 1);
  Flags top;
  add_flags(&app, top);
  std::vector<std::pair<CLI::App*, std::unique_ptr<Flags>>> subs;
  for (const std::string& mode : kModes) {
    auto flags = std::make_unique<Flags>();
    CLI::App* sub = app.add_subcommand(mode);
    add_flags(sub, *flags);
    subs.emplace_back(sub, std::move(flags));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitConverged;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitConverged;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  const Flags* chosen = &top;
  std::optional<std::string> mode;
  for (const auto& [sub, flags] : subs) {
    if (sub->parsed()) {
      chosen = flags.get();
      mode = sub->get_name();
    }
  }

  RunSpec spec;
  try {
    for (const Flags* f : {static_cast<const Flags*>(&top), chosen}) {
      if (!f->spec_file) continue;
      std::ifstream in(*f->spec_file);
      if (!in) throw UsageError("cannot open spec file '" + *f->spec_file + "'");
      std::stringstream buf;
      buf << in.rdbuf();
      spec = run_spec_from_json(buf.str(), spec);
    }
    apply_flags(top, spec);
    if (chosen != &top) apply_flags(*chosen, spec);
    if (mode) spec.mode = *mode;
    if (!mode && !top.spec_file && !chosen->spec_file) {
      throw UsageError("a subcommand (solve, plateau, restore, check, sweep) or --spec is required");
    }
    if (const char* env = std::getenv("FLETCHER_SEED"); env && *env) {
      std::size_t used = 0;
      try {
        spec.params.seed = std::stoull(env, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || env[used] != '\0') throw UsageError(std::string("FLETCHER_SEED is not an integer: ") + env);
    }
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }
  return run(spec, out, err);
}

}  // namespace fletcher
