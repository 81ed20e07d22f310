// Command-line front end. Every subcommand is reachable both through run_cli
// (argv-style) and directly through the cmd_* functions on a RunSpec.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fletcher/problem.hpp"
#include "fletcher/solver.hpp"

namespace fletcher {

enum ExitCode : int {
  kExitConverged = 0,
  kExitNotReached = 2,
  kExitNumericalFailure = 3,
  kExitUsage = 64,
};

struct RunSpec {
  std::string mode = "solve";  // solve | plateau | restore | check | sweep
  std::string problem_id = "rayleigh";
  BuiltinParams params;
  std::string diag;         // rayleigh: "1..n" or comma-separated diagonal entries
  std::string matrix_path;  // rayleigh: dense CSV, one row per line
  SolverConfig solver;
  PlateauConfig schedule;
  double restore_step = 1e-3;
  double t_end = 3.0;
  int check_seeds = 10;
  std::vector<double> eps_list;
  bool second_order = false;  // sweep: eps2 = eps instead of infinity
  std::string output_path;    // empty writes to the output stream
};

/// Fields present in the JSON object override those of base.
RunSpec run_spec_from_json(const std::string& json_text, RunSpec base = {});

Problem build_problem(const RunSpec& spec);

int cmd_solve(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_plateau(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_restore(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_check(const RunSpec& spec, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// Dispatches on spec.mode; maps exceptions to exit codes.
int run(const RunSpec& spec, std::ostream& out, std::ostream& err);

/// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fletcher
