#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fletcher/solver.hpp"

namespace fletcher::detail {

enum class InnerStop { converged, max_iters, stop_hook, rank_deficient, backtrack_failure };

struct InnerResult {
  Vector x;
  InnerStop stop = InnerStop::max_iters;
  long steps = 0;
  std::string message;
};

// Returns true to stop before the k-th step (k counts steps within this call).
using StopHook = std::function<bool(long k, const PenaltyEval& e)>;

// Runs the Gradient-Eigenstep loop, appending step records (with global index
// k_offset + k) but no terminal record.
InnerResult run_inner(const Problem& p, const Vector& x0, const SolverConfig& cfg,
                      const StopHook& stop, const StepObserver& observer,
                      std::vector<IterationRecord>& records, long k_offset);

// Terminal record and certificate for the point x under penalty parameter beta.
void finish_trace(const Problem& p, const Vector& x, double beta, RunTrace& trace);

}  // namespace fletcher::detail
