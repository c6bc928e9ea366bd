// SPDX-License-Identifier: Apache-2.0
//
// Lagrangian dual solver for the (d, x, p) block with fixed (tau, f, T):
// closed-form primal updates from the KKT stationarity conditions alternate
// with projected subgradient steps on the multipliers. Every iterate is
// projected back to a feasible candidate and the best one wins, so the
// returned point never regresses behind the incoming iterate.
#pragma once

#include <functional>
#include <string>

#include "nomec/time_alloc.hpp"

namespace nomec {

struct DualState {
  PerUser beta;   // completion-time coupling (per user)
  PerUser lambda; // aggregate-rate constraints (per user)
  PerUser zeta;   // p >= 0 (kept for completeness; the box clamp does the work)
  PerUser eta;    // p <= P (same)
  PerUser theta;  // d >= D
  PerUser nu;     // d^2 <= R^2
  double mu = 0.0; // share simplex; recomputed from beta each iteration
  double step_scale_delta0 = 0.1;
  int iteration = 0;
};

struct EnergySubproblemInput {
  const Scenario* scenario = nullptr;
  PerGroup tau; // fixed group airtimes [s]
  PerUser f;    // fixed cloud allocations [cycles/s]
  double T = 0.0;
};

struct EnergyPoint {
  PerUser d;
  PerGroup x;
  PerUser p;
};

struct EnergySubproblemSolution {
  EnergyPoint point;
  double energy = 0.0;       // sum p*tau + sum C*Q*(R-d)
  double kkt_residual = 0.0; // worst relative primal violation of the result
  bool feasible = false;
  int iterations = 0;
  double worst_residual = 0.0; // worst violation seen when infeasible
  std::string diagnostic;
};

struct DualTraceEntry {
  int iteration;
  double dual_value;
  double best_objective;
  double max_residual;
};

struct EnergyOptions {
  int max_iterations = 20000;
  int min_iterations = 300; // before the stall window may fire
  double tol = 1e-6;
  int window = 10;
  std::function<void(const DualTraceEntry&)> trace_sink; // optional diagnostics
};

/// Smallest admissible offload per user at completion time T:
/// D_ij = max{(C_ij R_ij - T F_ij) / C_ij, 0}.
PerUser lower_offload_bound(const Scenario& s, double T);

// Primal updates given the multipliers. Each is the exact block minimizer of
// the Lagrangian over its box/simplex (d falls back to bang-bang between the
// offload bounds when nu = 0).
PerUser update_primal_d(const DualState& st, const EnergySubproblemInput& in,
                        const PerUser& lower_bound);
PerGroup update_primal_x(const DualState& st, const EnergySubproblemInput& in);
PerUser update_primal_p(const DualState& st, const EnergySubproblemInput& in);

// Projected subgradient step on all multipliers with the dynamically scaled
// stepsize delta0/sqrt(n); mu is recomputed from beta afterwards.
void update_multipliers(DualState& st, const EnergyPoint& primal,
                        const EnergySubproblemInput& in, const PerUser& lower_bound);

/// Lagrangian value at (primal, st); the dual objective when primal is the
/// block minimizer.
double dual_value(const DualState& st, const EnergyPoint& primal,
                  const EnergySubproblemInput& in, const PerUser& lower_bound);

// The incoming point must be feasible for the fixed (tau, f, T); it seeds
// both the multiplier warm start and the best-candidate tracking.
EnergySubproblemSolution solve_energy_subproblem(const EnergySubproblemInput& in,
                                                 const EnergyPoint& incoming,
                                                 const EnergyOptions& opts = {});

/// Transmit plus residual local energy of a (d, x, p) point.
double energy_of(const Scenario& s, const EnergyPoint& pt, const PerGroup& tau);

} // namespace nomec
