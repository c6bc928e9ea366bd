// SPDX-License-Identifier: Apache-2.0
//
// Closed-form solution of the (tau, f, T) block for fixed offloaded data,
// slot shares and powers: group airtimes sit at their rate floors, the
// completion time is the larger of the local-compute floor and the unique
// root of the cloud-capacity balance, and cloud cycles follow in closed form.
#pragma once

#include <vector>

#include "nomec/scenario.hpp"

namespace nomec {

using PerUser = std::vector<std::vector<double>>; // [group][user]
using PerGroup = std::vector<double>;

struct TimeSubproblemInput {
  const Scenario* scenario = nullptr;
  PerUser demands_d; // bits per user, within [0, R]
  PerGroup shares_x; // slot shares, sum 1 (or pinned by the share mode)
  PerUser powers_p;  // W per user, within [0, P]
};

struct TimeSubproblemSolution {
  PerGroup tau;     // group airtimes [s]
  PerUser f;        // cloud cycles/s per user
  double T = 0.0;   // completion time [s]
  double objective = 0.0; // omega*T + (1-omega)*sum p*tau  (transmit part only)
  bool feasible = true;
  std::string diagnostic;
};

// Minimum airtime for group i to deliver demands_d at the fixed powers:
// max_j (suffix demand sum)/(aggregate SIC rate from j). 0 when the group
// demands nothing; +inf when a positive suffix demand meets zero power.
double rate_floor_time(const Scenario& s, std::size_t group, std::span<const double> demands_d,
                       std::span<const double> powers_p);

/// Local-compute floor on T: max_ij C_ij (R_ij - d_ij) / F_ij.
double local_time_floor(const Scenario& s, const PerUser& demands_d);

TimeSubproblemSolution solve_time_subproblem(const TimeSubproblemInput& in);

} // namespace nomec
