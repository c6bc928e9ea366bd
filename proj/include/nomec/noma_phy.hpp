// SPDX-License-Identifier: Apache-2.0
//
// Physical-layer math for one NOMA group. The base station decodes with
// successive interference cancellation in channel-gain order, so user j
// (gains sorted nonincreasing, index 0 strongest) sees interference only
// from weaker users l > j. Everything here is a pure function.
#pragma once

#include <optional>
#include <span>
#include <vector>

namespace nomec {

struct GroupRateInput {
  std::span<const double> powers_p; // [W], same order as gains
  std::span<const double> gains_h;  // linear power gains, nonincreasing
  double bandwidth_B = 0.0;         // [Hz]
  double noise_psd = 0.0;           // [W/Hz]
};

/// Per-user SIC rates: r_j = B log2(1 + p_j h_j / (sigma^2 B + sum_{l>j} p_l h_l)).
std::vector<double> shannon_rates(const GroupRateInput& in);

/// Aggregate rate of users j..end: B log2(1 + sum_{l>=j} p_l h_l / sigma^2 B).
/// Equals the tail sum of shannon_rates (telescoping identity).
double sum_rate_from(const GroupRateInput& in, std::size_t j);

// Inverts a demand vector into the unique per-user powers whose SIC rates
// deliver exactly demands_D bits in `airtime` seconds. Backward recursion on
// the received-power aggregates a_j = sum_{l>=j} p_l h_l:
//   a_j = 2^(D_j/(B t)) a_{j+1} + (2^(D_j/(B t)) - 1) sigma^2 B,  a_{M+1} = 0.
// Throws std::invalid_argument for airtime <= 0 with a positive demand.
std::vector<double> powers_from_demands(std::span<const double> demands_D, double airtime,
                                        std::span<const double> gains_h, double bandwidth_B,
                                        double noise_psd);

// Smallest airtime at which user j's required power (from the recursion
// above, given the whole demand vector) drops to power_cap. The required
// power is strictly decreasing in airtime, so the root is unique. Returns 0
// when D_j = 0 and +inf when power_cap = 0 with D_j > 0.
double min_airtime(std::size_t j, std::span<const double> demands_D, double power_cap,
                   std::span<const double> gains_h, double bandwidth_B, double noise_psd);

/// max_j min_airtime(j): smallest airtime at which the whole group fits
/// under its per-user power caps.
double group_min_airtime(std::span<const double> demands_D, std::span<const double> caps_P,
                         std::span<const double> gains_h, double bandwidth_B, double noise_psd);

// Minimum-total-power allocation delivering demands_D in `airtime` seconds
// under per-user caps, with the aggregate-rate constraints allowed to hold
// with slack. Greedy cover of the suffix constraints from the weakest user
// upward; reduces to powers_from_demands when no cap binds. Returns nullopt
// when the caps cannot support the demands.
std::optional<std::vector<double>> min_group_power(std::span<const double> demands_D,
                                                   double airtime,
                                                   std::span<const double> gains_h,
                                                   std::span<const double> caps_P,
                                                   double bandwidth_B, double noise_psd);

} // namespace nomec
