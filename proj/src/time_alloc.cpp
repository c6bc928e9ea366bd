// SPDX-License-Identifier: Apache-2.0
#include "nomec/time_alloc.hpp"

#include <cmath>
#include <limits>

#include "nomec/noma_phy.hpp"

namespace nomec {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kShareFloor = 1e-9; // shares are clamped here before division
} // namespace

double rate_floor_time(const Scenario& s, std::size_t group, std::span<const double> demands_d,
                       std::span<const double> powers_p) {
  const auto& g = s.groups[group];
  const double bw = s.group_bandwidth(group);
  const double noise = s.noise_psd * bw;
  const std::size_t m = g.users.size();

  double floor = 0.0;
  double suffix_bits = 0.0;
  double suffix_power = 0.0;
  for (std::size_t j = m; j-- > 0;) {
    suffix_bits += demands_d[j];
    suffix_power += powers_p[j] * g.users[j].channel_gain_h;
    if (suffix_bits <= 0.0) continue;
    const double agg_rate = bw * std::log1p(suffix_power / noise) / 0.6931471805599453;
    if (agg_rate <= 0.0) return kInf;
    floor = std::max(floor, suffix_bits / agg_rate);
  }
  return floor;
}

double local_time_floor(const Scenario& s, const PerUser& demands_d) {
  double floor = 0.0;
  for (std::size_t i = 0; i < s.group_count(); ++i)
    for (std::size_t j = 0; j < s.group_size(i); ++j) {
      const auto& u = s.user(i, j);
      floor = std::max(floor, u.cycles_per_bit_C * (u.data_size_R - demands_d[i][j]) /
                                  u.local_capacity_F);
    }
  return floor;
}

TimeSubproblemSolution solve_time_subproblem(const TimeSubproblemInput& in) {
  const Scenario& s = *in.scenario;
  const std::size_t n = s.group_count();
  TimeSubproblemSolution out;
  out.tau.assign(n, 0.0);
  out.f.resize(n);

  // tau_i sits at the rate floor; anything larger only burns energy and
  // cloud headroom.
  std::vector<double> share(n);
  bool any_demand = false;
  for (std::size_t i = 0; i < n; ++i) {
    out.f[i].assign(s.group_size(i), 0.0);
    share[i] = std::max(in.shares_x[i], kShareFloor);
    out.tau[i] = rate_floor_time(s, i, in.demands_d[i], in.powers_p[i]);
    if (std::isinf(out.tau[i])) {
      out.feasible = false;
      out.diagnostic = "group " + std::to_string(i) + " has demand with zero rate";
      return out;
    }
    for (double d : in.demands_d[i]) any_demand = any_demand || d > 0.0;
  }

  const double local_floor = local_time_floor(s, in.demands_d);
  double balanced = 0.0;
  if (any_demand) {
    // sum_ij C_ij d_ij x_i / (T x_i - tau_i) is strictly decreasing in T on
    // (max_i tau_i/x_i, inf); find where it meets the cloud capacity.
    const double pole = [&] {
      double v = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        bool demand = false;
        for (double d : in.demands_d[i]) demand = demand || d > 0.0;
        if (demand) v = std::max(v, out.tau[i] / share[i]);
      }
      return v;
    }();
    const auto load = [&](double t) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double denom = t * share[i] - out.tau[i];
        for (std::size_t j = 0; j < s.group_size(i); ++j)
          if (in.demands_d[i][j] > 0.0)
            sum += s.user(i, j).cycles_per_bit_C * in.demands_d[i][j] * share[i] / denom;
      }
      return sum;
    };
    double lo = pole * (1.0 + 1e-12) + 1e-300;
    double hi = std::max(lo * 2.0, pole + 1e-9);
    while (load(hi) > s.cloud_capacity_F) hi *= 2.0;
    for (int it = 0; it < 300 && (hi - lo) > 1e-13 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (load(mid) > s.cloud_capacity_F ? lo : hi) = mid;
    }
    balanced = hi;
  }

  out.T = std::max(local_floor, balanced);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < s.group_size(i); ++j)
      if (in.demands_d[i][j] > 0.0)
        out.f[i][j] = s.user(i, j).cycles_per_bit_C * in.demands_d[i][j] * share[i] /
                      (out.T * share[i] - out.tau[i]);

  double transmit = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < s.group_size(i); ++j)
      transmit += in.powers_p[i][j] * out.tau[i];
  out.objective = s.omega * out.T + (1.0 - s.omega) * transmit;
  return out;
}

} // namespace nomec
