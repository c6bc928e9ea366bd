// SPDX-License-Identifier: Apache-2.0
#include "nomec/energy_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "nomec/noma_phy.hpp"

namespace nomec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;
constexpr double kShareFloor = 1e-9;

PerUser per_user_zeros(const Scenario& s) {
  PerUser v(s.group_count());
  for (std::size_t i = 0; i < s.group_count(); ++i) v[i].assign(s.group_size(i), 0.0);
  return v;
}

double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

// Cloud execution time with the f = 0, d = 0 convention.
double cloud_time(double C, double d, double f) {
  if (d <= 0.0) return 0.0;
  if (f <= 0.0) return kInf;
  return C * d / f;
}

struct StepScales {
  double beta = 0.0, zeta = 0.0, eta = 0.0, theta = 0.0, nu = 0.0;
  PerUser lambda; // per user: rate residuals scale with the suffix data size
};

StepScales make_scales(const EnergySubproblemInput& in) {
  const Scenario& s = *in.scenario;
  double e_scale = 0.0, r_max = 0.0, p_max = 0.0;
  for (std::size_t i = 0; i < s.group_count(); ++i)
    for (std::size_t j = 0; j < s.group_size(i); ++j) {
      const auto& u = s.user(i, j);
      e_scale += u.cycles_per_bit_C * u.energy_per_cycle_Q * u.data_size_R;
      r_max = std::max(r_max, u.data_size_R);
      p_max = std::max(p_max, u.max_power_P);
    }
  e_scale = std::max(e_scale, 1e-30);
  p_max = std::max(p_max, 1e-12);

  StepScales sc;
  sc.beta = e_scale / (in.T * in.T);
  sc.zeta = sc.eta = e_scale / (p_max * p_max);
  sc.theta = e_scale / (r_max * r_max);
  sc.nu = e_scale / (r_max * r_max * r_max * r_max);
  sc.lambda = per_user_zeros(s);
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    double suffix = 0.0;
    for (std::size_t j = s.group_size(i); j-- > 0;) {
      suffix += s.user(i, j).data_size_R;
      sc.lambda[i][j] = e_scale / (suffix * suffix);
    }
  }
  return sc;
}

} // namespace

PerUser lower_offload_bound(const Scenario& s, double T) {
  PerUser d = per_user_zeros(s);
  for (std::size_t i = 0; i < s.group_count(); ++i)
    for (std::size_t j = 0; j < s.group_size(i); ++j) {
      const auto& u = s.user(i, j);
      d[i][j] = std::max((u.cycles_per_bit_C * u.data_size_R - T * u.local_capacity_F) /
                             u.cycles_per_bit_C,
                         0.0);
    }
  return d;
}

PerUser update_primal_d(const DualState& st, const EnergySubproblemInput& in,
                        const PerUser& lower_bound) {
  const Scenario& s = *in.scenario;
  PerUser d = per_user_zeros(s);
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    double lambda_prefix = 0.0;
    for (std::size_t j = 0; j < s.group_size(i); ++j) {
      const auto& u = s.user(i, j);
      lambda_prefix += st.lambda[i][j];
      const double f = in.f[i][j];
      const double lo = lower_bound[i][j];
      if (f <= 0.0) { // no cloud share: the user cannot offload beyond D
        d[i][j] = lo;
        continue;
      }
      const double nu = st.nu[i][j];
      if (nu > 0.0) {
        const double num = f * u.cycles_per_bit_C * u.energy_per_cycle_Q -
                           st.beta[i][j] * u.cycles_per_bit_C - f * lambda_prefix +
                           f * st.theta[i][j];
        d[i][j] = clamp(num / (2.0 * f * nu), lo, u.data_size_R);
      } else {
        const double grad = -u.cycles_per_bit_C * u.energy_per_cycle_Q +
                            st.beta[i][j] * u.cycles_per_bit_C / f + lambda_prefix -
                            st.theta[i][j];
        d[i][j] = grad > 0.0 ? lo : u.data_size_R;
      }
    }
  }
  return d;
}

PerGroup update_primal_x(const DualState& st, const EnergySubproblemInput& in) {
  const Scenario& s = *in.scenario;
  const std::size_t n = s.group_count();
  PerGroup x(n, 0.0);
  if (s.share_mode != ShareMode::Simplex) {
    for (std::size_t i = 0; i < n; ++i) x[i] = s.fixed_share(i);
    return x;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double bt = 0.0;
    for (double b : st.beta[i]) bt += b;
    x[i] = std::sqrt(bt * in.tau[i]);
    total += x[i];
  }
  if (total <= 0.0) {
    std::fill(x.begin(), x.end(), 1.0 / static_cast<double>(n));
    return x;
  }
  for (double& v : x) v /= total; // equals sqrt(beta tau / mu) with the mu of (D.6)
  return x;
}

PerUser update_primal_p(const DualState& st, const EnergySubproblemInput& in) {
  const Scenario& s = *in.scenario;
  PerUser p = per_user_zeros(s);
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    if (in.tau[i] <= 0.0) continue;
    const auto& users = s.groups[i].users;
    const std::size_t m = users.size();
    const double bw = s.group_bandwidth(i);
    const double noise = s.noise_psd * bw;
    // Stationarity pins the noise-plus-interference aggregate of each user;
    // walking from the weakest user up, the target for user j depends only
    // on lambda and the already fixed weaker aggregates.
    double v_next = noise;
    for (std::size_t j = m; j-- > 0;) {
      const double h = users[j].channel_gain_h;
      double v_target;
      if (j == 0) {
        v_target = bw * st.lambda[i][j] * h / kLn2;
      } else {
        const double h_prev = users[j - 1].channel_gain_h;
        const double gap = 1.0 / h - 1.0 / h_prev;
        v_target = gap > 0.0 ? bw * st.lambda[i][j] / (kLn2 * gap)
                             : (st.lambda[i][j] > 0.0 ? kInf : 0.0);
      }
      p[i][j] = clamp((v_target - v_next) / h, 0.0, users[j].max_power_P);
      v_next += p[i][j] * h;
    }
  }
  return p;
}

void update_multipliers(DualState& st, const EnergyPoint& primal,
                        const EnergySubproblemInput& in, const PerUser& lower_bound) {
  const Scenario& s = *in.scenario;
  const StepScales sc = make_scales(in);
  const double step = st.step_scale_delta0 / std::sqrt(static_cast<double>(std::max(st.iteration, 1)));

  for (std::size_t i = 0; i < s.group_count(); ++i) {
    const std::size_t m = s.group_size(i);
    const double bw = s.group_bandwidth(i);
    const double noise = s.noise_psd * bw;
    const double x = std::max(primal.x[i], kShareFloor);

    double suffix_d = 0.0, suffix_ph = 0.0;
    std::vector<double> rate_resid(m);
    for (std::size_t j = m; j-- > 0;) {
      suffix_d += primal.d[i][j];
      suffix_ph += primal.p[i][j] * s.user(i, j).channel_gain_h;
      rate_resid[j] = suffix_d - bw * in.tau[i] * std::log1p(suffix_ph / noise) / kLn2;
    }

    for (std::size_t j = 0; j < m; ++j) {
      const auto& u = s.user(i, j);
      const double time_resid =
          in.tau[i] / x + cloud_time(u.cycles_per_bit_C, primal.d[i][j], in.f[i][j]) - in.T;
      st.beta[i][j] = std::max(0.0, st.beta[i][j] + step * sc.beta * time_resid);
      st.lambda[i][j] = std::max(0.0, st.lambda[i][j] + step * sc.lambda[i][j] * rate_resid[j]);
      st.zeta[i][j] = std::max(0.0, st.zeta[i][j] - step * sc.zeta * primal.p[i][j]);
      st.eta[i][j] =
          std::max(0.0, st.eta[i][j] + step * sc.eta * (primal.p[i][j] - u.max_power_P));
      st.theta[i][j] =
          std::max(0.0, st.theta[i][j] + step * sc.theta * (lower_bound[i][j] - primal.d[i][j]));
      st.nu[i][j] = std::max(0.0, st.nu[i][j] + step * sc.nu * (primal.d[i][j] * primal.d[i][j] -
                                                                u.data_size_R * u.data_size_R));
    }
  }

  double root_sum = 0.0;
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    double bt = 0.0;
    for (double b : st.beta[i]) bt += b;
    root_sum += std::sqrt(bt * in.tau[i]);
  }
  st.mu = root_sum * root_sum;
  ++st.iteration;
}

double dual_value(const DualState& st, const EnergyPoint& primal,
                  const EnergySubproblemInput& in, const PerUser& lower_bound) {
  const Scenario& s = *in.scenario;
  double value = 0.0;
  double share_sum = 0.0;
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    const std::size_t m = s.group_size(i);
    const double bw = s.group_bandwidth(i);
    const double noise = s.noise_psd * bw;
    const double x = std::max(primal.x[i], kShareFloor);
    share_sum += primal.x[i];

    double suffix_d = 0.0, suffix_ph = 0.0;
    for (std::size_t j = m; j-- > 0;) {
      const auto& u = s.user(i, j);
      suffix_d += primal.d[i][j];
      suffix_ph += primal.p[i][j] * u.channel_gain_h;
      const double rate = bw * in.tau[i] * std::log1p(suffix_ph / noise) / kLn2;

      value += in.tau[i] * primal.p[i][j] +
               u.cycles_per_bit_C * u.energy_per_cycle_Q * (u.data_size_R - primal.d[i][j]);
      value += st.beta[i][j] *
               (in.tau[i] / x + cloud_time(u.cycles_per_bit_C, primal.d[i][j], in.f[i][j]) - in.T);
      value += st.lambda[i][j] * (suffix_d - rate);
      value += -st.zeta[i][j] * primal.p[i][j] +
               st.eta[i][j] * (primal.p[i][j] - u.max_power_P);
      value += st.theta[i][j] * (lower_bound[i][j] - primal.d[i][j]);
      value += st.nu[i][j] * (primal.d[i][j] * primal.d[i][j] - u.data_size_R * u.data_size_R);
    }
  }
  value += st.mu * (share_sum - 1.0);
  return value;
}

double energy_of(const Scenario& s, const EnergyPoint& pt, const PerGroup& tau) {
  double e = 0.0;
  for (std::size_t i = 0; i < s.group_count(); ++i)
    for (std::size_t j = 0; j < s.group_size(i); ++j) {
      const auto& u = s.user(i, j);
      e += pt.p[i][j] * tau[i] +
           u.cycles_per_bit_C * u.energy_per_cycle_Q * (u.data_size_R - pt.d[i][j]);
    }
  return e;
}

namespace {

struct Candidate {
  EnergyPoint point;
  double energy = kInf;
  double residual = kInf;
  bool ok = false;
};

// Worst relative violation of the subproblem constraints at a point.
double point_residual(const EnergySubproblemInput& in, const EnergyPoint& pt,
                      const PerUser& lower_bound) {
  const Scenario& s = *in.scenario;
  double worst = 0.0;
  double share_sum = 0.0;
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    const std::size_t m = s.group_size(i);
    const double bw = s.group_bandwidth(i);
    const double noise = s.noise_psd * bw;
    share_sum += pt.x[i];
    if (pt.x[i] < 0.0) worst = std::max(worst, -pt.x[i]);

    double suffix_d = 0.0, suffix_ph = 0.0;
    for (std::size_t j = m; j-- > 0;) {
      const auto& u = s.user(i, j);
      suffix_d += pt.d[i][j];
      suffix_ph += pt.p[i][j] * u.channel_gain_h;
      if (suffix_d > 0.0) {
        const double rate = bw * in.tau[i] * std::log1p(suffix_ph / noise) / kLn2;
        worst = std::max(worst, (suffix_d - rate) / suffix_d);
      }
      const double x = std::max(pt.x[i], kShareFloor);
      const double t_used =
          in.tau[i] / x + cloud_time(u.cycles_per_bit_C, pt.d[i][j], in.f[i][j]);
      worst = std::max(worst, (t_used - in.T) / in.T);
      worst = std::max(worst, (lower_bound[i][j] - pt.d[i][j]) / u.data_size_R);
      worst = std::max(worst, (pt.d[i][j] - u.data_size_R) / u.data_size_R);
      const double p_scale = std::max(u.max_power_P, 1e-12);
      worst = std::max(worst, (pt.p[i][j] - u.max_power_P) / p_scale);
      worst = std::max(worst, -pt.p[i][j] / p_scale);
    }
  }
  if (s.share_mode == ShareMode::Simplex)
    worst = std::max(worst, std::abs(share_sum - 1.0));
  return worst;
}

class Restorer {
 public:
  Restorer(const EnergySubproblemInput& in, const PerUser& lower_bound)
      : in_(in), s_(*in.scenario), lower_(lower_bound) {
    const std::size_t n = s_.group_count();
    share_floor_.assign(n, 0.0);
    cloud_floor_.assign(n, 0.0);
    ok_ = true;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < s_.group_size(i); ++j) {
        const double ct = cloud_time(s_.user(i, j).cycles_per_bit_C, lower_[i][j], in_.f[i][j]);
        cloud_floor_[i] = std::max(cloud_floor_[i], ct);
      }
      if (cloud_floor_[i] > in_.T) {
        ok_ = false;
      } else if (in_.tau[i] > 0.0) {
        if (cloud_floor_[i] < in_.T)
          share_floor_[i] = in_.tau[i] / (in_.T - cloud_floor_[i]);
        else
          ok_ = false;
      }
    }
    double total_floor = 0.0;
    for (double v : share_floor_) total_floor += v;
    if (s_.share_mode == ShareMode::Simplex) {
      if (total_floor > 1.0 + 1e-12) ok_ = false;
    } else {
      for (std::size_t i = 0; i < n; ++i)
        if (share_floor_[i] > s_.fixed_share(i) * (1.0 + 1e-12)) ok_ = false;
    }
  }

  bool input_feasible() const { return ok_; }

  // Projects a raw iterate to the nearest-in-spirit feasible candidate:
  // clip d, lift x over its floors, cap d by the cloud deadline, then find
  // supporting powers (the raw ones if they already deliver the rates, else
  // the minimum-power allocation, shrinking d toward D if the caps demand).
  Candidate restore(const EnergyPoint& raw) const {
    Candidate cand;
    if (!ok_) return cand;
    const std::size_t n = s_.group_count();
    EnergyPoint pt = raw;

    // Shares.
    if (s_.share_mode == ShareMode::Simplex) {
      double floor_total = 0.0, extra_total = 0.0;
      std::vector<double> extra(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        floor_total += share_floor_[i];
        extra[i] = std::max(raw.x[i] - share_floor_[i], 0.0);
        extra_total += extra[i];
      }
      const double slack = 1.0 - floor_total;
      for (std::size_t i = 0; i < n; ++i)
        pt.x[i] = share_floor_[i] +
                  (extra_total > 0.0 ? slack * extra[i] / extra_total
                                     : slack / static_cast<double>(n));
    } else {
      for (std::size_t i = 0; i < n; ++i) pt.x[i] = s_.fixed_share(i);
    }

    // Demands and powers, group by group.
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t m = s_.group_size(i);
      const auto& users = s_.groups[i].users;
      const double bw = s_.group_bandwidth(i);
      std::vector<double> gains(m), caps(m);
      for (std::size_t j = 0; j < m; ++j) {
        gains[j] = users[j].channel_gain_h;
        caps[j] = users[j].max_power_P;
      }

      const double budget = in_.T - in_.tau[i] / std::max(pt.x[i], kShareFloor);
      for (std::size_t j = 0; j < m; ++j) {
        double hi = users[j].data_size_R;
        if (in_.f[i][j] <= 0.0 || in_.tau[i] <= 0.0)
          hi = lower_[i][j];
        else
          hi = std::min(hi, in_.f[i][j] * budget / users[j].cycles_per_bit_C);
        pt.d[i][j] = clamp(raw.d[i][j], lower_[i][j], std::max(hi, lower_[i][j]));
      }

      if (in_.tau[i] <= 0.0) {
        // No airtime: only zero demand is deliverable.
        for (double d : pt.d[i])
          if (d > 0.0) return cand;
        std::fill(pt.p[i].begin(), pt.p[i].end(), 0.0);
        continue;
      }

      // For fixed demands the minimum-power allocation dominates every
      // other feasible power choice, so restoration always uses it.
      auto pmin = min_group_power(pt.d[i], in_.tau[i], gains, caps, bw, s_.noise_psd);
      if (!pmin) {
        // Caps cannot carry these demands; pull d back toward the floor.
        std::vector<double> trial(m);
        const auto demands_at = [&](double k) {
          for (std::size_t j = 0; j < m; ++j)
            trial[j] = lower_[i][j] + k * (pt.d[i][j] - lower_[i][j]);
          return std::span<const double>(trial);
        };
        if (!min_group_power(demands_at(0.0), in_.tau[i], gains, caps, bw, s_.noise_psd))
          return cand; // even the floor is unreachable at this airtime
        double lo_k = 0.0, hi_k = 1.0;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo_k + hi_k);
          if (min_group_power(demands_at(mid), in_.tau[i], gains, caps, bw, s_.noise_psd))
            lo_k = mid;
          else
            hi_k = mid;
        }
        demands_at(lo_k);
        pt.d[i] = trial;
        pmin = min_group_power(pt.d[i], in_.tau[i], gains, caps, bw, s_.noise_psd);
        if (!pmin) return cand;
      }
      pt.p[i] = std::move(*pmin);
    }

    cand.residual = point_residual(in_, pt, lower_);
    if (cand.residual > 1e-7) return cand;
    cand.energy = energy_of(s_, pt, in_.tau);
    cand.point = std::move(pt);
    cand.ok = true;
    return cand;
  }

 private:
  const EnergySubproblemInput& in_;
  const Scenario& s_;
  const PerUser& lower_;
  std::vector<double> share_floor_;
  std::vector<double> cloud_floor_;
  bool ok_ = true;
};

void warm_start_multipliers(DualState& st, const EnergySubproblemInput& in,
                            const EnergyPoint& incoming) {
  const Scenario& s = *in.scenario;
  for (std::size_t i = 0; i < s.group_count(); ++i) {
    const std::size_t m = s.group_size(i);
    const double bw = s.group_bandwidth(i);
    const double noise = s.noise_psd * bw;
    // Multipliers that make the stationarity recursion reproduce the
    // incoming powers, so the first primal sweep starts near the iterate.
    std::vector<double> v(m + 1);
    v[m] = noise;
    for (std::size_t j = m; j-- > 0;)
      v[j] = v[j + 1] + incoming.p[i][j] * s.user(i, j).channel_gain_h;
    double lambda_prefix = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double h = s.user(i, j).channel_gain_h;
      double gap;
      if (j == 0)
        gap = 1.0 / h;
      else {
        const double h_prev = s.user(i, j - 1).channel_gain_h;
        gap = 1.0 / h - 1.0 / h_prev;
      }
      st.lambda[i][j] = v[j] * kLn2 * gap / bw;
      lambda_prefix += st.lambda[i][j];
      const auto& u = s.user(i, j);
      if (in.f[i][j] > 0.0)
        st.beta[i][j] = std::max(
            0.0, in.f[i][j] * (u.cycles_per_bit_C * u.energy_per_cycle_Q - lambda_prefix) /
                     u.cycles_per_bit_C);
    }
  }
}

} // namespace

EnergySubproblemSolution solve_energy_subproblem(const EnergySubproblemInput& in,
                                                 const EnergyPoint& incoming,
                                                 const EnergyOptions& opts) {
  const Scenario& s = *in.scenario;
  if (!(in.T > 0.0)) throw std::invalid_argument("energy subproblem: T must be positive");
  EnergySubproblemSolution out;

  const PerUser lower = lower_offload_bound(s, in.T);
  Restorer restorer(in, lower);

  Candidate best = restorer.restore(incoming);
  if (!restorer.input_feasible() || !best.ok) {
    // Try the least-demand point before giving up.
    EnergyPoint floor_pt{lower, PerGroup(s.group_count(), 1.0 / double(s.group_count())),
                         per_user_zeros(s)};
    Candidate fallback = restorer.restore(floor_pt);
    if (!fallback.ok) {
      out.feasible = false;
      out.worst_residual = std::min(best.residual, fallback.residual);
      out.diagnostic = "no feasible (d, x, p) found for the fixed (tau, f, T)";
      return out;
    }
    best = std::move(fallback);
  }

  DualState st;
  st.beta = per_user_zeros(s);
  st.lambda = per_user_zeros(s);
  st.zeta = per_user_zeros(s);
  st.eta = per_user_zeros(s);
  st.theta = per_user_zeros(s);
  st.nu = per_user_zeros(s);
  st.iteration = 1;
  warm_start_multipliers(st, in, best.point);

  DualState st_best = st;
  double g_best = -kInf;
  int strikes = 0;
  int stall = 0;
  double prev_best_energy = best.energy;

  EnergyPoint ema = best.point;
  constexpr double kEmaRate = 0.02;

  int n_iter = 0;
  for (; n_iter < opts.max_iterations; ++n_iter) {
    EnergyPoint raw;
    raw.d = update_primal_d(st, in, lower);
    raw.x = update_primal_x(st, in);
    raw.p = update_primal_p(st, in);

    for (std::size_t i = 0; i < s.group_count(); ++i) {
      ema.x[i] += kEmaRate * (raw.x[i] - ema.x[i]);
      for (std::size_t j = 0; j < s.group_size(i); ++j) {
        ema.d[i][j] += kEmaRate * (raw.d[i][j] - ema.d[i][j]);
        ema.p[i][j] += kEmaRate * (raw.p[i][j] - ema.p[i][j]);
      }
    }

    Candidate cand = restorer.restore(raw);
    if (cand.ok && cand.energy < best.energy) best = cand;
    if (n_iter % 5 == 0) {
      Candidate avg = restorer.restore(ema);
      if (avg.ok && avg.energy < best.energy) best = avg;
    }

    const double g = dual_value(st, raw, in, lower);
    if (g > g_best) {
      g_best = g;
      st_best = st;
      strikes = 0;
    } else if (++strikes > 25) {
      // Oscillating dual: halve the step and resume from the best multipliers.
      const int it_now = st.iteration;
      const double delta = st.step_scale_delta0 * 0.5;
      st = st_best;
      st.iteration = it_now;
      st.step_scale_delta0 = delta;
      strikes = 0;
    }

    update_multipliers(st, raw, in, lower);

    const double change = std::abs(prev_best_energy - best.energy) /
                          std::max(std::abs(best.energy), 1e-30);
    prev_best_energy = best.energy;
    stall = (std::max(change, best.residual) < opts.tol) ? stall + 1 : 0;

    if (opts.trace_sink)
      opts.trace_sink({n_iter + 1, g, best.energy, best.residual});

    if (n_iter + 1 >= opts.min_iterations && stall >= opts.window) {
      ++n_iter;
      break;
    }
  }

  out.point = best.point;
  out.energy = best.energy;
  out.kkt_residual = best.residual;
  out.feasible = true;
  out.iterations = n_iter;
  return out;
}

} // namespace nomec
