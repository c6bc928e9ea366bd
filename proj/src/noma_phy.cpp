// SPDX-License-Identifier: Apache-2.0
#include "nomec/noma_phy.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace nomec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = 0.6931471805599453;

// Suffix aggregates v_j = sigma^2 B + sum_{l>=j} p_l h_l, length M+1.
std::vector<double> noise_plus_aggregate(const GroupRateInput& in) {
  const std::size_t m = in.gains_h.size();
  std::vector<double> v(m + 1);
  v[m] = in.noise_psd * in.bandwidth_B;
  for (std::size_t j = m; j-- > 0;)
    v[j] = v[j + 1] + in.powers_p[j] * in.gains_h[j];
  return v;
}

} // namespace

std::vector<double> shannon_rates(const GroupRateInput& in) {
  const std::size_t m = in.gains_h.size();
  const auto v = noise_plus_aggregate(in);
  std::vector<double> rates(m);
  for (std::size_t j = 0; j < m; ++j)
    rates[j] = in.bandwidth_B * std::log1p(in.powers_p[j] * in.gains_h[j] / v[j + 1]) / kLn2;
  return rates;
}

double sum_rate_from(const GroupRateInput& in, std::size_t j) {
  const std::size_t m = in.gains_h.size();
  if (j >= m) throw std::out_of_range("sum_rate_from: user index out of range");
  const double noise = in.noise_psd * in.bandwidth_B;
  double agg = 0.0;
  for (std::size_t l = m; l-- > j;) agg += in.powers_p[l] * in.gains_h[l];
  return in.bandwidth_B * std::log1p(agg / noise) / kLn2;
}

std::vector<double> powers_from_demands(std::span<const double> demands_D, double airtime,
                                        std::span<const double> gains_h, double bandwidth_B,
                                        double noise_psd) {
  const std::size_t m = gains_h.size();
  std::vector<double> p(m, 0.0);
  bool any = false;
  for (double d : demands_D) any = any || d > 0.0;
  if (!any) return p;
  if (!(airtime > 0.0))
    throw std::invalid_argument("powers_from_demands: airtime must be positive with nonzero demand");

  const double noise = noise_psd * bandwidth_B;
  double a_next = 0.0; // a_{j+1}
  for (std::size_t j = m; j-- > 0;) {
    // a_j - a_{j+1} = (2^(D_j/(B t)) - 1)(a_{j+1} + sigma^2 B); expm1 keeps
    // precision for small demands.
    const double grow = std::expm1(kLn2 * demands_D[j] / (bandwidth_B * airtime));
    const double delta = grow * (a_next + noise);
    p[j] = delta / gains_h[j];
    a_next += delta;
  }
  return p;
}

namespace {

// Power user j must transmit so the whole group meets demands_D in `airtime`.
double required_power(std::size_t j, std::span<const double> demands_D, double airtime,
                      std::span<const double> gains_h, double bandwidth_B, double noise) {
  double a_next = 0.0;
  for (std::size_t l = demands_D.size(); l-- > j + 1;)
    a_next += std::expm1(kLn2 * demands_D[l] / (bandwidth_B * airtime)) * (a_next + noise);
  const double grow = std::expm1(kLn2 * demands_D[j] / (bandwidth_B * airtime));
  return grow * (a_next + noise) / gains_h[j];
}

} // namespace

double min_airtime(std::size_t j, std::span<const double> demands_D, double power_cap,
                   std::span<const double> gains_h, double bandwidth_B, double noise_psd) {
  if (j >= gains_h.size()) throw std::out_of_range("min_airtime: user index out of range");
  if (demands_D[j] <= 0.0) return 0.0;
  if (power_cap <= 0.0) return kInf;

  const double noise = noise_psd * bandwidth_B;
  const auto need = [&](double t) {
    return required_power(j, demands_D, t, gains_h, bandwidth_B, noise);
  };

  // Bracket around the single-user estimate, then bisect; the required power
  // is strictly decreasing in airtime.
  double lo = demands_D[j] / (bandwidth_B * std::log2(1.0 + power_cap * gains_h[j] / noise));
  double hi = lo;
  if (need(lo) > power_cap) {
    while (need(hi) > power_cap) {
      hi *= 2.0;
      if (hi > 1e30) return kInf;
    }
  } else {
    while (need(lo) <= power_cap && lo > 1e-300) lo *= 0.5;
  }
  for (int it = 0; it < 200 && (hi - lo) > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (need(mid) > power_cap ? lo : hi) = mid;
  }
  return hi;
}

double group_min_airtime(std::span<const double> demands_D, std::span<const double> caps_P,
                         std::span<const double> gains_h, double bandwidth_B, double noise_psd) {
  double worst = 0.0;
  for (std::size_t j = 0; j < gains_h.size(); ++j)
    worst = std::max(worst, min_airtime(j, demands_D, caps_P[j], gains_h, bandwidth_B, noise_psd));
  return worst;
}

std::optional<std::vector<double>> min_group_power(std::span<const double> demands_D,
                                                   double airtime,
                                                   std::span<const double> gains_h,
                                                   std::span<const double> caps_P,
                                                   double bandwidth_B, double noise_psd) {
  const std::size_t m = gains_h.size();
  std::vector<double> p(m, 0.0);
  bool any = false;
  for (double d : demands_D) any = any || d > 0.0;
  if (!any) return p;
  if (!(airtime > 0.0)) return std::nullopt;

  const double noise = noise_psd * bandwidth_B;
  // Suffix constraint j needs sum_{l>=j} p_l h_l >= g_j.
  std::vector<double> g(m);
  double suffix_bits = 0.0;
  for (std::size_t j = m; j-- > 0;) {
    suffix_bits += demands_D[j];
    g[j] = noise * std::expm1(kLn2 * suffix_bits / (bandwidth_B * airtime));
  }

  double agg = 0.0; // sum over already assigned users of p_l h_l
  for (std::size_t j = m; j-- > 0;) {
    double deficit = g[j] - agg;
    // Cover from the strongest eligible user down; a watt is worth h_l of
    // aggregate, so stronger users cover deficits with less power.
    for (std::size_t l = j; l < m && deficit > 0.0; ++l) {
      const double add = std::min(caps_P[l] - p[l], deficit / gains_h[l]);
      if (add <= 0.0) continue;
      p[l] += add;
      agg += add * gains_h[l];
      deficit = g[j] - agg;
    }
    if (deficit > 1e-9 * (g[j] + noise)) return std::nullopt;
  }
  return p;
}

} // namespace nomec
