// SPDX-License-Identifier: Apache-2.0
//
// Scenario data for the NOMA uplink offloading planner: per-user task and
// channel parameters, random instance generation, user pairing, and the
// TDMA/FDMA baseline derivations. All quantities are SI (watts, seconds,
// bits, Hz); dB/dBm conversions happen only at configuration boundaries.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nomec {

struct UserParams {
  double data_size_R = 0.0;        // task input [bits]
  double cycles_per_bit_C = 0.0;   // CPU work per input bit [cycles/bit]
  double local_capacity_F = 0.0;   // local CPU speed [cycles/s]
  double energy_per_cycle_Q = 0.0; // local compute energy [J/cycle]
  double max_power_P = 0.0;        // transmit power cap [W]
  double channel_gain_h = 0.0;     // linear power gain to the base station
};

// How the per-group slot shares x_i are constrained.
//   Simplex      - sum_i x_i = 1, shares optimized (NOMA groups, TDMA slots)
//   FixedUniform - x_i = 1/N pinned (equal time sharing)
//   FixedFull    - x_i = 1 pinned (FDMA subbands, no time division)
enum class ShareMode { Simplex, FixedUniform, FixedFull };

struct Group {
  std::vector<UserParams> users; // sorted by channel gain, strongest first
  double bandwidth_B = 0.0;      // [Hz]; 0 means the scenario-wide bandwidth
};

struct Scenario {
  std::vector<Group> groups;
  double bandwidth_B = 0.0;      // system bandwidth [Hz]
  double noise_psd = 0.0;        // noise power spectral density [W/Hz]
  double cloud_capacity_F = 0.0; // edge cloud capacity [cycles/s]; may be +inf
  double omega = 0.5;            // completion-time weight in [0, 1]
  ShareMode share_mode = ShareMode::Simplex;

  std::size_t group_count() const { return groups.size(); }
  std::size_t user_count() const;
  std::size_t group_size(std::size_t i) const { return groups[i].users.size(); }
  const UserParams& user(std::size_t i, std::size_t j) const { return groups[i].users[j]; }
  double group_bandwidth(std::size_t i) const;
  bool infinite_capacity() const;
  // Pinned share for group i, or 0 when shares are free (Simplex).
  double fixed_share(std::size_t i) const;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
};

enum class PairingMethod { SS, SW, SM, OneGroup, Singletons };

enum class Scheme { NOMA, NOMA_ET, NOMA_EXH, TDMA, FDMA };

struct SchemeConfig {
  Scheme scheme = Scheme::NOMA;
  int start_count = 50; // multi-start budget for NOMA_EXH / NOMA_ET
};

// Random instance model following the simulation setup: uniform user
// distances, log-distance path loss plus lognormal shadowing and
// exponentially distributed small-scale power fading.
struct RandomModel {
  int user_count_M = 30;
  double cell_radius_km_min = 0.05;
  double cell_radius_km_max = 0.5;
  double pathloss_intercept_db = 128.1;
  double pathloss_slope_db = 37.6; // dB per decade of km
  double shadow_sigma_db = 4.0;
  std::uint64_t seed = 1;
  double cycles_per_bit_min = 500.0;
  double cycles_per_bit_max = 1500.0;
  // Per-user task constants (equal across users).
  double data_size_R = 1e5;        // bits
  double local_capacity_F = 1e9;   // cycles/s
  double energy_per_cycle_Q = 1e-10; // J/cycle
  double max_power_P = 0.0012589254117941675; // W (1 dBm)
};

struct GlobalParams {
  double bandwidth_B = 1e7;        // Hz
  double noise_psd = 1.2589254117941663e-20; // W/Hz (-169 dBm/Hz)
  double cloud_capacity_F = 2e10;  // cycles/s, may be +inf
  double omega = 0.5;
};

/// 10^((dBm - 30)/10), watts.
double dbm_to_watt(double dbm);

/// Deterministic derived seed for sub-stream `stream` of `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

// Draws M users with random placement, shadowing, fading and cycles/bit.
// The result holds one flat group (strongest first) pending pairing.
// Identical (model, globals) reproduce the scenario bit for bit.
Scenario generate_scenario(const RandomModel& model, const GlobalParams& globals);

// Groups a flat user list by channel-gain rank. Rank 1 is the strongest.
//   SS: (1,2),(3,4),...   SW: (1,M),(2,M-1),...   SM: (k, k+M/2)
// Pair methods require an even user count.
std::vector<std::vector<UserParams>> apply_pairing(std::vector<UserParams> users,
                                                   PairingMethod method);

// Regroups an already-paired scenario for the baseline schemes. TDMA turns
// every user into a singleton group; FDMA additionally gives each singleton
// a B/M subband and pins x_i = 1; the NOMA variants keep the grouping
// (NOMA_ET pins x_i = 1/N).
Scenario derive_baseline(const Scenario& scenario, const SchemeConfig& scheme);

const char* to_string(Scheme s);
const char* to_string(PairingMethod p);
Scheme scheme_from_string(const std::string& s);
PairingMethod pairing_from_string(const std::string& s);

// JSON document round trip. Field names match the structs above;
// cloud_capacity_F serializes as the string "infinite" when unbounded.
std::string scenario_to_json_text(const Scenario& s);
Scenario scenario_from_json_text(const std::string& text);
Scenario load_scenario_file(const std::string& path);
void save_scenario_file(const Scenario& s, const std::string& path);

} // namespace nomec
