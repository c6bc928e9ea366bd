// SPDX-License-Identifier: Apache-2.0
#include "nomec/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace nomec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Samplers are hand-rolled on top of mt19937_64 so that generated scenarios
// are bit-identical across standard library implementations.
double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

double uniform(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * uniform01(gen);
}

double normal(std::mt19937_64& gen, double sigma) {
  // Box-Muller; consumes exactly two draws.
  const double u1 = uniform01(gen);
  const double u2 = uniform01(gen);
  const double r = std::sqrt(-2.0 * std::log1p(-u1));
  return sigma * r * std::cos(2.0 * M_PI * u2);
}

double exponential1(std::mt19937_64& gen) { return -std::log1p(-uniform01(gen)); }

void sort_by_gain(std::vector<UserParams>& users) {
  std::stable_sort(users.begin(), users.end(), [](const UserParams& a, const UserParams& b) {
    return a.channel_gain_h > b.channel_gain_h;
  });
}

std::vector<UserParams> flatten(const Scenario& s) {
  std::vector<UserParams> users;
  for (const auto& g : s.groups)
    users.insert(users.end(), g.users.begin(), g.users.end());
  return users;
}

} // namespace

std::size_t Scenario::user_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.users.size();
  return n;
}

double Scenario::group_bandwidth(std::size_t i) const {
  return groups[i].bandwidth_B > 0.0 ? groups[i].bandwidth_B : bandwidth_B;
}

bool Scenario::infinite_capacity() const { return std::isinf(cloud_capacity_F); }

double Scenario::fixed_share(std::size_t) const {
  switch (share_mode) {
    case ShareMode::FixedUniform: return 1.0 / static_cast<double>(groups.size());
    case ShareMode::FixedFull: return 1.0;
    case ShareMode::Simplex: return 0.0;
  }
  return 0.0;
}

void Scenario::validate() const {
  require(!groups.empty(), "groups: must be nonempty");
  require(bandwidth_B > 0.0 && std::isfinite(bandwidth_B), "bandwidth_B: must be positive");
  require(noise_psd > 0.0 && std::isfinite(noise_psd), "noise_psd: must be positive");
  require(cloud_capacity_F > 0.0, "cloud_capacity_F: must be positive or infinite");
  require(omega >= 0.0 && omega <= 1.0, "omega: must lie in [0, 1]");
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const auto& g = groups[i];
    require(!g.users.empty(), "groups: group " + std::to_string(i) + " is empty");
    require(g.bandwidth_B >= 0.0, "bandwidth_B: group override must be nonnegative");
    for (std::size_t j = 0; j < g.users.size(); ++j) {
      const auto& u = g.users[j];
      const std::string at = " (group " + std::to_string(i) + ", user " + std::to_string(j) + ")";
      require(u.data_size_R > 0.0, "data_size_R: must be positive" + at);
      require(u.cycles_per_bit_C > 0.0, "cycles_per_bit_C: must be positive" + at);
      require(u.local_capacity_F > 0.0, "local_capacity_F: must be positive" + at);
      require(u.energy_per_cycle_Q > 0.0, "energy_per_cycle_Q: must be positive" + at);
      require(u.max_power_P >= 0.0, "max_power_P: must be nonnegative" + at);
      require(u.channel_gain_h > 0.0, "channel_gain_h: must be positive" + at);
      if (j > 0)
        require(g.users[j - 1].channel_gain_h >= u.channel_gain_h,
                "channel_gain_h: group must be sorted nonincreasing" + at);
    }
  }
}

double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the combined value.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Scenario generate_scenario(const RandomModel& model, const GlobalParams& globals) {
  require(model.user_count_M > 0, "user_count_M: must be positive");
  require(model.cell_radius_km_min > 0.0 && model.cell_radius_km_max >= model.cell_radius_km_min,
          "cell_radius_km: range must be nonempty and positive");
  require(model.cycles_per_bit_max >= model.cycles_per_bit_min && model.cycles_per_bit_min > 0.0,
          "cycles_per_bit: range must be nonempty and positive");

  std::mt19937_64 gen(model.seed);
  std::vector<UserParams> users(static_cast<std::size_t>(model.user_count_M));
  for (auto& u : users) {
    const double dist_km = uniform(gen, model.cell_radius_km_min, model.cell_radius_km_max);
    const double shadow_db = normal(gen, model.shadow_sigma_db);
    const double fading = exponential1(gen);
    const double pl_db = model.pathloss_intercept_db + model.pathloss_slope_db * std::log10(dist_km);
    u.channel_gain_h = std::pow(10.0, -(pl_db + shadow_db) / 10.0) * fading;
    u.cycles_per_bit_C = uniform(gen, model.cycles_per_bit_min, model.cycles_per_bit_max);
    u.data_size_R = model.data_size_R;
    u.local_capacity_F = model.local_capacity_F;
    u.energy_per_cycle_Q = model.energy_per_cycle_Q;
    u.max_power_P = model.max_power_P;
  }
  sort_by_gain(users);

  Scenario s;
  s.groups.push_back(Group{std::move(users), 0.0});
  s.bandwidth_B = globals.bandwidth_B;
  s.noise_psd = globals.noise_psd;
  s.cloud_capacity_F = globals.cloud_capacity_F;
  s.omega = globals.omega;
  s.validate();
  return s;
}

std::vector<std::vector<UserParams>> apply_pairing(std::vector<UserParams> users,
                                                   PairingMethod method) {
  sort_by_gain(users);
  const std::size_t m = users.size();
  std::vector<std::vector<UserParams>> groups;

  auto pair_of = [&](std::size_t a, std::size_t b) {
    std::vector<UserParams> g{users[a], users[b]};
    sort_by_gain(g);
    groups.push_back(std::move(g));
  };

  switch (method) {
    case PairingMethod::OneGroup:
      groups.push_back(std::move(users));
      break;
    case PairingMethod::Singletons:
      for (auto& u : users) groups.push_back({u});
      break;
    case PairingMethod::SS:
      require(m % 2 == 0, "pairing: SS requires an even user count");
      for (std::size_t k = 0; k + 1 < m; k += 2) pair_of(k, k + 1);
      break;
    case PairingMethod::SW:
      require(m % 2 == 0, "pairing: SW requires an even user count");
      for (std::size_t k = 0; k < m / 2; ++k) pair_of(k, m - 1 - k);
      break;
    case PairingMethod::SM:
      require(m % 2 == 0, "pairing: SM requires an even user count");
      for (std::size_t k = 0; k < m / 2; ++k) pair_of(k, k + m / 2);
      break;
  }
  return groups;
}

Scenario derive_baseline(const Scenario& scenario, const SchemeConfig& scheme) {
  Scenario out = scenario;
  switch (scheme.scheme) {
    case Scheme::NOMA:
    case Scheme::NOMA_EXH:
      break;
    case Scheme::NOMA_ET:
      out.share_mode = ShareMode::FixedUniform;
      break;
    case Scheme::TDMA: {
      auto users = flatten(scenario);
      out.groups.clear();
      for (auto& g : apply_pairing(std::move(users), PairingMethod::Singletons))
        out.groups.push_back(Group{std::move(g), 0.0});
      out.share_mode = ShareMode::Simplex;
      break;
    }
    case Scheme::FDMA: {
      auto users = flatten(scenario);
      const double sub_band = scenario.bandwidth_B / static_cast<double>(users.size());
      out.groups.clear();
      for (auto& g : apply_pairing(std::move(users), PairingMethod::Singletons))
        out.groups.push_back(Group{std::move(g), sub_band});
      out.share_mode = ShareMode::FixedFull;
      break;
    }
  }
  return out;
}

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::NOMA: return "noma";
    case Scheme::NOMA_ET: return "noma_et";
    case Scheme::NOMA_EXH: return "noma_exh";
    case Scheme::TDMA: return "tdma";
    case Scheme::FDMA: return "fdma";
  }
  return "?";
}

const char* to_string(PairingMethod p) {
  switch (p) {
    case PairingMethod::SS: return "ss";
    case PairingMethod::SW: return "sw";
    case PairingMethod::SM: return "sm";
    case PairingMethod::OneGroup: return "onegroup";
    case PairingMethod::Singletons: return "singletons";
  }
  return "?";
}

Scheme scheme_from_string(const std::string& s) {
  if (s == "noma") return Scheme::NOMA;
  if (s == "noma_et") return Scheme::NOMA_ET;
  if (s == "noma_exh") return Scheme::NOMA_EXH;
  if (s == "tdma") return Scheme::TDMA;
  if (s == "fdma") return Scheme::FDMA;
  throw std::invalid_argument("scheme: unknown value '" + s + "'");
}

PairingMethod pairing_from_string(const std::string& s) {
  if (s == "ss") return PairingMethod::SS;
  if (s == "sw") return PairingMethod::SW;
  if (s == "sm") return PairingMethod::SM;
  if (s == "onegroup") return PairingMethod::OneGroup;
  if (s == "singletons") return PairingMethod::Singletons;
  throw std::invalid_argument("pairing: unknown value '" + s + "'");
}

namespace {

nlohmann::json user_to_json(const UserParams& u) {
  return {{"data_size_R", u.data_size_R},
          {"cycles_per_bit_C", u.cycles_per_bit_C},
          {"local_capacity_F", u.local_capacity_F},
          {"energy_per_cycle_Q", u.energy_per_cycle_Q},
          {"max_power_P", u.max_power_P},
          {"channel_gain_h", u.channel_gain_h}};
}

UserParams user_from_json(const nlohmann::json& j) {
  UserParams u;
  u.data_size_R = j.at("data_size_R").get<double>();
  u.cycles_per_bit_C = j.at("cycles_per_bit_C").get<double>();
  u.local_capacity_F = j.at("local_capacity_F").get<double>();
  u.energy_per_cycle_Q = j.at("energy_per_cycle_Q").get<double>();
  u.max_power_P = j.at("max_power_P").get<double>();
  u.channel_gain_h = j.at("channel_gain_h").get<double>();
  return u;
}

const char* share_mode_name(ShareMode m) {
  switch (m) {
    case ShareMode::Simplex: return "simplex";
    case ShareMode::FixedUniform: return "fixed_uniform";
    case ShareMode::FixedFull: return "fixed_full";
  }
  return "?";
}

ShareMode share_mode_from(const std::string& s) {
  if (s == "simplex") return ShareMode::Simplex;
  if (s == "fixed_uniform") return ShareMode::FixedUniform;
  if (s == "fixed_full") return ShareMode::FixedFull;
  throw std::invalid_argument("share_mode: unknown value '" + s + "'");
}

} // namespace

std::string scenario_to_json_text(const Scenario& s) {
  nlohmann::json j;
  j["bandwidth_B"] = s.bandwidth_B;
  j["noise_psd"] = s.noise_psd;
  if (s.infinite_capacity())
    j["cloud_capacity_F"] = "infinite";
  else
    j["cloud_capacity_F"] = s.cloud_capacity_F;
  j["omega"] = s.omega;
  if (s.share_mode != ShareMode::Simplex) j["share_mode"] = share_mode_name(s.share_mode);
  auto groups = nlohmann::json::array();
  for (const auto& g : s.groups) {
    auto users = nlohmann::json::array();
    for (const auto& u : g.users) users.push_back(user_to_json(u));
    if (g.bandwidth_B > 0.0)
      groups.push_back(nlohmann::json{{"bandwidth_B", g.bandwidth_B}, {"users", users}});
    else
      groups.push_back(users);
  }
  j["groups"] = groups;
  return j.dump(2) + "\n";
}

Scenario scenario_from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario: malformed JSON: ") + e.what());
  }
  Scenario s;
  try {
    s.bandwidth_B = j.at("bandwidth_B").get<double>();
    s.noise_psd = j.at("noise_psd").get<double>();
    const auto& cap = j.at("cloud_capacity_F");
    s.cloud_capacity_F =
        cap.is_string() ? kInf : cap.get<double>();
    if (cap.is_string() && cap.get<std::string>() != "infinite")
      throw std::invalid_argument("cloud_capacity_F: must be a number or \"infinite\"");
    s.omega = j.at("omega").get<double>();
    if (j.contains("share_mode")) s.share_mode = share_mode_from(j["share_mode"].get<std::string>());
    for (const auto& g : j.at("groups")) {
      Group group;
      const nlohmann::json* users = &g;
      if (g.is_object()) {
        group.bandwidth_B = g.at("bandwidth_B").get<double>();
        users = &g.at("users");
      }
      for (const auto& u : *users) group.users.push_back(user_from_json(u));
      s.groups.push_back(std::move(group));
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("scenario: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_text(buf.str());
}

void save_scenario_file(const Scenario& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("scenario: cannot write '" + path + "'");
  out << scenario_to_json_text(s);
}

} // namespace nomec
