#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace lfc {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One LFC-participating generator inside an area.
struct GeneratorParams {
  double inertia = 5.0;       ///< H, s
  double droop = 0.05;        ///< R, pu (frequency per power)
  double governor_tc = 0.08;  ///< Tg, s
  double turbine_tc = 0.3;    ///< Tt, s
  double allocation = 1.0;    ///< share of the area AGC command, [0, 1]

  bool operator==(const GeneratorParams&) const = default;
};

struct AreaParams {
  std::string name;
  std::vector<GeneratorParams> generators;
  double damping = 1.0;            ///< D, pu/Hz
  double bias = 0.0;               ///< beta, pu/Hz; 0 means "use effective bias"
  double kp = 0.1;                 ///< AGC proportional gain
  double ki = 0.6;                 ///< AGC integral gain, 1/s
  double nominal_frequency = 60.0; ///< f0, Hz

  bool operator==(const AreaParams&) const = default;
};

/// Tie-line between two areas. Positive flow deviation is from `from` to `to`.
struct TieLine {
  int from = 0;
  int to = 1;
  double stiffness = 0.545;   ///< synchronizing coefficient T, pu
  double nominal_flow = 0.0;  ///< scheduled interchange, pu
  double remote_bias = 0.0;   ///< bias of the remote end; 0 means "remote effective bias"

  bool operator==(const TieLine&) const = default;
};

struct SystemConfig {
  std::vector<AreaParams> areas;
  std::vector<TieLine> tielines;
  int study_area = 0;

  bool operator==(const SystemConfig&) const = default;
};

/// Sum of 1/R over the area's generators plus the damping constant.
inline double effective_bias(const SystemConfig& cfg, int area) {
  if (area < 0 || area >= static_cast<int>(cfg.areas.size()))
    throw ConfigError("effective_bias: area index " + std::to_string(area) +
                      " out of range");
  const AreaParams& a = cfg.areas[static_cast<std::size_t>(area)];
  double b = a.damping;
  for (const GeneratorParams& g : a.generators) b += 1.0 / g.droop;
  return b;
}

/// Area bias as used by its AGC controller (explicit value or effective bias).
inline double area_bias(const SystemConfig& cfg, int area) {
  const AreaParams& a = cfg.areas[static_cast<std::size_t>(area)];
  return a.bias > 0.0 ? a.bias : effective_bias(cfg, area);
}

/// Bias of the remote end of a tie-line, as used in steady-state analysis.
inline double tie_remote_bias(const SystemConfig& cfg, const TieLine& t) {
  if (t.remote_bias > 0.0) return t.remote_bias;
  const int remote = (t.from == cfg.study_area) ? t.to : t.from;
  return area_bias(cfg, remote);
}

/// Ties incident to an area, with the flow sign seen from that area
/// (+1 when positive flow is an export).
inline std::vector<std::pair<int, double>> incident_ties(
    const SystemConfig& cfg, int area) {
  std::vector<std::pair<int, double>> out;
  for (int t = 0; t < static_cast<int>(cfg.tielines.size()); ++t) {
    const TieLine& tl = cfg.tielines[static_cast<std::size_t>(t)];
    if (tl.from == area) out.emplace_back(t, +1.0);
    else if (tl.to == area) out.emplace_back(t, -1.0);
  }
  return out;
}

inline void validate(const SystemConfig& cfg) {
  const int n_areas = static_cast<int>(cfg.areas.size());
  if (n_areas < 2) throw ConfigError("config needs at least two areas");
  if (cfg.study_area < 0 || cfg.study_area >= n_areas)
    throw ConfigError("study_area " + std::to_string(cfg.study_area) +
                      " out of range");

  for (int a = 0; a < n_areas; ++a) {
    const AreaParams& area = cfg.areas[static_cast<std::size_t>(a)];
    const std::string where = "area " + std::to_string(a);
    if (area.generators.empty())
      throw ConfigError(where + ": at least one generator required");
    if (area.damping < 0.0)
      throw ConfigError(where + ": damping must be >= 0, got " +
                        std::to_string(area.damping));
    if (area.bias < 0.0)
      throw ConfigError(where + ": bias must be > 0 (or 0 for effective bias)");
    if (area.nominal_frequency <= 0.0)
      throw ConfigError(where + ": nominal_frequency must be > 0");
    double alloc = 0.0;
    for (std::size_t j = 0; j < area.generators.size(); ++j) {
      const GeneratorParams& g = area.generators[j];
      const std::string gw = where + " generator " + std::to_string(j);
      if (g.inertia <= 0.0)
        throw ConfigError(gw + ": inertia must be > 0, got " +
                          std::to_string(g.inertia));
      if (g.droop <= 0.0)
        throw ConfigError(gw + ": droop must be > 0, got " +
                          std::to_string(g.droop));
      if (g.governor_tc <= 0.0)
        throw ConfigError(gw + ": governor_tc must be > 0");
      if (g.turbine_tc <= 0.0)
        throw ConfigError(gw + ": turbine_tc must be > 0");
      if (g.allocation < 0.0 || g.allocation > 1.0)
        throw ConfigError(gw + ": allocation must be in [0, 1], got " +
                          std::to_string(g.allocation));
      alloc += g.allocation;
    }
    if (std::abs(alloc - 1.0) > 1e-9)
      throw ConfigError(where + ": allocation coefficients sum to " +
                        std::to_string(alloc) + ", expected 1");
  }

  std::vector<bool> linked(static_cast<std::size_t>(n_areas), false);
  for (std::size_t t = 0; t < cfg.tielines.size(); ++t) {
    const TieLine& tl = cfg.tielines[t];
    const std::string where = "tieline " + std::to_string(t);
    if (tl.from < 0 || tl.from >= n_areas || tl.to < 0 || tl.to >= n_areas)
      throw ConfigError(where + ": endpoint out of range");
    if (tl.from == tl.to)
      throw ConfigError(where + ": endpoints must differ");
    if (tl.stiffness <= 0.0)
      throw ConfigError(where + ": stiffness must be > 0");
    if (tl.remote_bias < 0.0)
      throw ConfigError(where + ": remote_bias must be > 0 (or 0 for default)");
    for (std::size_t u = 0; u < t; ++u) {
      const TieLine& other = cfg.tielines[u];
      if ((other.from == tl.from && other.to == tl.to) ||
          (other.from == tl.to && other.to == tl.from))
        throw ConfigError(where + ": duplicate tie-line between areas " +
                          std::to_string(tl.from) + " and " +
                          std::to_string(tl.to));
    }
    if (tl.from == cfg.study_area) linked[static_cast<std::size_t>(tl.to)] = true;
    if (tl.to == cfg.study_area) linked[static_cast<std::size_t>(tl.from)] = true;
  }
  for (int a = 0; a < n_areas; ++a)
    if (a != cfg.study_area && !linked[static_cast<std::size_t>(a)])
      throw ConfigError("area " + std::to_string(a) +
                        " has no tie-line to the study area");
}

// --- JSON (de)serialization ---

inline void to_json(nlohmann::json& j, const GeneratorParams& g) {
  j = {{"inertia", g.inertia},
       {"droop", g.droop},
       {"governor_tc", g.governor_tc},
       {"turbine_tc", g.turbine_tc},
       {"allocation", g.allocation}};
}

inline void from_json(const nlohmann::json& j, GeneratorParams& g) {
  j.at("inertia").get_to(g.inertia);
  j.at("droop").get_to(g.droop);
  j.at("governor_tc").get_to(g.governor_tc);
  j.at("turbine_tc").get_to(g.turbine_tc);
  j.at("allocation").get_to(g.allocation);
}

inline void to_json(nlohmann::json& j, const AreaParams& a) {
  j = {{"name", a.name},
       {"generators", a.generators},
       {"damping", a.damping},
       {"bias", a.bias},
       {"kp", a.kp},
       {"ki", a.ki},
       {"nominal_frequency", a.nominal_frequency}};
}

inline void from_json(const nlohmann::json& j, AreaParams& a) {
  a.name = j.value("name", "");
  j.at("generators").get_to(a.generators);
  a.damping = j.value("damping", 1.0);
  a.bias = j.value("bias", 0.0);
  a.kp = j.value("kp", 0.1);
  a.ki = j.value("ki", 0.6);
  a.nominal_frequency = j.value("nominal_frequency", 60.0);
}

inline void to_json(nlohmann::json& j, const TieLine& t) {
  j = {{"from", t.from},
       {"to", t.to},
       {"stiffness", t.stiffness},
       {"nominal_flow", t.nominal_flow},
       {"remote_bias", t.remote_bias}};
}

inline void from_json(const nlohmann::json& j, TieLine& t) {
  j.at("from").get_to(t.from);
  j.at("to").get_to(t.to);
  t.stiffness = j.value("stiffness", 0.545);
  t.nominal_flow = j.value("nominal_flow", 0.0);
  t.remote_bias = j.value("remote_bias", 0.0);
}

inline void to_json(nlohmann::json& j, const SystemConfig& c) {
  j = {{"study_area", c.study_area},
       {"areas", c.areas},
       {"tielines", c.tielines}};
}

inline void from_json(const nlohmann::json& j, SystemConfig& c) {
  j.at("areas").get_to(c.areas);
  j.at("tielines").get_to(c.tielines);
  c.study_area = j.value("study_area", 0);
}

inline SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("parse error in " + path + ": " + e.what());
  }
  SystemConfig cfg;
  try {
    cfg = j.get<SystemConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("malformed config " + path + ": " + e.what());
  }
  validate(cfg);
  return cfg;
}

inline void save_config(const SystemConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << nlohmann::json(cfg).dump(2) << '\n';
}

/// Stable hash of the canonical JSON form, recorded in run metadata.
inline std::string config_hash(const SystemConfig& cfg) {
  const std::string dump = nlohmann::json(cfg).dump();
  std::ostringstream os;
  os << std::hex << std::hash<std::string>{}(dump);
  return os.str();
}

/// Three-area benchmark: study area with two generators, two remote areas,
/// star tie-line topology. Bias values come out as 41 / 41 / 41 pu/Hz.
inline SystemConfig default_config() {
  SystemConfig cfg;
  AreaParams a1;
  a1.name = "Area1";
  a1.generators = {GeneratorParams{5.0, 0.05, 0.08, 0.3, 0.5},
                   GeneratorParams{5.0, 0.05, 0.08, 0.3, 0.5}};
  AreaParams a2;
  a2.name = "Area2";
  a2.generators = {GeneratorParams{5.0, 0.025, 0.08, 0.3, 1.0}};
  AreaParams a3 = a2;
  a3.name = "Area3";
  cfg.areas = {a1, a2, a3};
  cfg.tielines = {TieLine{0, 1, 0.545, 0.0, 0.0},
                  TieLine{0, 2, 0.545, 0.0, 0.0}};
  cfg.study_area = 0;
  for (std::size_t a = 0; a < cfg.areas.size(); ++a)
    cfg.areas[a].bias = effective_bias(cfg, static_cast<int>(a));
  for (TieLine& t : cfg.tielines) t.remote_bias = tie_remote_bias(cfg, t);
  validate(cfg);
  return cfg;
}

}  // namespace lfc
