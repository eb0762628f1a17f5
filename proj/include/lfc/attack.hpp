#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfc/config.hpp"
#include "lfc/util.hpp"

namespace lfc {

/// Signals and parameters an integrity attack can falsify.
enum class AttackPoint {
  GeneratorFreq,    // Level 1: frequency measurement of one study-area unit
  TieFlowMeas,      // Level 1: tie-line power measurement
  AreaFreq,         // Level 2: aggregated area frequency
  NominalFreq,      // Level 2: nominal frequency parameter
  AreaFreqDev,      // Level 2: area frequency deviation
  TieNominalFlow,   // Level 2: scheduled tie-line interchange parameter
  TieFlowDev,       // Level 2: one tie-line power deviation
  TieFlowDevTotal,  // Level 2: summed tie-line power deviation
  GenCommand,       // Level 3: dispatched command to one unit
};

enum class AttackTemplate { Injection, Scale };

enum class SignalShape { Step, Random, Oscillating };

/// Additive disturbance signal d(t), evaluated relative to attack onset.
struct DSignal {
  SignalShape shape = SignalShape::Step;
  double amplitude = 0.0;
  double frequency = 0.2;       ///< Hz, oscillating shape only
  std::uint32_t seed = 0;       ///< random shape only
  double sample_rate = 10.0;    ///< Hz, hold rate of the random shape

  double value(double t_since_onset) const {
    switch (shape) {
      case SignalShape::Step:
        return amplitude;
      case SignalShape::Oscillating:
        return amplitude *
               std::sin(2.0 * std::numbers::pi * frequency * t_since_onset);
      case SignalShape::Random: {
        const auto idx = static_cast<std::uint64_t>(t_since_onset * sample_rate);
        return amplitude * uniform_pm1(seed, idx);
      }
    }
    return 0.0;
  }

  bool operator==(const DSignal&) const = default;
};

struct AttackSpec {
  AttackPoint point = AttackPoint::AreaFreqDev;
  AttackTemplate tmpl = AttackTemplate::Injection;
  int index = 0;        ///< unit index (GeneratorFreq/GenCommand) or tie index
  double gain = 1.0;    ///< k, scale template
  DSignal d;            ///< injection template
  double onset = 0.0;   ///< s

  /// Falsify one signal sample. Identity before onset.
  double apply(double true_value, double t) const {
    if (t < onset) return true_value;
    if (tmpl == AttackTemplate::Scale) return gain * true_value;
    return true_value + d.value(t - onset);
  }

  bool operator==(const AttackSpec&) const = default;
};

struct Scenario {
  int index = 0;  ///< 1-based catalog number
  AttackSpec proto;
  std::string description;
};

/// The 25-entry attack scenario catalog for a two-unit, two-tie study area.
inline std::vector<Scenario> scenario_catalog() {
  using P = AttackPoint;
  using T = AttackTemplate;
  auto spec = [](P p, T t, int idx) {
    AttackSpec s;
    s.point = p;
    s.tmpl = t;
    s.index = idx;
    return s;
  };
  std::vector<Scenario> cat;
  auto add = [&](P p, int idx, const std::string& what) {
    const int n = static_cast<int>(cat.size()) + 1;
    cat.push_back({n, spec(p, T::Injection, idx), "injection attack on " + what});
    cat.push_back({n + 1, spec(p, T::Scale, idx), "scale attack on " + what});
  };
  add(P::GeneratorFreq, 0, "frequency measurement f_11 of Unit 1 of Area 1");
  add(P::GeneratorFreq, 1, "frequency measurement f_12 of Unit 2 of Area 1");
  add(P::TieFlowMeas, 0, "power measurement P_tie^11 of Tie-line 1 of Area 1");
  add(P::TieFlowMeas, 1, "power measurement P_tie^12 of Tie-line 2 of Area 1");
  add(P::AreaFreq, 0, "area frequency measurement f_1");
  cat.push_back({11, spec(P::NominalFreq, T::Injection, 0),
                 "injection attack on nominal frequency f_0"});
  add(P::AreaFreqDev, 0, "area frequency deviation df_1 of Area 1");
  cat.push_back({14, spec(P::TieNominalFlow, T::Injection, 0),
                 "injection attack on nominal power of Tie-line 1 P_tie0^11 of Area 1"});
  cat.push_back({15, spec(P::TieNominalFlow, T::Injection, 1),
                 "injection attack on nominal power of Tie-line 2 P_tie0^12 of Area 1"});
  add(P::TieFlowDev, 0, "power deviation of Tie-line 1 dP_tie^11 of Area 1");
  add(P::TieFlowDev, 1, "power deviation of Tie-line 2 dP_tie^12 of Area 1");
  add(P::TieFlowDevTotal, 0, "total tie-line power deviation dP_tie^1 of Area 1");
  add(P::GenCommand, 0, "LFC order com_11 to Unit 1 of Area 1");
  add(P::GenCommand, 1, "LFC order com_12 to Unit 2 of Area 1");
  return cat;
}

inline const Scenario& scenario(int index) {
  static const std::vector<Scenario> cat = scenario_catalog();
  if (index < 1 || index > static_cast<int>(cat.size()))
    throw std::out_of_range("scenario index must be in 1.." +
                            std::to_string(cat.size()) + ", got " +
                            std::to_string(index));
  return cat[static_cast<std::size_t>(index - 1)];
}

/// Gain that defeats the AGC loop's steady-state correction for the three
/// scale-vulnerable deviation signals. Any other gain leaves quasi-steady
/// state at nominal.
inline double destabilizing_k(const SystemConfig& cfg, AttackPoint point,
                              int tie_index = 0) {
  const double beta_i = area_bias(cfg, cfg.study_area);
  double beta_remote_sum = 0.0;
  for (const auto& [t, sgn] : incident_ties(cfg, cfg.study_area))
    beta_remote_sum += tie_remote_bias(cfg, cfg.tielines[static_cast<std::size_t>(t)]);
  switch (point) {
    case AttackPoint::AreaFreqDev:
      if (beta_i == 0.0) throw std::domain_error("destabilizing_k: beta_i is zero");
      return -beta_remote_sum / beta_i;
    case AttackPoint::TieFlowDev: {
      const auto ties = incident_ties(cfg, cfg.study_area);
      if (tie_index < 0 || tie_index >= static_cast<int>(ties.size()))
        throw std::out_of_range("destabilizing_k: tie index out of range");
      const double beta_is = tie_remote_bias(
          cfg, cfg.tielines[static_cast<std::size_t>(ties[static_cast<std::size_t>(tie_index)].first)]);
      if (beta_is == 0.0) throw std::domain_error("destabilizing_k: beta_is is zero");
      return 1.0 - (beta_i + beta_remote_sum) / beta_is;
    }
    case AttackPoint::TieFlowDevTotal:
      if (beta_remote_sum == 0.0)
        throw std::domain_error("destabilizing_k: remote bias sum is zero");
      return -beta_i / beta_remote_sum;
    default:
      throw std::invalid_argument(
          "destabilizing_k: target must be a scale-vulnerable deviation signal");
  }
}

// --- JSON export for the CLI and reports ---

inline std::string to_string(AttackPoint p) {
  switch (p) {
    case AttackPoint::GeneratorFreq: return "generator_freq";
    case AttackPoint::TieFlowMeas: return "tie_flow_meas";
    case AttackPoint::AreaFreq: return "area_freq";
    case AttackPoint::NominalFreq: return "nominal_freq";
    case AttackPoint::AreaFreqDev: return "area_freq_dev";
    case AttackPoint::TieNominalFlow: return "tie_nominal_flow";
    case AttackPoint::TieFlowDev: return "tie_flow_dev";
    case AttackPoint::TieFlowDevTotal: return "tie_flow_dev_total";
    case AttackPoint::GenCommand: return "gen_command";
  }
  return "?";
}

inline std::string to_string(AttackTemplate t) {
  return t == AttackTemplate::Injection ? "injection" : "scale";
}

inline std::string to_string(SignalShape s) {
  switch (s) {
    case SignalShape::Step: return "step";
    case SignalShape::Random: return "random";
    case SignalShape::Oscillating: return "oscillating";
  }
  return "?";
}

/// Control level the attack point belongs to (1 measurement upload,
/// 2 command generation, 3 order dispatch).
inline int attack_level(AttackPoint p) {
  switch (p) {
    case AttackPoint::GeneratorFreq:
    case AttackPoint::TieFlowMeas:
      return 1;
    case AttackPoint::GenCommand:
      return 3;
    default:
      return 2;
  }
}

inline void to_json(nlohmann::json& j, const AttackSpec& s) {
  j = {{"point", to_string(s.point)},
       {"template", to_string(s.tmpl)},
       {"index", s.index},
       {"onset", s.onset}};
  if (s.tmpl == AttackTemplate::Scale) {
    j["gain"] = s.gain;
  } else {
    j["shape"] = to_string(s.d.shape);
    j["amplitude"] = s.d.amplitude;
    if (s.d.shape == SignalShape::Oscillating) j["frequency"] = s.d.frequency;
    if (s.d.shape == SignalShape::Random) j["seed"] = s.d.seed;
  }
}

inline void to_json(nlohmann::json& j, const Scenario& s) {
  j = {{"index", s.index},
       {"level", attack_level(s.proto.point)},
       {"description", s.description},
       {"spec", s.proto}};
}

}  // namespace lfc
