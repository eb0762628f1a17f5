#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfc/attack.hpp"
#include "lfc/config.hpp"

namespace lfc {

enum class ConvergenceClass { Nominal, Deviated, Destabilized };

inline std::string to_string(ConvergenceClass c) {
  switch (c) {
    case ConvergenceClass::Nominal: return "nominal";
    case ConvergenceClass::Deviated: return "deviated";
    case ConvergenceClass::Destabilized: return "destabilized";
  }
  return "?";
}

/// Closed-form quasi-steady-state limit under one attack.
///
/// Deviation fields are meaningful for the nominal and deviated classes only;
/// a destabilized run has no steady state and the fields stay zero.
struct SteadyStatePrediction {
  double freq_dev = 0.0;             ///< study area, Hz
  std::vector<double> tie_dev;       ///< per study tie, seen from the study area, pu
  double ace_error = 0.0;            ///< settled falsification term e in the study ACE, pu
  double command_disruption = 0.0;   ///< settled change of the study LFC command, pu
  ConvergenceClass cls = ConvergenceClass::Nominal;
};

/// Quasi-steady-state limit of the study area under a single attack.
///
/// The closed loop drives the falsified ACE to zero, so a settled additive
/// error e in that signal forces beta_i*df + sum(dP_tie) = -e. Splitting by
/// bias share gives df = -e/S and dP_tie^is = beta_is*df with
/// S = beta_i + sum_s beta_is, and the command settles at du = -e.
/// Injections are evaluated at the settled (step) value of d.
inline SteadyStatePrediction predict(const SystemConfig& cfg,
                                     const AttackSpec& spec) {
  const int study = cfg.study_area;
  const AreaParams& sa = cfg.areas[static_cast<std::size_t>(study)];
  const double beta_i = area_bias(cfg, study);
  const auto ties = incident_ties(cfg, study);
  double beta_remote_sum = 0.0;
  std::vector<double> beta_is(ties.size());
  for (std::size_t o = 0; o < ties.size(); ++o) {
    beta_is[o] = tie_remote_bias(
        cfg, cfg.tielines[static_cast<std::size_t>(ties[o].first)]);
    beta_remote_sum += beta_is[o];
  }
  const double sum_beta = beta_i + beta_remote_sum;
  const double f0 = sa.nominal_frequency;
  const double d = spec.d.amplitude;
  const double k = spec.gain;
  const bool scale = (spec.tmpl == AttackTemplate::Scale);

  const int n_units = static_cast<int>(sa.generators.size());
  const bool unit_target = (spec.point == AttackPoint::GeneratorFreq ||
                            spec.point == AttackPoint::GenCommand);
  const bool tie_target = (spec.point == AttackPoint::TieFlowMeas ||
                           spec.point == AttackPoint::TieNominalFlow ||
                           spec.point == AttackPoint::TieFlowDev);
  if (unit_target && (spec.index < 0 || spec.index >= n_units))
    throw std::invalid_argument("predict: attacked unit does not exist");
  if (tie_target &&
      (spec.index < 0 || spec.index >= static_cast<int>(ties.size())))
    throw std::invalid_argument("predict: attacked tie-line does not exist");

  SteadyStatePrediction out;
  out.tie_dev.assign(ties.size(), 0.0);

  double e = 0.0;
  bool deviated = false;
  switch (spec.point) {
    case AttackPoint::GeneratorFreq: {
      double h_sum = 0.0;
      for (const GeneratorParams& g : sa.generators) h_sum += g.inertia;
      const double share =
          sa.generators[static_cast<std::size_t>(spec.index)].inertia / h_sum;
      e = scale ? beta_i * share * (k - 1.0) * f0 : beta_i * share * d;
      deviated = true;
      break;
    }
    case AttackPoint::AreaFreq:
      e = scale ? beta_i * (k - 1.0) * f0 : beta_i * d;
      deviated = true;
      break;
    case AttackPoint::NominalFreq:
      e = -beta_i * d;
      deviated = true;
      break;
    case AttackPoint::AreaFreqDev:
    case AttackPoint::TieFlowDev:
    case AttackPoint::TieFlowDevTotal:
      if (scale) {
        const double ks = destabilizing_k(cfg, spec.point, spec.index);
        if (std::abs(k - ks) <= 1e-9 * std::max(1.0, std::abs(ks))) {
          out.cls = ConvergenceClass::Destabilized;
          return out;
        }
        deviated = false;  // any other gain is corrected away
      } else {
        e = (spec.point == AttackPoint::AreaFreqDev) ? beta_i * d : d;
        deviated = true;
      }
      break;
    case AttackPoint::TieNominalFlow:
      e = -d;
      deviated = true;
      break;
    case AttackPoint::TieFlowMeas:
    case AttackPoint::GenCommand:
      // Level-1 tie telemetry is falsified consistently at both ends and
      // Level-3 order falsification is absorbed by the integral action, so
      // the settled state stays nominal.
      deviated = false;
      break;
  }

  if (!deviated) return out;
  out.cls = ConvergenceClass::Deviated;
  out.ace_error = e;
  out.freq_dev = -e / sum_beta;
  for (std::size_t o = 0; o < ties.size(); ++o)
    out.tie_dev[o] = beta_is[o] * out.freq_dev;
  out.command_disruption = -e;
  return out;
}

/// Prediction for a catalog scenario with its probe magnitude filled in.
inline SteadyStatePrediction predict_scenario(const SystemConfig& cfg,
                                              int scenario_index,
                                              double d = 0.01,
                                              double k = 1.01) {
  AttackSpec spec = scenario(scenario_index).proto;
  if (spec.tmpl == AttackTemplate::Scale) spec.gain = k;
  else spec.d.amplitude = d;
  return predict(cfg, spec);
}

inline void to_json(nlohmann::json& j, const SteadyStatePrediction& p) {
  j = {{"class", to_string(p.cls)}};
  if (p.cls != ConvergenceClass::Destabilized) {
    j["freq_dev"] = p.freq_dev;
    j["tie_dev"] = p.tie_dev;
    j["ace_error"] = p.ace_error;
    j["command_disruption"] = p.command_disruption;
  }
}

}  // namespace lfc
