#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfc/attack.hpp"
#include "lfc/config.hpp"
#include "lfc/util.hpp"

namespace lfc {

/// Step increase of area load.
struct LoadEvent {
  int area = 0;
  double magnitude = 0.0;  ///< pu
  double onset = 0.0;      ///< s
};

struct SimOptions {
  double horizon = 200.0;    ///< s
  double dt = 0.01;          ///< s
  double blowup_bound = 5.0; ///< Hz; exceeding it flags divergence
  int record_stride = 1;     ///< keep every n-th step
};

struct SimResult {
  std::vector<double> time;
  std::vector<std::vector<double>> freq_dev;    ///< [area][sample], Hz
  std::vector<std::vector<double>> tie_dev;     ///< [tie][sample], pu (from -> to)
  std::vector<double> ace_true;                 ///< study area, pu
  std::vector<double> ace_falsified;            ///< study area, pu
  std::vector<std::vector<double>> command;     ///< [area][sample]; delivered total, pu
  std::vector<std::vector<double>> gen_command; ///< [study unit][sample], pu
  bool diverged = false;
  double diverged_at = 0.0;

  std::string config_hash;
  nlohmann::json attack_meta;
  nlohmann::json load_meta;
  double dt = 0.0;
  double horizon = 0.0;
};

/// Settled values over the final 5% of the horizon.
struct QuasiSteadyState {
  double freq_dev = 0.0;         ///< study area, Hz
  std::vector<double> tie_dev;   ///< per study tie, seen from the study area, pu
  double command = 0.0;          ///< settled delivered LFC command of the study area, pu
  bool converged = true;
};

/// Inertia-weighted aggregation of per-unit frequency measurements of the
/// study area.
inline double measure_coi_frequency(const SystemConfig& cfg,
                                    std::span<const double> unit_freqs) {
  const AreaParams& a = cfg.areas[static_cast<std::size_t>(cfg.study_area)];
  if (unit_freqs.size() != a.generators.size())
    throw std::invalid_argument("measure_coi_frequency: expected one measurement per generator");
  double num = 0.0, den = 0.0;
  for (std::size_t j = 0; j < a.generators.size(); ++j) {
    num += a.generators[j].inertia * unit_freqs[j];
    den += a.generators[j].inertia;
  }
  return num / den;
}

namespace detail {

/// Precomputed indices and parameters for the linearized multi-area model.
///
/// State layout: [freq per area | (pg, pm) per generator | flow per tie |
/// ACE integral per area].
struct Engine {
  const SystemConfig& cfg;
  const AttackSpec* attack;  // may be null
  const LoadEvent* load;     // may be null

  int n_areas, n_ties, n_states;
  std::vector<int> gen_offset;     // per area: first (pg, pm) slot
  std::vector<double> area_inertia;
  std::vector<double> area_beta;
  int tie_offset, z_offset;
  std::vector<std::vector<std::pair<int, double>>> ties_of;  // (tie, sign)
  std::vector<int> study_tie_ordinal;  // tie id -> ordinal among study ties, or -1

  explicit Engine(const SystemConfig& c, const AttackSpec* atk,
                  const LoadEvent* ld)
      : cfg(c), attack(atk), load(ld) {
    n_areas = static_cast<int>(cfg.areas.size());
    n_ties = static_cast<int>(cfg.tielines.size());
    gen_offset.resize(static_cast<std::size_t>(n_areas));
    int off = n_areas;
    for (int a = 0; a < n_areas; ++a) {
      gen_offset[static_cast<std::size_t>(a)] = off;
      off += 2 * static_cast<int>(cfg.areas[static_cast<std::size_t>(a)].generators.size());
      double h = 0.0;
      for (const auto& g : cfg.areas[static_cast<std::size_t>(a)].generators)
        h += g.inertia;
      area_inertia.push_back(h);
      area_beta.push_back(area_bias(cfg, a));
    }
    tie_offset = off;
    z_offset = off + n_ties;
    n_states = z_offset + n_areas;
    ties_of.resize(static_cast<std::size_t>(n_areas));
    for (int a = 0; a < n_areas; ++a) ties_of[static_cast<std::size_t>(a)] = incident_ties(cfg, a);
    study_tie_ordinal.assign(static_cast<std::size_t>(n_ties), -1);
    const auto& st = ties_of[static_cast<std::size_t>(cfg.study_area)];
    for (std::size_t o = 0; o < st.size(); ++o)
      study_tie_ordinal[static_cast<std::size_t>(st[o].first)] = static_cast<int>(o);
  }

  bool attacks(AttackPoint p) const { return attack && attack->point == p; }
  bool attacks(AttackPoint p, int idx) const {
    return attack && attack->point == p && attack->index == idx;
  }

  /// Tie deviation as perceived by one end's controller, including Level-1
  /// and Level-2 falsifications. A Level-1 measurement attack falsifies the
  /// shared telemetry channel at both ends; the deviation is formed against
  /// the equally falsified reference, so an additive offset cancels and a
  /// gain survives as a gain on the deviation.
  double perceived_tie_dev(int area, int tie, double true_dev, double t) const {
    double dev = true_dev;
    const int ordinal = study_tie_ordinal[static_cast<std::size_t>(tie)];
    if (attacks(AttackPoint::TieFlowMeas, ordinal) &&
        attack->tmpl == AttackTemplate::Scale && t >= attack->onset)
      dev *= attack->gain;
    if (area == cfg.study_area) {
      if (attacks(AttackPoint::TieFlowDev, ordinal))
        dev = attack->apply(dev, t);
      if (attacks(AttackPoint::TieNominalFlow, ordinal))
        dev -= attack->apply(0.0, t);
    }
    return dev;
  }

  /// Falsified study-area frequency deviation as seen by its controller.
  /// Works in the deviation domain so that when no frequency-chain
  /// falsification is active the true deviation passes through untouched
  /// (the no-attack falsified ACE must be bit-identical to the true one).
  double perceived_freq_dev(double true_dev, double t) const {
    if (!attack || t < attack->onset) return true_dev;
    const AreaParams& a = cfg.areas[static_cast<std::size_t>(cfg.study_area)];
    const double f0 = a.nominal_frequency;
    switch (attack->point) {
      case AttackPoint::GeneratorFreq: {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < a.generators.size(); ++j) {
          // uniform-frequency area: units share the COI
          double dm = true_dev;
          if (static_cast<int>(j) == attack->index)
            dm = attack->apply(f0 + true_dev, t) - f0;
          num += a.generators[j].inertia * dm;
          den += a.generators[j].inertia;
        }
        return num / den;
      }
      case AttackPoint::AreaFreq:
        return attack->apply(f0 + true_dev, t) - f0;
      case AttackPoint::NominalFreq:
        // dfm = (f0 + true_dev) - falsified f0, expanded to avoid the
        // cancellation-prone absolute-frequency round trip
        if (attack->tmpl == AttackTemplate::Scale)
          return true_dev + (1.0 - attack->gain) * f0;
        return true_dev - attack->d.value(t - attack->onset);
      case AttackPoint::AreaFreqDev:
        return attack->apply(true_dev, t);
      default:
        return true_dev;
    }
  }

  double ace(int area, std::span<const double> x, double t, bool falsified) const {
    double total = 0.0;
    for (const auto& [tie, sgn] : ties_of[static_cast<std::size_t>(area)]) {
      const double dev = sgn * x[static_cast<std::size_t>(tie_offset + tie)];
      total += falsified ? perceived_tie_dev(area, tie, dev, t) : dev;
    }
    double fdev = x[static_cast<std::size_t>(area)];
    if (falsified && area == cfg.study_area) {
      if (attacks(AttackPoint::TieFlowDevTotal)) total = attack->apply(total, t);
      fdev = perceived_freq_dev(fdev, t);
    }
    return total + area_beta[static_cast<std::size_t>(area)] * fdev;
  }

  /// Per-unit delivered commands for one area at state x.
  void commands(int area, std::span<const double> x, double t,
                std::vector<double>& out) const {
    const AreaParams& a = cfg.areas[static_cast<std::size_t>(area)];
    const double ace_used = ace(area, x, t, /*falsified=*/true);
    const double u = -a.kp * ace_used - a.ki * x[static_cast<std::size_t>(z_offset + area)];
    out.resize(a.generators.size());
    for (std::size_t j = 0; j < a.generators.size(); ++j) {
      double com = a.generators[j].allocation * u;
      if (area == cfg.study_area && attacks(AttackPoint::GenCommand, static_cast<int>(j)))
        com = attack->apply(com, t);
      out[j] = com;
    }
  }

  void derivative(double t, std::span<const double> x,
                  std::span<double> dx) const {
    std::vector<double> com;
    for (int a = 0; a < n_areas; ++a) {
      const AreaParams& area = cfg.areas[static_cast<std::size_t>(a)];
      const double fdev = x[static_cast<std::size_t>(a)];
      commands(a, x, t, com);
      double pm_sum = 0.0;
      for (std::size_t j = 0; j < area.generators.size(); ++j) {
        const GeneratorParams& g = area.generators[j];
        const std::size_t pg_i = static_cast<std::size_t>(gen_offset[static_cast<std::size_t>(a)]) + 2 * j;
        const double pg = x[pg_i], pm = x[pg_i + 1];
        dx[pg_i] = (com[j] - fdev / g.droop - pg) / g.governor_tc;
        dx[pg_i + 1] = (pg - pm) / g.turbine_tc;
        pm_sum += pm;
      }
      double tie_out = 0.0;
      for (const auto& [tie, sgn] : ties_of[static_cast<std::size_t>(a)])
        tie_out += sgn * x[static_cast<std::size_t>(tie_offset + tie)];
      double disturb = 0.0;
      if (load && load->area == a && t >= load->onset) disturb = load->magnitude;
      dx[static_cast<std::size_t>(a)] =
          (pm_sum - disturb - area.damping * fdev - tie_out) /
          (2.0 * area_inertia[static_cast<std::size_t>(a)]);
      dx[static_cast<std::size_t>(z_offset + a)] = ace(a, x, t, /*falsified=*/true);
    }
    for (int tie = 0; tie < n_ties; ++tie) {
      const TieLine& tl = cfg.tielines[static_cast<std::size_t>(tie)];
      dx[static_cast<std::size_t>(tie_offset + tie)] =
          2.0 * std::numbers::pi * tl.stiffness *
          (x[static_cast<std::size_t>(tl.from)] - x[static_cast<std::size_t>(tl.to)]);
    }
  }
};

}  // namespace detail

/// Integrate the linearized multi-area LFC dynamics with classical RK4.
///
/// Pure function of its inputs; the config is shared read-only.
inline SimResult simulate(const SystemConfig& cfg,
                          const std::optional<AttackSpec>& attack = std::nullopt,
                          const std::optional<LoadEvent>& load = std::nullopt,
                          const SimOptions& opt = {}) {
  if (opt.dt <= 0.0) throw std::invalid_argument("simulate: dt must be > 0");
  if (opt.horizon < 100.0 * opt.dt)
    throw std::invalid_argument("simulate: horizon must cover at least 100 steps");
  if (attack) {
    const AreaParams& sa = cfg.areas[static_cast<std::size_t>(cfg.study_area)];
    const int n_units = static_cast<int>(sa.generators.size());
    const int n_study_ties =
        static_cast<int>(incident_ties(cfg, cfg.study_area).size());
    const AttackPoint p = attack->point;
    const bool unit_target =
        (p == AttackPoint::GeneratorFreq || p == AttackPoint::GenCommand);
    const bool tie_target =
        (p == AttackPoint::TieFlowMeas || p == AttackPoint::TieNominalFlow ||
         p == AttackPoint::TieFlowDev);
    if (unit_target && (attack->index < 0 || attack->index >= n_units))
      throw std::invalid_argument("simulate: attacked unit does not exist");
    if (tie_target && (attack->index < 0 || attack->index >= n_study_ties))
      throw std::invalid_argument("simulate: attacked tie-line does not exist");
    if (!std::isfinite(attack->gain))
      throw std::invalid_argument("simulate: scale gain must be finite");
  }
  if (load && (load->onset < 0.0 || load->onset > opt.horizon))
    throw std::invalid_argument("simulate: load onset outside horizon");

  const detail::Engine eng(cfg, attack ? &*attack : nullptr,
                           load ? &*load : nullptr);
  const auto n = static_cast<std::size_t>(eng.n_states);
  std::vector<double> x(n, 0.0), k1(n), k2(n), k3(n), k4(n), tmp(n);

  SimResult res;
  res.config_hash = config_hash(cfg);
  if (attack) res.attack_meta = *attack;
  if (load)
    res.load_meta = {{"area", load->area},
                     {"magnitude", load->magnitude},
                     {"onset", load->onset}};
  res.dt = opt.dt;
  res.horizon = opt.horizon;
  res.freq_dev.resize(static_cast<std::size_t>(eng.n_areas));
  res.tie_dev.resize(static_cast<std::size_t>(eng.n_ties));
  res.command.resize(static_cast<std::size_t>(eng.n_areas));
  const std::size_t n_units =
      cfg.areas[static_cast<std::size_t>(cfg.study_area)].generators.size();
  res.gen_command.resize(n_units);

  const auto n_steps = static_cast<std::size_t>(std::llround(opt.horizon / opt.dt));
  std::vector<double> com;
  auto record = [&](std::size_t step, double t) {
    if (step % static_cast<std::size_t>(opt.record_stride) != 0 && step != n_steps)
      return;
    res.time.push_back(t);
    for (int a = 0; a < eng.n_areas; ++a)
      res.freq_dev[static_cast<std::size_t>(a)].push_back(x[static_cast<std::size_t>(a)]);
    for (int tie = 0; tie < eng.n_ties; ++tie)
      res.tie_dev[static_cast<std::size_t>(tie)].push_back(
          x[static_cast<std::size_t>(eng.tie_offset + tie)]);
    res.ace_true.push_back(eng.ace(cfg.study_area, x, t, false));
    res.ace_falsified.push_back(eng.ace(cfg.study_area, x, t, true));
    for (int a = 0; a < eng.n_areas; ++a) {
      eng.commands(a, x, t, com);
      double total = 0.0;
      for (double c : com) total += c;
      res.command[static_cast<std::size_t>(a)].push_back(total);
      if (a == cfg.study_area)
        for (std::size_t j = 0; j < n_units; ++j)
          res.gen_command[j].push_back(com[j]);
    }
  };

  record(0, 0.0);
  for (std::size_t step = 0; step < n_steps; ++step) {
    const double t = static_cast<double>(step) * opt.dt;
    const double h = opt.dt;
    eng.derivative(t, x, k1);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    eng.derivative(t + 0.5 * h, tmp, k2);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    eng.derivative(t + 0.5 * h, tmp, k3);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = x[i] + h * k3[i];
    eng.derivative(t + h, tmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

    bool bad = false;
    for (int a = 0; a < eng.n_areas; ++a) {
      const double f = x[static_cast<std::size_t>(a)];
      if (!std::isfinite(f) || std::abs(f) > opt.blowup_bound) bad = true;
    }
    if (bad) {
      res.diverged = true;
      res.diverged_at = t + h;
      break;
    }
    record(step + 1, t + h);
  }
  return res;
}

/// Mean over the final 5% of the recorded horizon, with a settling check:
/// a signal is settled when its final-window standard deviation is below
/// 1e-4 of its scale (peak magnitude, floored at 1).
inline QuasiSteadyState quasi_steady_state(const SimResult& res,
                                           const SystemConfig& cfg) {
  QuasiSteadyState qss;
  if (res.time.size() < 20) {
    qss.converged = false;
    return qss;
  }
  const std::size_t n = res.time.size();
  const std::size_t w0 = n - std::max<std::size_t>(n / 20, 2);

  auto settle = [&](const std::vector<double>& sig, double& out) {
    std::vector<double> win(sig.begin() + static_cast<std::ptrdiff_t>(w0), sig.end());
    out = mean(win);
    double peak = 0.0;
    for (double v : sig) peak = std::max(peak, std::abs(v));
    const double scale = std::max(1.0, peak);
    if (std::sqrt(sample_variance(win)) > 1e-4 * scale) qss.converged = false;
  };

  if (res.diverged) qss.converged = false;
  const auto study = static_cast<std::size_t>(cfg.study_area);
  settle(res.freq_dev[study], qss.freq_dev);
  const auto ties = incident_ties(cfg, cfg.study_area);
  qss.tie_dev.resize(ties.size());
  for (std::size_t o = 0; o < ties.size(); ++o) {
    settle(res.tie_dev[static_cast<std::size_t>(ties[o].first)], qss.tie_dev[o]);
    qss.tie_dev[o] *= ties[o].second;  // sign as seen from the study area
  }
  settle(res.command[study], qss.command);
  return qss;
}

/// One column per trajectory; deterministic formatting.
inline void write_csv(const SimResult& res, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "time";
  for (std::size_t a = 0; a < res.freq_dev.size(); ++a) out << ",freq_dev_" << a;
  for (std::size_t t = 0; t < res.tie_dev.size(); ++t) out << ",tie_dev_" << t;
  out << ",ace_true,ace_falsified";
  for (std::size_t a = 0; a < res.command.size(); ++a) out << ",command_" << a;
  for (std::size_t j = 0; j < res.gen_command.size(); ++j)
    out << ",gen_command_" << j;
  out << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.12g", v);
    out << buf;
  };
  for (std::size_t i = 0; i < res.time.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.12g", res.time[i]);
    out << buf;
    for (const auto& tr : res.freq_dev) put(tr[i]);
    for (const auto& tr : res.tie_dev) put(tr[i]);
    put(res.ace_true[i]);
    put(res.ace_falsified[i]);
    for (const auto& tr : res.command) put(tr[i]);
    for (const auto& tr : res.gen_command) put(tr[i]);
    out << '\n';
  }
}

}  // namespace lfc
