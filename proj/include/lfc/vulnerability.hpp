#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfc/attack.hpp"
#include "lfc/config.hpp"
#include "lfc/oracle.hpp"
#include "lfc/sim.hpp"

namespace lfc {

enum class ScoreSource { Simulated, Oracle };

inline std::string to_string(ScoreSource s) {
  return s == ScoreSource::Simulated ? "simulated" : "oracle";
}

/// Per-unit-falsification impact of one catalog scenario.
struct SensitivityScore {
  int scenario = 0;        ///< 1-based catalog index
  double d_i = 0.0;        ///< falsification magnitude (|k - 1| for scale)
  double c_perf = 0.0;     ///< (beta_i|df| + sum|dP_tie|) / d_i
  double c_gen = 0.0;      ///< |du| / d_i
  bool unbounded = false;  ///< destabilized: no steady state, no finite score
  ScoreSource source = ScoreSource::Oracle;
};

struct ScoreOptions {
  double d = 0.01;    ///< injection probe amplitude (pu or Hz per target)
  double k = 1.01;    ///< scale probe gain
  SimOptions sim;     ///< simulated source only
};

/// Score one scenario from either the closed-form limit or a probe simulation.
inline SensitivityScore score_scenario(const SystemConfig& cfg,
                                       int scenario_index, ScoreSource source,
                                       const ScoreOptions& opt = {}) {
  AttackSpec spec = scenario(scenario_index).proto;
  const bool scale = (spec.tmpl == AttackTemplate::Scale);
  if (scale) spec.gain = opt.k;
  else spec.d.amplitude = opt.d;

  SensitivityScore sc;
  sc.scenario = scenario_index;
  sc.source = source;
  sc.d_i = scale ? std::abs(opt.k - 1.0) : std::abs(opt.d);
  if (sc.d_i <= 0.0)
    throw std::invalid_argument("score_scenario: probe magnitude must be > 0");

  const double beta_i = area_bias(cfg, cfg.study_area);
  if (source == ScoreSource::Oracle) {
    const SteadyStatePrediction p = predict(cfg, spec);
    if (p.cls == ConvergenceClass::Destabilized) {
      sc.unbounded = true;
      return sc;
    }
    // beta_i|df| + sum|dP| collapses to |e| exactly in the closed form, and
    // the command disruption is -e, so both indices are |e|/d_i.
    sc.c_perf = std::abs(p.ace_error) / sc.d_i;
    sc.c_gen = std::abs(p.command_disruption) / sc.d_i;
    return sc;
  }

  const SimResult res = simulate(cfg, spec, std::nullopt, opt.sim);
  const QuasiSteadyState q = quasi_steady_state(res, cfg);
  if (res.diverged || !q.converged) {
    sc.unbounded = true;
    return sc;
  }
  double tie_sum = 0.0;
  for (double t : q.tie_dev) tie_sum += std::abs(t);
  sc.c_perf = (beta_i * std::abs(q.freq_dev) + tie_sum) / sc.d_i;
  sc.c_gen = std::abs(q.command) / sc.d_i;
  return sc;
}

/// Relative gap between the two indices of one scenario; zero for the
/// oracle source by construction, small for the simulated source.
inline double theorem1_check(const SystemConfig& cfg, int scenario_index,
                             ScoreSource source = ScoreSource::Oracle,
                             const ScoreOptions& opt = {}) {
  const SensitivityScore sc = score_scenario(cfg, scenario_index, source, opt);
  if (sc.unbounded)
    throw std::domain_error("theorem1_check: scenario has no finite score");
  return std::abs(sc.c_perf - sc.c_gen) / std::max(sc.c_perf, 1e-12);
}

enum class TreeGoal { LfcPerformance, Generation };

inline std::string to_string(TreeGoal g) {
  return g == TreeGoal::LfcPerformance ? "lfc_performance" : "generation";
}

/// Goal-rooted tree: root, one branch per control level, scenario leaves.
struct AttackTree {
  TreeGoal goal = TreeGoal::LfcPerformance;
  std::vector<SensitivityScore> leaves;  ///< ordered by scenario index

  double leaf_value(const SensitivityScore& s) const {
    return goal == TreeGoal::LfcPerformance ? s.c_perf : s.c_gen;
  }
};

inline AttackTree build_tree(const SystemConfig& cfg, TreeGoal goal,
                             std::vector<SensitivityScore> scores) {
  const int n = static_cast<int>(scenario_catalog().size());
  std::sort(scores.begin(), scores.end(),
            [](const SensitivityScore& a, const SensitivityScore& b) {
              return a.scenario < b.scenario;
            });
  if (static_cast<int>(scores.size()) != n)
    throw std::invalid_argument("build_tree: expected " + std::to_string(n) +
                                " scores, got " +
                                std::to_string(scores.size()));
  for (int i = 0; i < n; ++i)
    if (scores[static_cast<std::size_t>(i)].scenario != i + 1)
      throw std::invalid_argument("build_tree: missing score for scenario " +
                                  std::to_string(i + 1));
  validate(cfg);
  return AttackTree{goal, std::move(scores)};
}

/// Leaves in descending impact order; unbounded leaves first, ties broken by
/// scenario index.
inline std::vector<std::pair<int, double>> rank(const AttackTree& tree) {
  std::vector<const SensitivityScore*> order;
  order.reserve(tree.leaves.size());
  for (const SensitivityScore& s : tree.leaves) order.push_back(&s);
  std::stable_sort(order.begin(), order.end(),
                   [&](const SensitivityScore* a, const SensitivityScore* b) {
                     if (a->unbounded != b->unbounded) return a->unbounded;
                     const double va = tree.leaf_value(*a);
                     const double vb = tree.leaf_value(*b);
                     if (va != vb) return va > vb;
                     return a->scenario < b->scenario;
                   });
  std::vector<std::pair<int, double>> out;
  out.reserve(order.size());
  for (const SensitivityScore* s : order)
    out.emplace_back(s->scenario, s->unbounded
                                      ? std::numeric_limits<double>::infinity()
                                      : tree.leaf_value(*s));
  return out;
}

// --- export ---

inline void to_json(nlohmann::json& j, const SensitivityScore& s) {
  j = {{"scenario", s.scenario},
       {"d_i", s.d_i},
       {"unbounded", s.unbounded},
       {"source", to_string(s.source)}};
  if (!s.unbounded) {
    j["c_perf"] = s.c_perf;
    j["c_gen"] = s.c_gen;
  }
}

inline void to_json(nlohmann::json& j, const AttackTree& tree) {
  nlohmann::json levels = nlohmann::json::array();
  for (int lvl = 1; lvl <= 3; ++lvl) {
    nlohmann::json node = {{"level", lvl},
                           {"leaves", nlohmann::json::array()}};
    for (const SensitivityScore& s : tree.leaves) {
      const Scenario& sc = scenario(s.scenario);
      if (attack_level(sc.proto.point) != lvl) continue;
      nlohmann::json leaf = s;
      leaf["description"] = sc.description;
      leaf["value"] = tree.leaf_value(s);
      node["leaves"].push_back(std::move(leaf));
    }
    levels.push_back(std::move(node));
  }
  j = {{"goal", to_string(tree.goal)}, {"levels", std::move(levels)}};
}

/// Flat per-scenario table for plotting: both indices side by side.
inline void write_scores_csv(const std::vector<SensitivityScore>& scores,
                             const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "scenario,level,point,template,d_i,c_perf,c_gen,theorem1_gap,unbounded\n";
  char buf[160];
  for (const SensitivityScore& s : scores) {
    const Scenario& sc = scenario(s.scenario);
    const double gap =
        s.unbounded ? 0.0
                    : std::abs(s.c_perf - s.c_gen) / std::max(s.c_perf, 1e-12);
    std::snprintf(buf, sizeof buf, "%d,%d,%s,%s,%.12g,%.12g,%.12g,%.12g,%d\n",
                  s.scenario, attack_level(sc.proto.point),
                  to_string(sc.proto.point).c_str(),
                  to_string(sc.proto.tmpl).c_str(), s.d_i, s.c_perf, s.c_gen,
                  gap, s.unbounded ? 1 : 0);
    out << buf;
  }
}

}  // namespace lfc
