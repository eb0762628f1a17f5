#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfc/attack.hpp"
#include "lfc/config.hpp"
#include "lfc/features.hpp"
#include "lfc/sim.hpp"
#include "lfc/util.hpp"

namespace lfc {

/// Class labels of the detection dataset: normal load variation plus the
/// three disturbance shapes of a frequency-deviation injection attack.
enum class InstanceClass { Normal = 0, Step = 1, Random = 2, Oscillating = 3 };

inline constexpr int kNumClasses = 4;

inline std::string to_string(InstanceClass c) {
  switch (c) {
    case InstanceClass::Normal: return "normal";
    case InstanceClass::Step: return "step";
    case InstanceClass::Random: return "random";
    case InstanceClass::Oscillating: return "oscillating";
  }
  return "?";
}

struct Instance {
  int label = 0;                     ///< InstanceClass value
  std::uint64_t seed = 0;
  std::vector<double> features;      ///< DFT magnitudes of the normalized ACE
  std::vector<double> gate_series;   ///< operator-visible freq deviation, 10 Hz
};

struct DatasetOptions {
  std::vector<int> counts = {60, 60, 60, 60};  ///< per class, Normal first
  std::uint64_t seed = 1;
  int n_bins = 16;
  double load_base = 0.05;      ///< pu; each instance draws base * U[0.5, 1.5]
  double attack_base = 0.01;    ///< Hz; attacked instances draw base * U[0.5, 1.5]
  double osc_frequency = 0.2;   ///< Hz
  ThresholdConfig gate;         ///< window geometry of the gate series
  double window_start = 5.0;    ///< s, analysis window offset into the run
};

/// Attack prototype shared by every attacked instance: additive falsification
/// of the study-area frequency deviation, shape per class.
inline AttackSpec dataset_attack(const DatasetOptions& opt, InstanceClass cls,
                                 double amplitude, double onset,
                                 std::uint32_t noise_seed) {
  AttackSpec a;
  a.point = AttackPoint::AreaFreqDev;
  a.tmpl = AttackTemplate::Injection;
  a.onset = onset;
  a.d.amplitude = amplitude;
  a.d.frequency = opt.osc_frequency;
  a.d.sample_rate = opt.gate.sample_rate;
  a.d.seed = noise_seed;
  switch (cls) {
    case InstanceClass::Step: a.d.shape = SignalShape::Step; break;
    case InstanceClass::Random: a.d.shape = SignalShape::Random; break;
    case InstanceClass::Oscillating: a.d.shape = SignalShape::Oscillating; break;
    case InstanceClass::Normal:
      throw std::invalid_argument("dataset_attack: normal class has no attack");
  }
  return a;
}

/// One simulated instance. Every instance carries a randomized load event;
/// attacked instances add the class-shaped disturbance. The feature vector is
/// the DFT of the peak-normalized true ACE over the analysis window; the gate
/// series is the falsified frequency deviation over the same window.
inline Instance make_instance(const SystemConfig& cfg,
                              const DatasetOptions& opt, InstanceClass cls,
                              std::uint64_t instance_seed) {
  const double t0 = opt.window_start;
  const double span = opt.gate.inspection_time;
  SimOptions sim_opt;
  sim_opt.horizon = t0 + span + 5.0;
  sim_opt.dt = 0.01;
  sim_opt.record_stride =
      static_cast<int>(std::llround(1.0 / (opt.gate.sample_rate * sim_opt.dt)));

  LoadEvent load;
  load.area = cfg.study_area;
  load.magnitude = opt.load_base * (0.5 + uniform01(instance_seed, 0));
  load.onset = 1.0 + 2.0 * uniform01(instance_seed, 1);

  std::optional<AttackSpec> attack;
  if (cls != InstanceClass::Normal) {
    const double amp = opt.attack_base * (0.5 + uniform01(instance_seed, 2));
    const double onset = t0 + 3.0 + 7.0 * uniform01(instance_seed, 3);
    const auto noise_seed = static_cast<std::uint32_t>(
        splitmix64(instance_seed ^ 0x5eedULL) & 0xffffffffULL);
    attack = dataset_attack(opt, cls, amp, onset, noise_seed);
  }

  const SimResult res = simulate(cfg, attack, load, sim_opt);
  if (res.diverged)
    throw std::runtime_error("make_instance: probe run diverged");

  const auto first =
      static_cast<std::size_t>(std::llround(t0 * opt.gate.sample_rate));
  const auto len = static_cast<std::size_t>(opt.gate.series_length());
  if (first + len > res.time.size())
    throw std::runtime_error("make_instance: analysis window outside the run");

  Instance inst;
  inst.label = static_cast<int>(cls);
  inst.seed = instance_seed;

  std::vector<double> ace(len);
  double peak = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    ace[i] = res.ace_true[first + i];
    peak = std::max(peak, std::abs(ace[i]));
  }
  if (peak > 0.0)
    for (double& v : ace) v /= peak;
  inst.features = extract_dft(ace, opt.n_bins);

  const auto study = static_cast<std::size_t>(cfg.study_area);
  inst.gate_series.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    const double t = res.time[first + i];
    const double df = res.freq_dev[study][first + i];
    inst.gate_series[i] = attack ? attack->apply(df, t) : df;
  }
  return inst;
}

/// Full dataset: counts per class, deterministic per-instance seeds.
inline std::vector<Instance> generate_dataset(const SystemConfig& cfg,
                                              const DatasetOptions& opt) {
  if (static_cast<int>(opt.counts.size()) != kNumClasses)
    throw std::invalid_argument("generate_dataset: need one count per class");
  std::vector<Instance> out;
  for (int c = 0; c < kNumClasses; ++c) {
    const int n = opt.counts[static_cast<std::size_t>(c)];
    if (n < 0) throw std::invalid_argument("generate_dataset: negative count");
    for (int i = 0; i < n; ++i) {
      const std::uint64_t iseed =
          splitmix64(opt.seed ^ splitmix64(static_cast<std::uint64_t>(c) * 100000ULL +
                                           static_cast<std::uint64_t>(i)));
      out.push_back(
          make_instance(cfg, opt, static_cast<InstanceClass>(c), iseed));
    }
  }
  return out;
}

/// One row per instance: label, seed, then the feature values.
inline void write_features_csv(const std::vector<Instance>& data,
                               const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const std::size_t n_bins = data.empty() ? 0 : data.front().features.size();
  out << "label,seed";
  for (std::size_t b = 0; b < n_bins; ++b) out << ",dft_" << b;
  out << '\n';
  char buf[40];
  for (const Instance& inst : data) {
    out << inst.label << ',' << inst.seed;
    for (double v : inst.features) {
      std::snprintf(buf, sizeof buf, ",%.12g", v);
      out << buf;
    }
    out << '\n';
  }
}

/// Inverse of write_features_csv; gate series are not stored in the CSV.
inline std::vector<Instance> read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty feature file " + path);
  std::vector<Instance> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> tok;
    std::size_t pos = 0;
    while (pos <= line.size()) {
      const std::size_t comma = line.find(',', pos);
      tok.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (tok.size() < 3)
      throw std::runtime_error("malformed feature row in " + path);
    Instance inst;
    inst.label = std::stoi(tok[0]);
    inst.seed = std::stoull(tok[1]);
    for (std::size_t k = 2; k < tok.size(); ++k)
      inst.features.push_back(std::stod(tok[k]));
    out.push_back(std::move(inst));
  }
  return out;
}

inline void to_json(nlohmann::json& j, const DatasetOptions& o) {
  j = {{"counts", o.counts},
       {"seed", o.seed},
       {"n_bins", o.n_bins},
       {"load_base", o.load_base},
       {"attack_base", o.attack_base},
       {"osc_frequency", o.osc_frequency},
       {"sample_rate", o.gate.sample_rate},
       {"inspection_time", o.gate.inspection_time},
       {"gate_window", o.gate.window},
       {"window_start", o.window_start}};
}

inline void write_manifest(const SystemConfig& cfg, const DatasetOptions& opt,
                           std::size_t n_instances, const std::string& path) {
  nlohmann::json j = {{"options", opt},
                      {"config_hash", config_hash(cfg)},
                      {"instances", n_instances},
                      {"classes",
                       {to_string(InstanceClass::Normal),
                        to_string(InstanceClass::Step),
                        to_string(InstanceClass::Random),
                        to_string(InstanceClass::Oscillating)}}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace lfc
