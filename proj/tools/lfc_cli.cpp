#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lfc/classify.hpp"
#include "lfc/config.hpp"
#include "lfc/dataset.hpp"
#include "lfc/oracle.hpp"
#include "lfc/sim.hpp"
#include "lfc/vulnerability.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr const char* kConfigEnv = "LFC_CONFIG";

lfc::SystemConfig resolve_config(const std::string& path) {
  if (!path.empty()) return lfc::load_config(path);
  if (const char* env = std::getenv(kConfigEnv); env && *env)
    return lfc::load_config(env);
  return lfc::default_config();
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

/// Every command writes one of these next to its outputs; a run is
/// reproducible from the manifest alone.
void write_manifest_file(const fs::path& dir, const std::string& command,
                         const json& args,
                         const std::vector<std::string>& outputs) {
  json j = {{"command", command},
            {"args", args},
            {"outputs", outputs},
            {"version", kVersion},
            {"timestamp", timestamp()}};
  std::ofstream out(dir / (command + "_manifest.json"));
  if (!out) throw std::runtime_error("cannot write manifest");
  out << j.dump(2) << '\n';
}

lfc::SignalShape parse_shape(const std::string& s) {
  if (s == "step") return lfc::SignalShape::Step;
  if (s == "random") return lfc::SignalShape::Random;
  if (s == "oscillating") return lfc::SignalShape::Oscillating;
  throw CLI::ValidationError("--shape", "must be step|random|oscillating");
}

int cmd_simulate(const std::string& cfg_path, const fs::path& out_dir,
                 int scenario_idx, double d, double k, const std::string& shape,
                 double freq, double onset, std::uint64_t seed,
                 double load_mag, double load_onset, double horizon,
                 double dt) {
  const lfc::SystemConfig cfg = resolve_config(cfg_path);
  lfc::AttackSpec spec = lfc::scenario(scenario_idx).proto;
  if (spec.tmpl == lfc::AttackTemplate::Scale) {
    spec.gain = k;
  } else {
    spec.d.shape = parse_shape(shape);
    spec.d.amplitude = d;
    spec.d.frequency = freq;
    spec.d.seed = static_cast<std::uint32_t>(seed);
  }
  spec.onset = onset;
  std::optional<lfc::LoadEvent> load;
  if (load_mag != 0.0)
    load = lfc::LoadEvent{cfg.study_area, load_mag, load_onset};
  lfc::SimOptions opt;
  opt.horizon = horizon;
  opt.dt = dt;

  const lfc::SimResult res = lfc::simulate(cfg, spec, load, opt);
  const lfc::QuasiSteadyState q = lfc::quasi_steady_state(res, cfg);
  const lfc::SteadyStatePrediction pred = lfc::predict(cfg, spec);

  fs::create_directories(out_dir);
  const std::string csv = (out_dir / "trajectories.csv").string();
  lfc::write_csv(res, csv);

  json summary = {
      {"scenario", scenario_idx},
      {"description", lfc::scenario(scenario_idx).description},
      {"attack", spec},
      {"diverged", res.diverged},
      {"quasi_steady_state",
       {{"converged", q.converged},
        {"freq_dev", q.freq_dev},
        {"tie_dev", q.tie_dev},
        {"command", q.command}}},
      {"oracle", pred},
      {"destabilized",
       res.diverged || pred.cls == lfc::ConvergenceClass::Destabilized}};
  const std::string sum_path = (out_dir / "summary.json").string();
  std::ofstream sum(sum_path);
  sum << summary.dump(2) << '\n';

  write_manifest_file(out_dir, "simulate",
                      json{{"config", cfg_path},
                           {"config_hash", lfc::config_hash(cfg)},
                           {"scenario", scenario_idx},
                           {"d", d},
                           {"k", k},
                           {"shape", shape},
                           {"onset", onset},
                           {"seed", seed},
                           {"load", load_mag},
                           {"load_onset", load_onset},
                           {"horizon", horizon},
                           {"dt", dt}},
                      {csv, sum_path});
  std::cout << summary.dump(2) << '\n';
  return 0;
}

int cmd_assess(const std::string& cfg_path, const fs::path& out_dir, double d,
               double k, bool simulated) {
  const lfc::SystemConfig cfg = resolve_config(cfg_path);
  const auto source =
      simulated ? lfc::ScoreSource::Simulated : lfc::ScoreSource::Oracle;
  lfc::ScoreOptions opt;
  opt.d = d;
  opt.k = k;

  std::vector<lfc::SensitivityScore> scores;
  json failures = json::array();
  for (const lfc::Scenario& sc : lfc::scenario_catalog()) {
    try {
      scores.push_back(lfc::score_scenario(cfg, sc.index, source, opt));
    } catch (const std::exception& e) {
      failures.push_back({{"scenario", sc.index}, {"error", e.what()}});
      lfc::SensitivityScore blank;
      blank.scenario = sc.index;
      blank.d_i = opt.d;
      blank.source = source;
      scores.push_back(blank);
    }
  }

  fs::create_directories(out_dir);
  const std::string scores_csv = (out_dir / "scores.csv").string();
  lfc::write_scores_csv(scores, scores_csv);

  std::vector<std::string> outputs = {scores_csv};
  for (const auto goal :
       {lfc::TreeGoal::LfcPerformance, lfc::TreeGoal::Generation}) {
    const lfc::AttackTree tree = lfc::build_tree(cfg, goal, scores);
    const std::string base = "tree_" + lfc::to_string(goal);
    const std::string tree_path = (out_dir / (base + ".json")).string();
    std::ofstream tf(tree_path);
    tf << json(tree).dump(2) << '\n';
    const std::string rank_path = (out_dir / ("ranking_" + lfc::to_string(goal) + ".csv")).string();
    std::ofstream rf(rank_path);
    rf << "rank,scenario,score\n";
    int r = 1;
    char buf[64];
    for (const auto& [idx, value] : lfc::rank(tree)) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.12g\n", r++, idx, value);
      rf << buf;
    }
    outputs.push_back(tree_path);
    outputs.push_back(rank_path);
  }

  write_manifest_file(out_dir, "assess",
                      json{{"config", cfg_path},
                           {"config_hash", lfc::config_hash(cfg)},
                           {"d", d},
                           {"k", k},
                           {"source", lfc::to_string(source)},
                           {"failures", failures}},
                      outputs);
  if (!failures.empty())
    std::cerr << "warning: " << failures.size() << " scenario(s) failed\n";
  std::cout << "assessment written to " << out_dir.string() << '\n';
  return 0;
}

int cmd_dataset(const std::string& cfg_path, const fs::path& out_dir,
                std::vector<int> counts, std::uint64_t seed) {
  const lfc::SystemConfig cfg = resolve_config(cfg_path);
  lfc::DatasetOptions opt;
  if (!counts.empty()) opt.counts = std::move(counts);
  opt.seed = seed;

  const auto data = lfc::generate_dataset(cfg, opt);
  fs::create_directories(out_dir);
  const std::string feat = (out_dir / "features.csv").string();
  lfc::write_features_csv(data, feat);
  const std::string man = (out_dir / "dataset_manifest.json").string();
  lfc::write_manifest(cfg, opt, data.size(), man);
  write_manifest_file(out_dir, "dataset",
                      json{{"config", cfg_path},
                           {"config_hash", lfc::config_hash(cfg)},
                           {"counts", opt.counts},
                           {"seed", seed}},
                      {feat, man});
  std::cout << "wrote " << data.size() << " instances to " << feat << '\n';
  return 0;
}

int cmd_train_eval(const std::string& kind_str, const std::string& features,
                   const fs::path& out_dir, std::uint64_t seed, int epochs,
                   double lr) {
  lfc::ClassifierKind kind;
  if (kind_str == "mlp") kind = lfc::ClassifierKind::Mlp;
  else if (kind_str == "svm") kind = lfc::ClassifierKind::Svm;
  else if (kind_str == "bayes") kind = lfc::ClassifierKind::Bayes;
  else throw CLI::ValidationError("--kind", "must be mlp|svm|bayes");

  const auto data = lfc::read_features_csv(features);
  lfc::GridOptions opt;
  opt.seed = seed;
  if (epochs > 0) opt.mlp.epochs = epochs;
  if (lr > 0.0) opt.mlp.learning_rate = lr;

  const lfc::EvalGrid grid = lfc::evaluate_grid(kind, data, opt);
  fs::create_directories(out_dir);
  const std::string grid_csv =
      (out_dir / ("grid_" + kind_str + ".csv")).string();
  lfc::write_grid_csv(grid, grid_csv);

  json cells = json::array();
  for (std::size_t c = 0; c < grid.accuracy.size(); ++c)
    for (std::size_t r = 0; r < grid.accuracy[c].size(); ++r)
      cells.push_back({{"attack_count", grid.attack_counts[c]},
                       {"test_ratio", grid.test_ratios[r]},
                       {"accuracy", grid.accuracy[c][r]},
                       {"skipped", static_cast<bool>(grid.skipped[c][r])}});
  const std::string log_path =
      (out_dir / ("grid_" + kind_str + "_cells.json")).string();
  std::ofstream lf(log_path);
  lf << cells.dump(2) << '\n';

  write_manifest_file(out_dir, "train-eval",
                      json{{"kind", kind_str},
                           {"features", features},
                           {"seed", seed},
                           {"epochs", opt.mlp.epochs},
                           {"learning_rate", opt.mlp.learning_rate}},
                      {grid_csv, log_path});
  std::printf("%s grid: worst cell %.4f\n", kind_str.c_str(),
              lfc::worst_cell(grid));
  return 0;
}

int cmd_catalog(bool as_json) {
  if (as_json) {
    std::cout << json(lfc::scenario_catalog()).dump(2) << '\n';
    return 0;
  }
  for (const lfc::Scenario& sc : lfc::scenario_catalog())
    std::printf("%2d  L%d  %s\n", sc.index, lfc::attack_level(sc.proto.point),
                sc.description.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-area load frequency control attack workbench"};
  app.require_subcommand(1);

  std::string cfg_path;
  app.add_option("--config", cfg_path,
                 "system config JSON (default: $" + std::string(kConfigEnv) +
                     " or the built-in benchmark)");
  std::string out_str = ".";
  app.add_option("--out", out_str, "output directory");

  auto* sim = app.add_subcommand("simulate", "run one attack scenario");
  int scenario_idx = 0;
  sim->add_option("--scenario", scenario_idx, "catalog index 1..25")
      ->required()
      ->check(CLI::Range(1, 25));
  double d = 0.01, k = 1.01, freq = 0.2, onset = 1.0;
  double load_mag = 0.0, load_onset = 1.0, horizon = 200.0, dt = 0.01;
  std::uint64_t seed = 1;
  std::string shape = "step";
  sim->add_option("-d,--amplitude", d, "injection amplitude");
  sim->add_option("-k,--gain", k, "scale gain");
  sim->add_option("--shape", shape, "injection shape: step|random|oscillating");
  sim->add_option("--frequency", freq, "oscillating shape frequency, Hz");
  sim->add_option("--onset", onset, "attack onset, s");
  sim->add_option("--seed", seed, "random shape seed");
  sim->add_option("--load", load_mag, "step load magnitude, pu");
  sim->add_option("--load-onset", load_onset, "load onset, s");
  sim->add_option("--horizon", horizon, "simulation horizon, s");
  sim->add_option("--dt", dt, "integration step, s");

  auto* assess = app.add_subcommand("assess", "score and rank all scenarios");
  double probe_d = 0.01, probe_k = 1.01;
  bool oracle_source = false;
  assess->add_option("-d,--amplitude", probe_d, "injection probe amplitude");
  assess->add_option("-k,--gain", probe_k, "scale probe gain");
  assess->add_flag("--oracle", oracle_source,
                   "score from the closed form instead of simulation");

  auto* ds = app.add_subcommand("dataset", "generate the detection dataset");
  std::vector<int> counts;
  std::uint64_t ds_seed = 1;
  ds->add_option("--counts", counts,
                 "instances per class: normal step random oscillating")
      ->expected(4);
  ds->add_option("--seed", ds_seed, "dataset seed");

  auto* te = app.add_subcommand("train-eval", "train a classifier on a grid");
  std::string kind = "mlp", features;
  std::uint64_t te_seed = 42;
  int epochs = 0;
  double lr = 0.0;
  te->add_option("--kind", kind, "mlp|svm|bayes")->required();
  te->add_option("--features", features, "features.csv from the dataset command")
      ->required();
  te->add_option("--seed", te_seed, "grid seed");
  te->add_option("--epochs", epochs, "MLP epochs override");
  te->add_option("--learning-rate", lr, "MLP learning rate override");

  auto* cat = app.add_subcommand("catalog", "print the attack scenario list");
  bool cat_json = false;
  cat->add_flag("--json", cat_json, "emit JSON");

  CLI11_PARSE(app, argc, argv);
  const fs::path out_dir(out_str);
  try {
    if (sim->parsed())
      return cmd_simulate(cfg_path, out_dir, scenario_idx, d, k, shape, freq,
                          onset, seed, load_mag, load_onset, horizon, dt);
    if (assess->parsed())
      return cmd_assess(cfg_path, out_dir, probe_d, probe_k, !oracle_source);
    if (ds->parsed()) return cmd_dataset(cfg_path, out_dir, counts, ds_seed);
    if (te->parsed())
      return cmd_train_eval(kind, features, out_dir, te_seed, epochs, lr);
    if (cat->parsed()) return cmd_catalog(cat_json);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
