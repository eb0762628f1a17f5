#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "helpers.hpp"
#include "lfc/classify.hpp"
#include "lfc/dataset.hpp"
#include "lfc/util.hpp"

using namespace lfc;

namespace {

/// Two well-separated Gaussian-ish blobs in 2-D, deterministic.
void toy_blobs(Matrix& x, std::vector<int>& y, int per_class,
               std::uint64_t seed) {
  x.clear();
  y.clear();
  for (int c = 0; c < 2; ++c) {
    const double cx = c == 0 ? -2.0 : 2.0;
    for (int i = 0; i < per_class; ++i) {
      const auto n = static_cast<std::uint64_t>(c * per_class + i);
      x.push_back({cx + 0.3 * uniform_pm1(seed, 2 * n),
                   0.3 * uniform_pm1(seed, 2 * n + 1)});
      y.push_back(c);
    }
  }
}

/// Minimal synthetic instances with class-dependent features, no simulation.
std::vector<Instance> synthetic_instances(const std::vector<int>& counts,
                                          std::uint64_t seed) {
  std::vector<Instance> out;
  for (int c = 0; c < kNumClasses; ++c) {
    for (int i = 0; i < counts[static_cast<std::size_t>(c)]; ++i) {
      Instance inst;
      inst.label = c;
      inst.seed = static_cast<std::uint64_t>(c * 1000 + i);
      for (int k = 0; k < 4; ++k)
        inst.features.push_back(
            static_cast<double>(c == k) * 3.0 +
            0.1 * uniform_pm1(seed, inst.seed * 8 + static_cast<std::uint64_t>(k)));
      out.push_back(std::move(inst));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("softmax outputs are a probability vector") {
  MLPModel m = make_mlp({5, 7, 3}, 3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(5);
    for (std::size_t k = 0; k < x.size(); ++k)
      x[k] = 2.0 * uniform_pm1(static_cast<std::uint64_t>(trial), k);
    const auto y = m.forward(x).back();
    double sum = 0.0;
    for (double v : y) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) <= 1e-9);
  }
}

TEST_CASE("backprop gradients match central finite differences") {
  for (int trial = 0; trial < 20; ++trial) {
    const auto seed = static_cast<std::uint64_t>(trial);
    const int n_in = 2 + static_cast<int>(uniform01(seed, 900) * 4.0);
    const int n_hidden = 2 + static_cast<int>(uniform01(seed, 901) * 5.0);
    const int n_out = 2 + static_cast<int>(uniform01(seed, 902) * 3.0);
    MLPModel m = make_mlp({n_in, n_hidden, n_out}, seed);
    std::vector<double> x(static_cast<std::size_t>(n_in));
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = uniform_pm1(seed, k);
    std::vector<double> target(static_cast<std::size_t>(n_out), 0.0);
    target[static_cast<std::size_t>(trial) % target.size()] = 1.0;
    CHECK(testutil::mlp_gradient_check(m, x, target) <= 1e-5);
  }
}

TEST_CASE("the net fits a separable toy problem within ten epochs") {
  Matrix x;
  std::vector<int> y;
  toy_blobs(x, y, 20, 5);
  MLPTrainOptions opt;
  opt.hidden = {8};
  opt.epochs = 10;
  const MLPModel m = train_mlp(x, y, 2, opt);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.predict(x[i]) == y[i]);
}

TEST_CASE("training input validation") {
  CHECK_THROWS_AS(train_mlp({}, {}, 2), std::invalid_argument);
  CHECK_THROWS_AS(train_mlp({{1.0}}, {0}, 1), std::invalid_argument);
  CHECK_THROWS_AS(train_svm({}, {}, 2), std::invalid_argument);
  CHECK_THROWS_AS(train_bayes({}, {}, 2), std::invalid_argument);
}

TEST_CASE("naive Bayes splits two one-dimensional Gaussians at equality") {
  // equal variances and priors: the boundary is the midpoint of the means
  Matrix x;
  std::vector<int> y;
  for (int i = 0; i < 50; ++i) {
    const double noise = uniform_pm1(11, static_cast<std::uint64_t>(i));
    x.push_back({noise});
    y.push_back(0);
    x.push_back({4.0 + noise});
    y.push_back(1);
  }
  const NaiveBayesModel m = train_bayes(x, y, 2);
  const double mid = (m.mean[0][0] + m.mean[1][0]) / 2.0;
  CHECK(m.predict({mid - 0.2}) == 0);
  CHECK(m.predict({mid + 0.2}) == 1);
}

TEST_CASE("naive Bayes equals a brute-force posterior evaluation") {
  const auto data = synthetic_instances({8, 8, 8, 8}, 21);
  Matrix x;
  std::vector<int> y;
  for (const auto& inst : data) {
    x.push_back(inst.features);
    y.push_back(inst.label);
  }
  const NaiveBayesModel m = train_bayes(x, y, kNumClasses);
  for (const auto& row : x) {
    // independent recomputation straight from the stored densities
    int best = 0;
    double best_lp = -1e300;
    for (std::size_t c = 0; c < m.log_prior.size(); ++c) {
      double lp = m.log_prior[c];
      for (std::size_t k = 0; k < row.size(); ++k)
        lp += std::log(1.0 / std::sqrt(2.0 * std::numbers::pi * m.var[c][k])) -
              (row[k] - m.mean[c][k]) * (row[k] - m.mean[c][k]) /
                  (2.0 * m.var[c][k]);
      if (lp > best_lp) {
        best_lp = lp;
        best = static_cast<int>(c);
      }
    }
    CHECK(m.predict(row) == best);
  }
}

TEST_CASE("naive Bayes argmax is invariant to a common prior rescale") {
  const auto data = synthetic_instances({6, 6, 6, 6}, 33);
  Matrix x;
  std::vector<int> y;
  for (const auto& inst : data) {
    x.push_back(inst.features);
    y.push_back(inst.label);
  }
  NaiveBayesModel m = train_bayes(x, y, kNumClasses);
  NaiveBayesModel scaled = m;
  for (double& lp : scaled.log_prior) lp += std::log(7.0);
  for (const auto& row : x) CHECK(m.predict(row) == scaled.predict(row));
}

TEST_CASE("Bayes requires every class in training") {
  CHECK_THROWS_AS(train_bayes({{1.0}, {2.0}}, {0, 0}, 2),
                  std::invalid_argument);
}

TEST_CASE("the linear SVM separates a separable toy problem") {
  Matrix x;
  std::vector<int> y;
  toy_blobs(x, y, 20, 9);
  const SVMModel m = train_svm(x, y, 2);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(m.predict(x[i]) == y[i]);
}

TEST_CASE("the SVM objective decreases over training") {
  Matrix x;
  std::vector<int> y;
  toy_blobs(x, y, 25, 13);
  const SVMModel m = train_svm(x, y, 2);
  REQUIRE(m.objective_log.size() >= 2);
  CHECK(m.objective_log.back() < m.objective_log.front());
  int violations = 0;
  for (std::size_t e = 1; e < m.objective_log.size(); ++e)
    if (m.objective_log[e] > m.objective_log[e - 1] + 1e-6) ++violations;
  CHECK(violations <= static_cast<int>(m.objective_log.size() / 10));
}

TEST_CASE("SVM argmax is invariant to a common bias shift") {
  Matrix x;
  std::vector<int> y;
  toy_blobs(x, y, 15, 17);
  SVMModel m = train_svm(x, y, 2);
  SVMModel shifted = m;
  for (double& b : shifted.b) b += 3.7;
  for (const auto& row : x) CHECK(m.predict(row) == shifted.predict(row));
}

TEST_CASE("autoencoder reconstruction loss is non-increasing") {
  const auto data = synthetic_instances({10, 10, 10, 10}, 41);
  Matrix x;
  for (const auto& inst : data) x.push_back(inst.features);
  AutoencoderTrainOptions opt;
  opt.bottleneck = 2;
  opt.epochs = 30;
  opt.learning_rate = 0.01;
  std::vector<double> log;
  train_autoencoder(x, opt, &log);
  REQUIRE(log.size() == static_cast<std::size_t>(opt.epochs) + 1);
  int violations = 0;
  for (std::size_t e = 1; e < log.size(); ++e)
    if (log[e] > log[e - 1] + 1e-6) ++violations;
  CHECK(violations == 0);
  CHECK_THROWS_AS(train_autoencoder(x, AutoencoderTrainOptions{16, 5, 0.01, 1}),
                  std::invalid_argument);
}

TEST_CASE("an autoencoder front-end preserves toy separability") {
  // The class signal must span several correlated inputs: per-feature
  // standardization levels the variances, so a one-dimensional bottleneck
  // can only prefer the class direction when it dominates jointly.
  Matrix x;
  std::vector<int> y;
  const std::uint64_t seed = 51;
  for (int c = 0; c < 2; ++c) {
    const double cx = c == 0 ? -2.0 : 2.0;
    for (int i = 0; i < 20; ++i) {
      const auto n = static_cast<std::uint64_t>(c * 20 + i);
      x.push_back({cx + 0.3 * uniform_pm1(seed, 4 * n),
                   cx + 0.3 * uniform_pm1(seed, 4 * n + 1),
                   cx + 0.3 * uniform_pm1(seed, 4 * n + 2),
                   0.3 * uniform_pm1(seed, 4 * n + 3)});
      y.push_back(c);
    }
  }
  AutoencoderTrainOptions aopt;
  aopt.bottleneck = 1;
  aopt.epochs = 80;
  const AutoencoderModel enc = train_autoencoder(x, aopt);
  Matrix codes;
  for (const auto& row : x) codes.push_back(enc.encode(row));
  MLPTrainOptions mopt;
  mopt.hidden = {6};
  mopt.epochs = 40;
  const MLPModel m = train_mlp(codes, y, 2, mopt);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < codes.size(); ++i)
    if (m.predict(codes[i]) == y[i]) ++correct;
  CHECK(static_cast<double>(correct) / static_cast<double>(codes.size()) >= 0.95);
}

TEST_CASE("models survive a JSON round-trip with identical predictions") {
  namespace fs = std::filesystem;
  Matrix x;
  std::vector<int> y;
  toy_blobs(x, y, 10, 61);
  const auto dir = fs::temp_directory_path();

  const MLPModel mlp = train_mlp(x, y, 2, {{6}, 10, 0.5, 3});
  const auto mlp_path = (dir / "lfc_mlp.json").string();
  save_model(mlp, mlp_path);
  const auto mlp2 = load_model<MLPModel>(mlp_path);
  const SVMModel svm = train_svm(x, y, 2);
  const auto svm_path = (dir / "lfc_svm.json").string();
  save_model(svm, svm_path);
  const auto svm2 = load_model<SVMModel>(svm_path);
  const NaiveBayesModel nb = train_bayes(x, y, 2);
  const auto nb_path = (dir / "lfc_nb.json").string();
  save_model(nb, nb_path);
  const auto nb2 = load_model<NaiveBayesModel>(nb_path);
  for (const auto& row : x) {
    CHECK(mlp.predict(row) == mlp2.predict(row));
    CHECK(svm.predict(row) == svm2.predict(row));
    CHECK(nb.predict(row) == nb2.predict(row));
  }
  fs::remove(mlp_path);
  fs::remove(svm_path);
  fs::remove(nb_path);
}

TEST_CASE("grid evaluation is deterministic and bounds its cells") {
  const auto data = synthetic_instances({20, 12, 12, 12}, 71);
  GridOptions opt;
  opt.mlp.epochs = 5;
  opt.mlp.hidden = {8};
  const EvalGrid a = evaluate_grid(ClassifierKind::Bayes, data, opt);
  const EvalGrid b = evaluate_grid(ClassifierKind::Bayes, data, opt);
  CHECK(a.accuracy == b.accuracy);
  for (std::size_t c = 0; c < a.accuracy.size(); ++c)
    for (std::size_t r = 0; r < a.accuracy[c].size(); ++r) {
      CHECK(a.accuracy[c][r] >= 0.0);
      CHECK(a.accuracy[c][r] <= 1.0);
    }
}

TEST_CASE("grid cells that would empty a split are skipped, missing classes throw") {
  const auto tiny = synthetic_instances({4, 1, 4, 4}, 81);
  const EvalGrid g = evaluate_grid(ClassifierKind::Bayes, tiny);
  bool any_skipped = false;
  for (const auto& row : g.skipped)
    for (bool s : row) any_skipped |= s;
  CHECK(any_skipped);

  const auto missing = synthetic_instances({4, 0, 4, 4}, 91);
  CHECK_THROWS_AS(evaluate_grid(ClassifierKind::Bayes, missing),
                  std::invalid_argument);
}

TEST_CASE("composite detector rejects a wrongly sized net") {
  Matrix x;
  std::vector<int> y;
  toy_blobs(x, y, 5, 99);
  const MLPModel two_class = train_mlp(x, y, 2, {{4}, 2, 0.5, 1});
  Instance inst;
  ThresholdConfig gate;
  gate.threshold = 2.0;
  CHECK_THROWS_AS(composite_detect(inst, gate, two_class),
                  std::invalid_argument);
}
