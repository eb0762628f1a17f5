#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lfc/dataset.hpp"
#include "lfc/features.hpp"
#include "lfc/util.hpp"

namespace lfc {

using Matrix = std::vector<std::vector<double>>;

/// Per-attribute affine normalization fitted on training data.
struct Standardizer {
  std::vector<double> mu, sigma;

  void fit(const Matrix& x) {
    if (x.empty()) throw std::invalid_argument("Standardizer: empty data");
    const std::size_t d = x.front().size();
    mu.assign(d, 0.0);
    sigma.assign(d, 0.0);
    for (const auto& row : x)
      for (std::size_t k = 0; k < d; ++k) mu[k] += row[k];
    for (double& m : mu) m /= static_cast<double>(x.size());
    for (const auto& row : x)
      for (std::size_t k = 0; k < d; ++k)
        sigma[k] += (row[k] - mu[k]) * (row[k] - mu[k]);
    for (double& s : sigma)
      s = std::max(std::sqrt(s / static_cast<double>(x.size())), 1e-9);
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      out[k] = (x[k] - mu[k]) / sigma[k];
    return out;
  }
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline std::vector<double> softmax(const std::vector<double>& z) {
  const double zmax = *std::max_element(z.begin(), z.end());
  std::vector<double> y(z.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    y[k] = std::exp(z[k] - zmax);
    sum += y[k];
  }
  for (double& v : y) v /= sum;
  return y;
}

/// Glorot-style uniform init, deterministic in (seed, counter).
inline void init_layer(Matrix& w, std::vector<double>& b, int n_out, int n_in,
                       std::uint64_t seed, std::uint64_t& counter) {
  const double bound = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
  w.assign(static_cast<std::size_t>(n_out),
           std::vector<double>(static_cast<std::size_t>(n_in)));
  b.assign(static_cast<std::size_t>(n_out), 0.0);
  for (auto& row : w)
    for (double& v : row) v = bound * uniform_pm1(seed, counter++);
}

/// Deterministic Fisher-Yates shuffle.
inline void shuffle_indices(std::vector<std::size_t>& idx, std::uint64_t seed,
                            std::uint64_t salt) {
  for (std::size_t i = idx.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(
        uniform01(seed, salt * 1000003ULL + i) * static_cast<double>(i));
    std::swap(idx[i - 1], idx[std::min(j, i - 1)]);
  }
}

}  // namespace detail

// --- multilayer perceptron ---

/// Feed-forward net: sigmoid hidden layers, softmax output, squared-error
/// loss E = 1/2 sum ||y - d||^2.
struct MLPModel {
  std::vector<int> sizes;          ///< [input, hidden..., classes]
  std::vector<Matrix> w;           ///< w[l][out][in]
  std::vector<std::vector<double>> b;
  Standardizer norm;

  int n_classes() const { return sizes.back(); }

  /// Activations per layer for an already-normalized input.
  std::vector<std::vector<double>> forward(const std::vector<double>& x) const {
    std::vector<std::vector<double>> act;
    act.push_back(x);
    for (std::size_t l = 0; l < w.size(); ++l) {
      const auto& prev = act.back();
      std::vector<double> z(b[l].size());
      for (std::size_t o = 0; o < z.size(); ++o) {
        double s = b[l][o];
        for (std::size_t i = 0; i < prev.size(); ++i) s += w[l][o][i] * prev[i];
        z[o] = s;
      }
      if (l + 1 == w.size()) {
        act.push_back(detail::softmax(z));
      } else {
        for (double& v : z) v = detail::sigmoid(v);
        act.push_back(std::move(z));
      }
    }
    return act;
  }

  std::vector<double> scores(const std::vector<double>& raw) const {
    return forward(norm.apply(raw)).back();
  }

  int predict(const std::vector<double>& raw) const {
    const auto y = scores(raw);
    return static_cast<int>(std::max_element(y.begin(), y.end()) - y.begin());
  }
};

/// Loss and per-parameter gradients for one normalized sample; gradients are
/// laid out layer by layer, weights row-major then biases.
inline double mlp_backprop(const MLPModel& m, const std::vector<double>& x,
                           const std::vector<double>& target,
                           std::vector<Matrix>* grad_w,
                           std::vector<std::vector<double>>* grad_b) {
  const auto act = m.forward(x);
  const auto& y = act.back();
  double loss = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k)
    loss += 0.5 * (y[k] - target[k]) * (y[k] - target[k]);
  if (!grad_w) return loss;

  // softmax Jacobian applied to dE/dy
  std::vector<double> delta(y.size());
  double dot = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) dot += (y[k] - target[k]) * y[k];
  for (std::size_t k = 0; k < y.size(); ++k)
    delta[k] = y[k] * ((y[k] - target[k]) - dot);

  grad_w->resize(m.w.size());
  grad_b->resize(m.b.size());
  for (std::size_t l = m.w.size(); l-- > 0;) {
    const auto& prev = act[l];
    (*grad_b)[l] = delta;
    (*grad_w)[l].assign(delta.size(), std::vector<double>(prev.size()));
    for (std::size_t o = 0; o < delta.size(); ++o)
      for (std::size_t i = 0; i < prev.size(); ++i)
        (*grad_w)[l][o][i] = delta[o] * prev[i];
    if (l == 0) break;
    std::vector<double> next(prev.size(), 0.0);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      double s = 0.0;
      for (std::size_t o = 0; o < delta.size(); ++o) s += m.w[l][o][i] * delta[o];
      next[i] = s * prev[i] * (1.0 - prev[i]);
    }
    delta = std::move(next);
  }
  return loss;
}

inline std::vector<double> flatten_params(const MLPModel& m) {
  std::vector<double> out;
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    for (const auto& row : m.w[l]) out.insert(out.end(), row.begin(), row.end());
    out.insert(out.end(), m.b[l].begin(), m.b[l].end());
  }
  return out;
}

inline void unflatten_params(MLPModel& m, const std::vector<double>& flat) {
  std::size_t p = 0;
  for (std::size_t l = 0; l < m.w.size(); ++l) {
    for (auto& row : m.w[l])
      for (double& v : row) v = flat.at(p++);
    for (double& v : m.b[l]) v = flat.at(p++);
  }
  if (p != flat.size())
    throw std::invalid_argument("unflatten_params: size mismatch");
}

/// Flat analytic gradient of the per-sample loss, matching flatten_params.
inline std::vector<double> mlp_gradient(const MLPModel& m,
                                        const std::vector<double>& x,
                                        const std::vector<double>& target) {
  std::vector<Matrix> gw;
  std::vector<std::vector<double>> gb;
  mlp_backprop(m, x, target, &gw, &gb);
  std::vector<double> out;
  for (std::size_t l = 0; l < gw.size(); ++l) {
    for (const auto& row : gw[l]) out.insert(out.end(), row.begin(), row.end());
    out.insert(out.end(), gb[l].begin(), gb[l].end());
  }
  return out;
}

inline MLPModel make_mlp(const std::vector<int>& sizes, std::uint64_t seed) {
  if (sizes.size() < 2)
    throw std::invalid_argument("make_mlp: need input and output layers");
  MLPModel m;
  m.sizes = sizes;
  m.w.resize(sizes.size() - 1);
  m.b.resize(sizes.size() - 1);
  std::uint64_t counter = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    detail::init_layer(m.w[l], m.b[l], sizes[l + 1], sizes[l], seed, counter);
  m.norm.mu.assign(static_cast<std::size_t>(sizes.front()), 0.0);
  m.norm.sigma.assign(static_cast<std::size_t>(sizes.front()), 1.0);
  return m;
}

struct MLPTrainOptions {
  std::vector<int> hidden = {100, 60, 30};
  int epochs = 60;
  double learning_rate = 0.5;
  std::uint64_t seed = 7;
};

inline MLPModel train_mlp(const Matrix& features,
                          const std::vector<int>& labels, int n_classes,
                          const MLPTrainOptions& opt = {}) {
  if (features.size() != labels.size() || features.empty())
    throw std::invalid_argument("train_mlp: bad training set");
  if (n_classes < 2) throw std::invalid_argument("train_mlp: need >= 2 classes");
  std::vector<int> sizes;
  sizes.push_back(static_cast<int>(features.front().size()));
  sizes.insert(sizes.end(), opt.hidden.begin(), opt.hidden.end());
  sizes.push_back(n_classes);
  MLPModel m = make_mlp(sizes, opt.seed);
  m.norm.fit(features);

  Matrix x(features.size());
  for (std::size_t i = 0; i < features.size(); ++i)
    x[i] = m.norm.apply(features[i]);

  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<Matrix> gw;
  std::vector<std::vector<double>> gb;
  std::vector<double> target(static_cast<std::size_t>(n_classes));
  for (int e = 0; e < opt.epochs; ++e) {
    detail::shuffle_indices(order, opt.seed ^ 0xabcdULL,
                            static_cast<std::uint64_t>(e));
    for (std::size_t i : order) {
      std::fill(target.begin(), target.end(), 0.0);
      target.at(static_cast<std::size_t>(labels[i])) = 1.0;
      const double loss = mlp_backprop(m, x[i], target, &gw, &gb);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_mlp: loss diverged at epoch " +
                                 std::to_string(e));
      for (std::size_t l = 0; l < m.w.size(); ++l) {
        for (std::size_t o = 0; o < m.b[l].size(); ++o) {
          m.b[l][o] -= opt.learning_rate * gb[l][o];
          for (std::size_t k = 0; k < m.w[l][o].size(); ++k)
            m.w[l][o][k] -= opt.learning_rate * gw[l][o][k];
        }
      }
    }
  }
  return m;
}

// --- autoencoder ---

/// One sigmoid bottleneck layer with a linear decoder, trained on
/// reconstruction loss 1/2 ||xhat - x||^2.
struct AutoencoderModel {
  int n_in = 0, bottleneck = 0;
  Matrix w_enc;              ///< [bottleneck][n_in]
  std::vector<double> b_enc;
  Matrix w_dec;              ///< [n_in][bottleneck]
  std::vector<double> b_dec;
  Standardizer norm;

  std::vector<double> code(const std::vector<double>& z) const {
    std::vector<double> h(static_cast<std::size_t>(bottleneck));
    for (std::size_t o = 0; o < h.size(); ++o) {
      double s = b_enc[o];
      for (std::size_t i = 0; i < z.size(); ++i) s += w_enc[o][i] * z[i];
      h[o] = detail::sigmoid(s);
    }
    return h;
  }

  std::vector<double> reconstruct(const std::vector<double>& z) const {
    const auto h = code(z);
    std::vector<double> out(static_cast<std::size_t>(n_in));
    for (std::size_t o = 0; o < out.size(); ++o) {
      double s = b_dec[o];
      for (std::size_t i = 0; i < h.size(); ++i) s += w_dec[o][i] * h[i];
      out[o] = s;
    }
    return out;
  }

  std::vector<double> encode(const std::vector<double>& raw) const {
    return code(norm.apply(raw));
  }
};

struct AutoencoderTrainOptions {
  int bottleneck = 8;
  int epochs = 50;
  double learning_rate = 0.05;
  std::uint64_t seed = 11;
};

inline double autoencoder_batch_loss(const AutoencoderModel& m,
                                     const Matrix& z) {
  double total = 0.0;
  for (const auto& row : z) {
    const auto out = m.reconstruct(row);
    for (std::size_t k = 0; k < row.size(); ++k)
      total += 0.5 * (out[k] - row[k]) * (out[k] - row[k]);
  }
  return total / static_cast<double>(z.size());
}

inline AutoencoderModel train_autoencoder(
    const Matrix& features, const AutoencoderTrainOptions& opt = {},
    std::vector<double>* loss_log = nullptr) {
  if (features.empty())
    throw std::invalid_argument("train_autoencoder: empty training set");
  const int n_in = static_cast<int>(features.front().size());
  if (opt.bottleneck >= n_in)
    throw std::invalid_argument("train_autoencoder: bottleneck must be < input");
  AutoencoderModel m;
  m.n_in = n_in;
  m.bottleneck = opt.bottleneck;
  std::uint64_t counter = 0;
  detail::init_layer(m.w_enc, m.b_enc, opt.bottleneck, n_in, opt.seed, counter);
  detail::init_layer(m.w_dec, m.b_dec, n_in, opt.bottleneck, opt.seed, counter);
  m.norm.fit(features);
  Matrix z(features.size());
  for (std::size_t i = 0; i < features.size(); ++i)
    z[i] = m.norm.apply(features[i]);

  if (loss_log) loss_log->push_back(autoencoder_batch_loss(m, z));
  for (int e = 0; e < opt.epochs; ++e) {
    for (const auto& x : z) {
      const auto h = m.code(x);
      const auto out = m.reconstruct(x);
      std::vector<double> d_out(out.size());
      for (std::size_t k = 0; k < out.size(); ++k) d_out[k] = out[k] - x[k];
      std::vector<double> d_h(h.size(), 0.0);
      for (std::size_t i = 0; i < h.size(); ++i) {
        double s = 0.0;
        for (std::size_t o = 0; o < out.size(); ++o)
          s += m.w_dec[o][i] * d_out[o];
        d_h[i] = s * h[i] * (1.0 - h[i]);
      }
      for (std::size_t o = 0; o < out.size(); ++o) {
        m.b_dec[o] -= opt.learning_rate * d_out[o];
        for (std::size_t i = 0; i < h.size(); ++i)
          m.w_dec[o][i] -= opt.learning_rate * d_out[o] * h[i];
      }
      for (std::size_t o = 0; o < h.size(); ++o) {
        m.b_enc[o] -= opt.learning_rate * d_h[o];
        for (std::size_t i = 0; i < x.size(); ++i)
          m.w_enc[o][i] -= opt.learning_rate * d_h[o] * x[i];
      }
    }
    if (loss_log) loss_log->push_back(autoencoder_batch_loss(m, z));
  }
  return m;
}

// --- Gaussian naive Bayes ---

struct NaiveBayesModel {
  std::vector<double> log_prior;  ///< per class
  Matrix mean;                    ///< [class][attribute]
  Matrix var;                     ///< floored

  std::vector<double> log_posterior(const std::vector<double>& x) const {
    std::vector<double> lp(log_prior.size());
    for (std::size_t c = 0; c < lp.size(); ++c) {
      double s = log_prior[c];
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double v = var[c][k];
        const double diff = x[k] - mean[c][k];
        s += -0.5 * std::log(2.0 * std::numbers::pi * v) -
             diff * diff / (2.0 * v);
      }
      lp[c] = s;
    }
    return lp;
  }

  int predict(const std::vector<double>& x) const {
    const auto lp = log_posterior(x);
    return static_cast<int>(std::max_element(lp.begin(), lp.end()) -
                            lp.begin());
  }
};

inline NaiveBayesModel train_bayes(const Matrix& features,
                                   const std::vector<int>& labels,
                                   int n_classes, double var_floor = 1e-9) {
  if (features.size() != labels.size() || features.empty())
    throw std::invalid_argument("train_bayes: bad training set");
  const std::size_t d = features.front().size();
  const auto nc = static_cast<std::size_t>(n_classes);
  std::vector<double> count(nc, 0.0);
  NaiveBayesModel m;
  m.mean.assign(nc, std::vector<double>(d, 0.0));
  m.var.assign(nc, std::vector<double>(d, 0.0));
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    count.at(c) += 1.0;
    for (std::size_t k = 0; k < d; ++k) m.mean[c][k] += features[i][k];
  }
  for (std::size_t c = 0; c < nc; ++c) {
    if (count[c] < 1.0)
      throw std::invalid_argument("train_bayes: class " + std::to_string(c) +
                                  " has no instances");
    for (double& v : m.mean[c]) v /= count[c];
  }
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    for (std::size_t k = 0; k < d; ++k) {
      const double diff = features[i][k] - m.mean[c][k];
      m.var[c][k] += diff * diff;
    }
  }
  m.log_prior.resize(nc);
  const auto total = static_cast<double>(features.size());
  for (std::size_t c = 0; c < nc; ++c) {
    m.log_prior[c] = std::log(count[c] / total);
    for (double& v : m.var[c]) v = std::max(v / count[c], var_floor);
  }
  return m;
}

// --- linear multiclass SVM ---

/// One linear score per class; trained by full-batch subgradient descent on
/// the multiclass hinge objective, predicted by argmax score.
struct SVMModel {
  Matrix w;                       ///< [class][attribute]
  std::vector<double> b;
  Standardizer norm;
  std::vector<double> objective_log;  ///< per epoch

  std::vector<double> scores(const std::vector<double>& raw) const {
    const auto x = norm.apply(raw);
    std::vector<double> s(w.size());
    for (std::size_t c = 0; c < w.size(); ++c) {
      double v = b[c];
      for (std::size_t k = 0; k < x.size(); ++k) v += w[c][k] * x[k];
      s[c] = v;
    }
    return s;
  }

  int predict(const std::vector<double>& raw) const {
    const auto s = scores(raw);
    return static_cast<int>(std::max_element(s.begin(), s.end()) - s.begin());
  }
};

struct SVMTrainOptions {
  double cost = 10.0;   ///< C
  int epochs = 200;
  double learning_rate = 1e-3;
  double lr_decay = 0.02;
};

namespace detail {

inline double svm_objective(const SVMModel& m, const Matrix& x,
                            const std::vector<int>& labels, double cost) {
  double obj = 0.0;
  for (const auto& row : m.w)
    for (double v : row) obj += 0.5 * v * v;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::vector<double> s(m.w.size());
    for (std::size_t c = 0; c < m.w.size(); ++c) {
      double v = m.b[c];
      for (std::size_t k = 0; k < x[i].size(); ++k) v += m.w[c][k] * x[i][k];
      s[c] = v;
    }
    const auto y = static_cast<std::size_t>(labels[i]);
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < s.size(); ++c)
      if (c != y) worst = std::max(worst, s[c]);
    obj += cost * std::max(0.0, 1.0 + worst - s[y]);
  }
  return obj;
}

}  // namespace detail

inline SVMModel train_svm(const Matrix& features,
                          const std::vector<int>& labels, int n_classes,
                          const SVMTrainOptions& opt = {}) {
  if (features.size() != labels.size() || features.empty())
    throw std::invalid_argument("train_svm: bad training set");
  if (n_classes < 2) throw std::invalid_argument("train_svm: need >= 2 classes");
  const std::size_t d = features.front().size();
  SVMModel m;
  m.norm.fit(features);
  m.w.assign(static_cast<std::size_t>(n_classes), std::vector<double>(d, 0.0));
  m.b.assign(static_cast<std::size_t>(n_classes), 0.0);
  Matrix x(features.size());
  for (std::size_t i = 0; i < features.size(); ++i)
    x[i] = m.norm.apply(features[i]);

  Matrix gw(m.w.size(), std::vector<double>(d));
  std::vector<double> gb(m.b.size());
  for (int e = 0; e < opt.epochs; ++e) {
    m.objective_log.push_back(detail::svm_objective(m, x, labels, opt.cost));
    for (std::size_t c = 0; c < m.w.size(); ++c) {
      gw[c] = m.w[c];  // regularizer subgradient
      gb[c] = 0.0;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      std::vector<double> s(m.w.size());
      for (std::size_t c = 0; c < m.w.size(); ++c) {
        double v = m.b[c];
        for (std::size_t k = 0; k < d; ++k) v += m.w[c][k] * x[i][k];
        s[c] = v;
      }
      const auto y = static_cast<std::size_t>(labels[i]);
      std::size_t rival = y == 0 ? 1 : 0;
      for (std::size_t c = 0; c < s.size(); ++c)
        if (c != y && s[c] > s[rival]) rival = c;
      if (1.0 + s[rival] - s[y] > 0.0) {
        for (std::size_t k = 0; k < d; ++k) {
          gw[rival][k] += opt.cost * x[i][k];
          gw[y][k] -= opt.cost * x[i][k];
        }
        gb[rival] += opt.cost;
        gb[y] -= opt.cost;
      }
    }
    const double lr =
        opt.learning_rate / (1.0 + opt.lr_decay * static_cast<double>(e));
    for (std::size_t c = 0; c < m.w.size(); ++c) {
      m.b[c] -= lr * gb[c];
      for (std::size_t k = 0; k < d; ++k) m.w[c][k] -= lr * gw[c][k];
    }
  }
  m.objective_log.push_back(
      detail::svm_objective(m, x, labels, opt.cost));
  return m;
}

// --- composite detector ---

/// Threshold gate on the operator-visible frequency deviation, then a
/// three-class net typing the attack shape. Returns an InstanceClass value.
inline int composite_detect(const Instance& inst, const ThresholdConfig& gate,
                            const MLPModel& attack_net) {
  if (attack_net.n_classes() != kNumClasses - 1)
    throw std::invalid_argument(
        "composite_detect: net must cover the attack classes only");
  const ThresholdVerdict v = threshold_detect(inst.gate_series, gate);
  if (!v.compromised) return static_cast<int>(InstanceClass::Normal);
  return attack_net.predict(inst.features) + 1;
}

// --- evaluation grid ---

enum class ClassifierKind { Mlp, Svm, Bayes };

inline std::string to_string(ClassifierKind k) {
  switch (k) {
    case ClassifierKind::Mlp: return "mlp";
    case ClassifierKind::Svm: return "svm";
    case ClassifierKind::Bayes: return "bayes";
  }
  return "?";
}

struct EvalGrid {
  ClassifierKind kind = ClassifierKind::Mlp;
  std::vector<int> attack_counts = {60, 50, 40, 30, 20, 10};
  std::vector<double> test_ratios = {0.7, 0.6, 0.5, 0.4, 0.3};
  Matrix accuracy;                          ///< [composition][ratio]
  std::vector<std::vector<bool>> skipped;   ///< empty-class cells
};

struct GridOptions {
  std::uint64_t seed = 42;
  MLPTrainOptions mlp;
  SVMTrainOptions svm;
};

/// Deterministic stratified subsample + split, train, test for every cell.
/// The dataset must contain every class; the normal class is always used in
/// full, the attack classes are cut down per composition setting.
inline EvalGrid evaluate_grid(ClassifierKind kind,
                              const std::vector<Instance>& data,
                              const GridOptions& opt = {}) {
  EvalGrid grid;
  grid.kind = kind;
  std::vector<std::vector<std::size_t>> by_class(kNumClasses);
  for (std::size_t i = 0; i < data.size(); ++i)
    by_class.at(static_cast<std::size_t>(data[i].label)).push_back(i);
  for (int c = 0; c < kNumClasses; ++c)
    if (by_class[static_cast<std::size_t>(c)].empty())
      throw std::invalid_argument("evaluate_grid: class " + std::to_string(c) +
                                  " missing from dataset");

  const std::size_t n_comp = grid.attack_counts.size();
  const std::size_t n_ratio = grid.test_ratios.size();
  grid.accuracy.assign(n_comp, std::vector<double>(n_ratio, 0.0));
  grid.skipped.assign(n_comp, std::vector<bool>(n_ratio, false));

  for (std::size_t ci = 0; ci < n_comp; ++ci) {
    for (std::size_t ri = 0; ri < n_ratio; ++ri) {
      const double ratio = grid.test_ratios[ri];
      Matrix train_x, test_x;
      std::vector<int> train_y, test_y;
      bool skip = false;
      for (int c = 0; c < kNumClasses; ++c) {
        auto idx = by_class[static_cast<std::size_t>(c)];
        detail::shuffle_indices(
            idx, opt.seed ^ (ci * 101ULL + ri * 7919ULL),
            static_cast<std::uint64_t>(c));
        std::size_t take = idx.size();
        if (c != static_cast<int>(InstanceClass::Normal))
          take = std::min<std::size_t>(
              take, static_cast<std::size_t>(grid.attack_counts[ci]));
        const auto n_test =
            static_cast<std::size_t>(std::llround(ratio * static_cast<double>(take)));
        if (n_test == 0 || n_test >= take) {
          skip = true;
          break;
        }
        for (std::size_t i = 0; i < take; ++i) {
          const Instance& inst = data[idx[i]];
          if (i < n_test) {
            test_x.push_back(inst.features);
            test_y.push_back(inst.label);
          } else {
            train_x.push_back(inst.features);
            train_y.push_back(inst.label);
          }
        }
      }
      if (skip) {
        grid.skipped[ci][ri] = true;
        continue;
      }
      std::function<int(const std::vector<double>&)> predict;
      MLPModel mlp;
      SVMModel svm;
      NaiveBayesModel bayes;
      switch (kind) {
        case ClassifierKind::Mlp: {
          MLPTrainOptions o = opt.mlp;
          o.seed = opt.seed ^ (ci * 131ULL + ri);
          mlp = train_mlp(train_x, train_y, kNumClasses, o);
          predict = [&](const std::vector<double>& x) { return mlp.predict(x); };
          break;
        }
        case ClassifierKind::Svm:
          svm = train_svm(train_x, train_y, kNumClasses, opt.svm);
          predict = [&](const std::vector<double>& x) { return svm.predict(x); };
          break;
        case ClassifierKind::Bayes:
          bayes = train_bayes(train_x, train_y, kNumClasses);
          predict = [&](const std::vector<double>& x) { return bayes.predict(x); };
          break;
      }
      std::size_t correct = 0;
      for (std::size_t i = 0; i < test_x.size(); ++i)
        if (predict(test_x[i]) == test_y[i]) ++correct;
      grid.accuracy[ci][ri] =
          static_cast<double>(correct) / static_cast<double>(test_x.size());
    }
  }
  return grid;
}

inline double worst_cell(const EvalGrid& grid) {
  double worst = 1.0;
  for (std::size_t c = 0; c < grid.accuracy.size(); ++c)
    for (std::size_t r = 0; r < grid.accuracy[c].size(); ++r)
      if (!grid.skipped[c][r]) worst = std::min(worst, grid.accuracy[c][r]);
  return worst;
}

/// Rows = composition settings, columns = test ratios; skipped cells blank.
inline void write_grid_csv(const EvalGrid& grid, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "attack_count";
  for (double r : grid.test_ratios) {
    char h[32];
    std::snprintf(h, sizeof h, ",test_%.2g", r);
    out << h;
  }
  out << '\n';
  for (std::size_t c = 0; c < grid.accuracy.size(); ++c) {
    out << grid.attack_counts[c];
    for (std::size_t r = 0; r < grid.accuracy[c].size(); ++r) {
      if (grid.skipped[c][r]) {
        out << ",skipped";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, ",%.12g", grid.accuracy[c][r]);
        out << buf;
      }
    }
    out << '\n';
  }
}

// --- model (de)serialization ---

inline void to_json(nlohmann::json& j, const Standardizer& s) {
  j = {{"mu", s.mu}, {"sigma", s.sigma}};
}
inline void from_json(const nlohmann::json& j, Standardizer& s) {
  j.at("mu").get_to(s.mu);
  j.at("sigma").get_to(s.sigma);
}

inline void to_json(nlohmann::json& j, const MLPModel& m) {
  j = {{"kind", "mlp"},
       {"sizes", m.sizes},
       {"weights", m.w},
       {"biases", m.b},
       {"norm", m.norm}};
}
inline void from_json(const nlohmann::json& j, MLPModel& m) {
  j.at("sizes").get_to(m.sizes);
  j.at("weights").get_to(m.w);
  j.at("biases").get_to(m.b);
  j.at("norm").get_to(m.norm);
}

inline void to_json(nlohmann::json& j, const NaiveBayesModel& m) {
  j = {{"kind", "bayes"},
       {"log_prior", m.log_prior},
       {"mean", m.mean},
       {"var", m.var}};
}
inline void from_json(const nlohmann::json& j, NaiveBayesModel& m) {
  j.at("log_prior").get_to(m.log_prior);
  j.at("mean").get_to(m.mean);
  j.at("var").get_to(m.var);
}

inline void to_json(nlohmann::json& j, const SVMModel& m) {
  j = {{"kind", "svm"}, {"weights", m.w}, {"biases", m.b}, {"norm", m.norm}};
}
inline void from_json(const nlohmann::json& j, SVMModel& m) {
  j.at("weights").get_to(m.w);
  j.at("biases").get_to(m.b);
  j.at("norm").get_to(m.norm);
}

template <typename Model>
void save_model(const Model& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << nlohmann::json(m).dump(2) << '\n';
}

template <typename Model>
Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  Model m;
  nlohmann::json::parse(in).get_to(m);
  return m;
}

}  // namespace lfc
