#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfc/util.hpp"

namespace lfc {

/// Magnitudes of the first n_bins DFT coefficients of a fixed-length series,
/// computed per bin with the Goertzel recursion. The mean (bin 0) is kept.
inline std::vector<double> extract_dft(const std::vector<double>& series,
                                       int n_bins) {
  const auto len = series.size();
  if (n_bins < 1) throw std::invalid_argument("extract_dft: n_bins must be >= 1");
  if (len < static_cast<std::size_t>(n_bins))
    throw std::invalid_argument("extract_dft: series length " +
                                std::to_string(len) + " < n_bins " +
                                std::to_string(n_bins));
  std::vector<double> mags(static_cast<std::size_t>(n_bins));
  for (int b = 0; b < n_bins; ++b) {
    const double w = 2.0 * std::numbers::pi * static_cast<double>(b) /
                     static_cast<double>(len);
    const double coeff = 2.0 * std::cos(w);
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (double x : series) {
      s0 = x + coeff * s1 - s2;
      s2 = s1;
      s1 = s0;
    }
    const double re = s1 - s2 * std::cos(w);
    const double im = s2 * std::sin(w);
    mags[static_cast<std::size_t>(b)] = std::hypot(re, im);
  }
  return mags;
}

/// Sliding-window variance gate on an operator-visible deviation signal.
struct ThresholdConfig {
  double sample_rate = 10.0;      ///< f_s, Hz
  double inspection_time = 30.0;  ///< T_s, s
  int window = 20;                ///< l_1, samples
  double threshold = 0.0;         ///< gate on exp(window variance); must be > 1

  int series_length() const {
    return static_cast<int>(std::llround(sample_rate * inspection_time));
  }

  void check() const {
    if (window < 2) throw std::invalid_argument("threshold window must be >= 2");
    if (series_length() < window)
      throw std::invalid_argument("inspection span shorter than the window");
    if (threshold <= 1.0)
      throw std::invalid_argument("threshold must be > 1 (exp of a variance)");
  }
};

struct ThresholdVerdict {
  bool compromised = false;
  int trigger_index = -1;  ///< first window start that fired, or -1
};

/// Slide a width-l_1 window over the series; flag the signal as compromised
/// at the first window whose exp(sample variance) reaches the threshold.
inline ThresholdVerdict threshold_detect(const std::vector<double>& series,
                                         const ThresholdConfig& cfg) {
  cfg.check();
  if (static_cast<int>(series.size()) != cfg.series_length())
    throw std::invalid_argument(
        "threshold_detect: series length " + std::to_string(series.size()) +
        " != f_s * T_s = " + std::to_string(cfg.series_length()));
  const auto w = static_cast<std::size_t>(cfg.window);
  std::vector<double> win(w);
  for (std::size_t i = 0; i + w <= series.size(); ++i) {
    std::copy(series.begin() + static_cast<std::ptrdiff_t>(i),
              series.begin() + static_cast<std::ptrdiff_t>(i + w), win.begin());
    if (std::exp(sample_variance(win)) >= cfg.threshold)
      return {true, static_cast<int>(i)};
  }
  return {false, -1};
}

/// Largest window variance seen anywhere in a series.
inline double max_window_variance(const std::vector<double>& series,
                                  int window) {
  const auto w = static_cast<std::size_t>(window);
  if (series.size() < w)
    throw std::invalid_argument("max_window_variance: series shorter than window");
  double vmax = 0.0;
  std::vector<double> win(w);
  for (std::size_t i = 0; i + w <= series.size(); ++i) {
    std::copy(series.begin() + static_cast<std::ptrdiff_t>(i),
              series.begin() + static_cast<std::ptrdiff_t>(i + w), win.begin());
    vmax = std::max(vmax, sample_variance(win));
  }
  return vmax;
}

/// Gate calibrated from a batch of normal (unattacked) series: exp of three
/// times the largest window variance any of them produced.
inline double calibrate_threshold(
    const std::vector<std::vector<double>>& normal_series,
    const ThresholdConfig& cfg) {
  if (normal_series.empty())
    throw std::invalid_argument("calibrate_threshold: empty calibration batch");
  double vmax = 0.0;
  for (const auto& s : normal_series)
    vmax = std::max(vmax, max_window_variance(s, cfg.window));
  return std::exp(3.0 * vmax);
}

}  // namespace lfc
