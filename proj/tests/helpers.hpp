#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "lfc/classify.hpp"

namespace testutil {

/// Direct O(L^2) evaluation of the DFT definition, independent of the
/// production transform.
inline std::vector<double> naive_dft_magnitudes(const std::vector<double>& x,
                                                int n_bins) {
  std::vector<double> out(static_cast<std::size_t>(n_bins));
  const auto len = static_cast<double>(x.size());
  for (int b = 0; b < n_bins; ++b) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t n = 0; n < x.size(); ++n) {
      const double ang = -2.0 * std::numbers::pi * static_cast<double>(b) *
                         static_cast<double>(n) / len;
      acc += x[n] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[static_cast<std::size_t>(b)] = std::abs(acc);
  }
  return out;
}

/// Worst relative error between the analytic gradient and central finite
/// differences of the per-sample loss, over all parameters of one net.
inline double mlp_gradient_check(lfc::MLPModel& m, const std::vector<double>& x,
                                 const std::vector<double>& target,
                                 double h = 1e-6) {
  const auto analytic = lfc::mlp_gradient(m, x, target);
  auto params = lfc::flatten_params(m);
  double g_norm = 0.0, d_norm = 0.0;
  std::vector<double> numeric(params.size());
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = params[p];
    params[p] = saved + h;
    lfc::unflatten_params(m, params);
    const double lp = lfc::mlp_backprop(m, x, target, nullptr, nullptr);
    params[p] = saved - h;
    lfc::unflatten_params(m, params);
    const double lm = lfc::mlp_backprop(m, x, target, nullptr, nullptr);
    params[p] = saved;
    numeric[p] = (lp - lm) / (2.0 * h);
  }
  lfc::unflatten_params(m, params);
  for (std::size_t p = 0; p < params.size(); ++p) {
    g_norm += (analytic[p] - numeric[p]) * (analytic[p] - numeric[p]);
    d_norm += numeric[p] * numeric[p] + analytic[p] * analytic[p];
  }
  return std::sqrt(g_norm) / std::max(std::sqrt(d_norm), 1e-12);
}

}  // namespace testutil
