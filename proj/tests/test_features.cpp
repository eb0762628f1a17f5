#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "lfc/dataset.hpp"
#include "lfc/features.hpp"
#include "lfc/util.hpp"

using namespace lfc;

TEST_CASE("DFT of a constant concentrates in bin zero") {
  const std::vector<double> series(128, 0.7);
  const auto mags = extract_dft(series, 8);
  CHECK(mags[0] == doctest::Approx(128.0 * 0.7).epsilon(1e-12));
  for (std::size_t b = 1; b < mags.size(); ++b)
    CHECK(mags[b] <= 1e-9);
}

TEST_CASE("DFT of a bin-aligned sinusoid concentrates in its bin") {
  const std::size_t len = 256;
  std::vector<double> series(len);
  for (std::size_t n = 0; n < len; ++n)
    series[n] = std::sin(2.0 * std::numbers::pi * 3.0 * static_cast<double>(n) /
                         static_cast<double>(len));
  const auto mags = extract_dft(series, 8);
  CHECK(mags[3] == doctest::Approx(static_cast<double>(len) / 2.0).epsilon(1e-9));
  for (std::size_t b = 0; b < mags.size(); ++b)
    if (b != 3) CHECK(mags[b] <= 1e-8);
}

TEST_CASE("DFT matches the direct definition on random series") {
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = 50 + static_cast<std::size_t>(
                                     uniform01(77, static_cast<std::uint64_t>(trial)) * 250.0);
    std::vector<double> series(len);
    for (std::size_t n = 0; n < len; ++n)
      series[n] = uniform_pm1(1000 + static_cast<std::uint64_t>(trial), n);
    const auto fast = extract_dft(series, 16);
    const auto naive = testutil::naive_dft_magnitudes(series, 16);
    for (std::size_t b = 0; b < fast.size(); ++b)
      CHECK(std::abs(fast[b] - naive[b]) <= 1e-9);
  }
}

TEST_CASE("DFT validates its inputs") {
  CHECK_THROWS_AS(extract_dft({1.0, 2.0}, 3), std::invalid_argument);
  CHECK_THROWS_AS(extract_dft({1.0, 2.0, 3.0}, 0), std::invalid_argument);
}

TEST_CASE("threshold configuration invariants") {
  ThresholdConfig cfg;
  cfg.threshold = 1.5;
  CHECK(cfg.series_length() == 300);
  CHECK_NOTHROW(cfg.check());
  cfg.threshold = 1.0;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg.threshold = 1.5;
  cfg.window = 1;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
  cfg.window = 400;
  CHECK_THROWS_AS(cfg.check(), std::invalid_argument);
}

TEST_CASE("an all-zero signal never trips the gate") {
  ThresholdConfig cfg;
  cfg.threshold = 1.0 + 1e-12;
  const std::vector<double> series(static_cast<std::size_t>(cfg.series_length()), 0.0);
  const auto v = threshold_detect(series, cfg);
  CHECK_FALSE(v.compromised);
  CHECK(v.trigger_index == -1);
}

TEST_CASE("the gate fires at the first window reaching the threshold") {
  ThresholdConfig cfg;
  std::vector<double> series(static_cast<std::size_t>(cfg.series_length()), 0.0);
  // one alternating burst well inside the span
  for (std::size_t i = 100; i < 140; ++i) series[i] = (i % 2 == 0) ? 0.5 : -0.5;
  std::vector<double> burst(series.begin() + 100, series.begin() + 100 + 20);
  const double v_burst = sample_variance(burst);

  cfg.threshold = std::exp(v_burst / 2.0);
  const auto hit = threshold_detect(series, cfg);
  CHECK(hit.compromised);
  CHECK(hit.trigger_index > 0);
  CHECK(hit.trigger_index <= 100);  // fires as soon as the window overlaps

  SUBCASE("trigger exactly at the variance-matching threshold") {
    cfg.threshold = std::exp(v_burst);
    CHECK(threshold_detect(series, cfg).compromised);
  }
  SUBCASE("raising the threshold never creates a detection") {
    ThresholdConfig mild = cfg;
    mild.threshold = std::exp(v_burst / 2.0);
    ThresholdConfig strict = cfg;
    strict.threshold = std::exp(2.0 * v_burst);
    const bool mild_hit = threshold_detect(series, mild).compromised;
    const bool strict_hit = threshold_detect(series, strict).compromised;
    if (!mild_hit) CHECK_FALSE(strict_hit);
  }
}

TEST_CASE("the gate requires the configured series length") {
  ThresholdConfig cfg;
  cfg.threshold = 2.0;
  CHECK_THROWS_AS(threshold_detect(std::vector<double>(10, 0.0), cfg),
                  std::invalid_argument);
}

TEST_CASE("calibration takes the worst normal window") {
  ThresholdConfig cfg;
  std::vector<std::vector<double>> batch;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> s(static_cast<std::size_t>(cfg.series_length()));
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = 1e-3 * uniform_pm1(static_cast<std::uint64_t>(k), i);
    batch.push_back(std::move(s));
  }
  double vmax = 0.0;
  for (const auto& s : batch)
    vmax = std::max(vmax, max_window_variance(s, cfg.window));
  CHECK(calibrate_threshold(batch, cfg) ==
        doctest::Approx(std::exp(3.0 * vmax)).epsilon(1e-12));
  CHECK_THROWS_AS(calibrate_threshold({}, cfg), std::invalid_argument);
}

TEST_CASE("a simulated oscillating attack trips a calibrated gate") {
  const SystemConfig cfg = default_config();
  DatasetOptions opt;
  std::vector<std::vector<double>> normals;
  for (int i = 0; i < 5; ++i)
    normals.push_back(
        make_instance(cfg, opt, InstanceClass::Normal, 100 + static_cast<std::uint64_t>(i))
            .gate_series);
  ThresholdConfig gate = opt.gate;
  gate.threshold = calibrate_threshold(normals, gate);

  const Instance attacked = make_instance(cfg, opt, InstanceClass::Oscillating, 7);
  const auto v = threshold_detect(attacked.gate_series, gate);
  CHECK(v.compromised);
  CHECK(v.trigger_index >= 0);
  for (const auto& n : normals)
    CHECK_FALSE(threshold_detect(n, gate).compromised);
}
