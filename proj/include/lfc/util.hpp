#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lfc {

/// Stateless counter-based generator: same (seed, index) always yields the
/// same value, independent of call order.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) from a seed/counter pair.
inline double uniform01(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(splitmix64(seed ^ splitmix64(index)) >> 11) *
         0x1.0p-53;
}

/// Uniform double in [-1, 1).
inline double uniform_pm1(std::uint64_t seed, std::uint64_t index) {
  return 2.0 * uniform01(seed, index) - 1.0;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Unbiased sample variance; zero for fewer than two samples.
inline double sample_variance(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace lfc
