#pragma once

#include <cmath>
#include <span>

namespace memdeeg::stats {

inline double mean(std::span<const double> x) noexcept {
  if (x.empty()) return 0.0;
  double s = 0.0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

// Population (biased) variance.
inline double variance(std::span<const double> x) noexcept {
  if (x.empty()) return 0.0;
  const double mu = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - mu) * (v - mu);
  return s / static_cast<double>(x.size());
}

inline double stddev(std::span<const double> x) noexcept { return std::sqrt(variance(x)); }

inline double energy(std::span<const double> x) noexcept {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace memdeeg::stats
