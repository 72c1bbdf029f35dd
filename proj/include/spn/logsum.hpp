#pragma once

#include <cmath>
#include <limits>
#include <span>

namespace spn {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)), stable, with -inf as the additive identity.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// log Σ exp(v) over a span; returns -inf for empty input or all -inf.
inline double log_sum_exp(std::span<const double> values) {
  double m = kNegInf;
  for (double v : values) m = v > m ? v : m;
  if (m == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - m);
  return m + std::log(acc);
}

}  // namespace spn
