#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace surveymix {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline double std_normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

inline double normal_pdf(double y, double mean, double sd) { return std_normal_pdf((y - mean) / sd) / sd; }

inline double normal_logpdf(double y, double mean, double var) {
  const double d = y - mean;
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + d * d / var);
}

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Phi(b) - Phi(a) for a <= b, evaluated on the side of zero that avoids cancellation.
inline double std_normal_interval(double a, double b) {
  if (a > 0.0) return std_normal_cdf(-a) - std_normal_cdf(-b);
  return std_normal_cdf(b) - std_normal_cdf(a);
}

}  // namespace surveymix
