#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <vector>

namespace surveymix::testing {

inline double mean(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double variance(const std::vector<double>& x) {
  const double m = mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

inline double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x), my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Sample mean within `k` standard errors of `true_mean` (SE from the true variance),
/// and sample variance within `k` standard errors of `true_var` (SE from the sample
/// fourth central moment).
inline bool moments_match(const std::vector<double>& x, double true_mean, double true_var, double k = 6.0) {
  const double n = static_cast<double>(x.size());
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m4 /= n;
  const double se_mean = std::sqrt(true_var / n);
  const double se_var = std::sqrt(std::max(m4 - m2 * m2, 0.0) / n);
  const bool ok_mean = std::abs(m - true_mean) <= k * se_mean;
  const bool ok_var = std::abs(m2 - true_var) <= k * se_var + 1e-300;
  if (!ok_mean || !ok_var) {
    std::cerr << "moments: mean " << m << " vs " << true_mean << " (se " << se_mean << "), var " << m2 << " vs "
              << true_var << " (se " << se_var << ")\n";
  }
  return ok_mean && ok_var;
}

}  // namespace surveymix::testing
