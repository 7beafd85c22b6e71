#include "surveymix/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "surveymix/errors.hpp"
#include "surveymix/normal_math.hpp"

namespace surveymix {

double sample_normal(RngStream& rng, double mean, double sd) { return mean + sd * rng.normal(); }

double sample_gamma(RngStream& rng, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw ValidationError("gamma: shape and rate must be positive");
  }
  std::gamma_distribution<double> dist(shape, 1.0 / rate);
  return dist(rng.engine());
}

double sample_inverse_gamma(RngStream& rng, double shape, double scale) {
  if (!(scale > 0.0)) throw ValidationError("inverse-gamma: scale must be positive");
  for (;;) {
    const double g = sample_gamma(rng, shape, scale);
    if (g > 0.0) return 1.0 / g;
  }
}

double sample_beta(RngStream& rng, double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ValidationError("beta: parameters must be positive");
  for (;;) {
    const double x = sample_gamma(rng, a, 1.0);
    const double y = sample_gamma(rng, b, 1.0);
    if (x + y > 0.0) return x / (x + y);
  }
}

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> params) {
  if (params.empty()) throw ValidationError("dirichlet: empty parameter vector");
  for (std::size_t h = 0; h < params.size(); ++h) {
    if (!(params[h] > 0.0)) {
      throw ValidationError("dirichlet: parameter " + std::to_string(h) + " is not positive");
    }
  }
  std::vector<double> out(params.size());
  for (;;) {
    double total = 0.0;
    for (std::size_t h = 0; h < params.size(); ++h) {
      out[h] = sample_gamma(rng, params[h], 1.0);
      total += out[h];
    }
    // All-zero draws happen only when every parameter is tiny.
    if (total > 0.0) {
      for (double& x : out) x /= total;
      return out;
    }
  }
}

std::size_t sample_categorical(RngStream& rng, std::span<const double> weights) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (weights.empty() || !(total > 0.0)) {
    throw ValidationError("categorical: weights must have positive total");
  }
  const double u = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) {
      acc += weights[k];
      last_positive = k;
      if (u < acc) return k;
    }
  }
  return last_positive;
}

std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights) {
  const double mx = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(mx)) throw ValidationError("categorical: no finite log weight");
  std::vector<double> w(log_weights.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double d = log_weights[k] - mx;
    w[k] = d < -700.0 ? 0.0 : std::exp(d);
  }
  return sample_categorical(rng, w);
}

std::int64_t sample_poisson(RngStream& rng, double rate) {
  if (!(rate > 0.0)) throw ValidationError("poisson: rate must be positive");
  std::poisson_distribution<std::int64_t> dist(rate);
  return dist(rng.engine());
}

namespace {

// Standard normal restricted to [a, b) with 0 <= a < b.
double right_tail_std(RngStream& rng, double a, double b) {
  const double width = b - a;
  if (width <= 1.0 / std::max(a, 1.0)) {
    // Uniform proposal: acceptance exp((a^2 - x^2)/2) >= e^{-1.5} on this width.
    for (;;) {
      const double x = a + width * rng.uniform();
      if (std::log(rng.uniform()) <= 0.5 * (a * a - x * x)) return x;
    }
  }
  // Shifted exponential proposal with the optimal rate.
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double x = a - std::log(rng.uniform()) / rate;
    if (x >= b) continue;
    const double d = x - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return x;
  }
}

// Standard normal restricted to [a, b) with a < 0 < b.
double straddling_std(RngStream& rng, double a, double b) {
  if (b - a >= 2.5) {
    for (;;) {
      const double x = rng.normal();
      if (x >= a && x < b) return x;
    }
  }
  for (;;) {
    const double x = a + (b - a) * rng.uniform();
    if (std::log(rng.uniform()) <= -0.5 * x * x) return x;
  }
}

}  // namespace

double sample_truncated_normal(RngStream& rng, double mean, double sd, double lower,
                               double upper) {
  if (!(sd > 0.0)) throw ValidationError("truncated normal: sd must be positive");
  if (!(lower < upper)) throw ValidationError("truncated normal: lower must be below upper");
  const double a = (lower - mean) / sd;
  const double b = (upper - mean) / sd;
  double z;
  if (a >= 0.0) {
    z = right_tail_std(rng, a, b);
  } else if (b <= 0.0) {
    z = -right_tail_std(rng, -b, -a);
    // Mirrored interval is (a, b]; keep the half-open contract.
    if (z >= b) z = std::nextafter(b, -kInf);
  } else {
    z = straddling_std(rng, a, b);
  }
  const double x = mean + sd * z;
  return std::clamp(x, lower, std::nextafter(upper, -kInf));
}

Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov) {
  const Eigen::Index dim = cov.rows();
  if (dim == 0 || cov.cols() != dim) throw ValidationError("cholesky: matrix must be square");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  double jitter = 1e-10 * std::abs(cov.trace()) / static_cast<double>(dim);
  if (!(jitter > 0.0)) jitter = 1e-10;
  for (int attempt = 0; attempt <= 8; ++attempt, jitter *= 2.0) {
    Eigen::MatrixXd j = cov;
    j.diagonal().array() += jitter;
    llt.compute(j);
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  throw ValidationError("cholesky: covariance is not positive definite after jitter");
}

Eigen::VectorXd sample_mvn_chol(RngStream& rng, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& covariance) {
  if (covariance.rows() != mean.size()) throw ValidationError("mvn: dimension mismatch");
  const Eigen::MatrixXd chol = cholesky_with_jitter(covariance);
  Eigen::VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return mean + chol * z;
}

}  // namespace surveymix
