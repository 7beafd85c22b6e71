#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "surveymix/rng.hpp"

namespace surveymix {

double sample_normal(RngStream& rng, double mean, double sd);

/// Gamma with shape/rate parameterization (mean shape/rate).
double sample_gamma(RngStream& rng, double shape, double rate);

/// Inverse-gamma IG(shape, scale): density proportional to x^{-shape-1} exp(-scale/x).
double sample_inverse_gamma(RngStream& rng, double shape, double scale);

double sample_beta(RngStream& rng, double a, double b);

std::vector<double> sample_dirichlet(RngStream& rng, std::span<const double> params);

/// Index drawn proportionally to nonnegative, not necessarily normalized weights.
std::size_t sample_categorical(RngStream& rng, std::span<const double> weights);

/// Index drawn proportionally to exp(log_weights). Entries more than 700 below the
/// maximum get probability zero.
std::size_t sample_categorical_log(RngStream& rng, std::span<const double> log_weights);

std::int64_t sample_poisson(RngStream& rng, double rate);

/// N(mean, sd^2) restricted to [lower, upper). Infinite bounds are allowed.
/// Stays efficient for intervals far in the tails and for very narrow intervals.
double sample_truncated_normal(RngStream& rng, double mean, double sd, double lower, double upper);

/// Lower Cholesky factor of `cov`. Adds jitter 1e-10 * trace / dim to the diagonal
/// when the plain factorization fails, doubling it up to 8 times.
Eigen::MatrixXd cholesky_with_jitter(const Eigen::MatrixXd& cov);

Eigen::VectorXd sample_mvn_chol(RngStream& rng, const Eigen::VectorXd& mean,
                                const Eigen::MatrixXd& covariance);

}  // namespace surveymix
