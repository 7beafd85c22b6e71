#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "surveymix/dpmm.hpp"
#include "surveymix/rng.hpp"

namespace surveymix {

/// Cut-points a_0 < a_1 < ... of the rounded kernel; a_0 = -inf throughout.
///   Integer:  a_k = k      (k >= 1)
///   LogShift: a_k = log k  (k >= 1)
enum class CutpointScheme { Integer, LogShift };

double cutpoint(std::int64_t k, CutpointScheme scheme);

/// Latent interval [a_y, a_{y+1}) that rounds to count y.
std::pair<double, double> count_interval(std::int64_t y, CutpointScheme scheme);

/// A point strictly inside each count's latent interval, used to start the chain.
std::vector<double> initial_latents(std::span<const double> counts, CutpointScheme scheme);

/// y*_i ~ N(mu_{s_i}, tau2_{s_i}) truncated to count_interval(y_i).
void sample_latents(std::span<const double> counts, const MixtureState& state, CutpointScheme scheme,
                    RngStream& rng, std::vector<double>& latents);

struct PmfValues {
  std::vector<double> pmf;  // k = 0..K
  double tail_mass = 0.0;   // P(y > K)
};

/// pr(y = k) = sum_h weights_h [Phi((a_{k+1} - mu_h)/tau_h) - Phi((a_k - mu_h)/tau_h)].
PmfValues pmf_from_state(const MixtureState& state, std::span<const double> weights, CutpointScheme scheme,
                         std::int64_t K);

/// pmf on 0..K of a single normal latent N(mean, sd^2) rounded by `scheme`.
PmfValues rounded_normal_pmf(double mean, double sd, CutpointScheme scheme, std::int64_t K);

/// y* = log(y + 0.5).
std::vector<double> log_transform_competitor(std::span<const double> counts);

}  // namespace surveymix
