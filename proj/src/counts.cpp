#include "surveymix/counts.hpp"

#include <cmath>
#include <string>

#include "surveymix/errors.hpp"
#include "surveymix/normal_math.hpp"
#include "surveymix/samplers.hpp"

namespace surveymix {

double cutpoint(std::int64_t k, CutpointScheme scheme) {
  if (k < 0) throw ValidationError("cutpoint index must be nonnegative");
  if (k == 0) return -kInf;
  const auto x = static_cast<double>(k);
  return scheme == CutpointScheme::Integer ? x : std::log(x);
}

std::pair<double, double> count_interval(std::int64_t y, CutpointScheme scheme) {
  if (y < 0) throw ValidationError("count must be nonnegative, got " + std::to_string(y));
  return {cutpoint(y, scheme), cutpoint(y + 1, scheme)};
}

std::vector<double> initial_latents(std::span<const double> counts, CutpointScheme scheme) {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    out[i] = scheme == CutpointScheme::Integer ? counts[i] + 0.5 : std::log(counts[i] + 0.5);
  }
  return out;
}

void sample_latents(std::span<const double> counts, const MixtureState& state, CutpointScheme scheme,
                    RngStream& rng, std::vector<double>& latents) {
  latents.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto h = static_cast<std::size_t>(state.s[i]);
    const auto [lo, hi] = count_interval(static_cast<std::int64_t>(counts[i]), scheme);
    latents[i] = sample_truncated_normal(rng, state.mu[h], std::sqrt(state.tau2[h]), lo, hi);
  }
}

PmfValues rounded_normal_pmf(double mean, double sd, CutpointScheme scheme, std::int64_t K) {
  if (K < 0) throw ValidationError("support cap K must be nonnegative");
  PmfValues out;
  out.pmf.resize(static_cast<std::size_t>(K) + 1);
  for (std::int64_t k = 0; k <= K; ++k) {
    const double a = (cutpoint(k, scheme) - mean) / sd;
    const double b = (cutpoint(k + 1, scheme) - mean) / sd;
    out.pmf[static_cast<std::size_t>(k)] = std_normal_interval(a, b);
  }
  out.tail_mass = std_normal_cdf(-(cutpoint(K + 1, scheme) - mean) / sd);
  return out;
}

PmfValues pmf_from_state(const MixtureState& state, std::span<const double> weights, CutpointScheme scheme,
                         std::int64_t K) {
  if (weights.size() != state.H()) throw ValidationError("mixture weights do not match components");
  if (K < 0) throw ValidationError("support cap K must be nonnegative");
  PmfValues out;
  out.pmf.assign(static_cast<std::size_t>(K) + 1, 0.0);
  for (std::size_t h = 0; h < state.H(); ++h) {
    if (weights[h] <= 0.0) continue;
    const auto comp = rounded_normal_pmf(state.mu[h], std::sqrt(state.tau2[h]), scheme, K);
    for (std::size_t k = 0; k < out.pmf.size(); ++k) out.pmf[k] += weights[h] * comp.pmf[k];
    out.tail_mass += weights[h] * comp.tail_mass;
  }
  return out;
}

std::vector<double> log_transform_competitor(std::span<const double> counts) {
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw ValidationError("count must be nonnegative");
    out[i] = std::log(counts[i] + 0.5);
  }
  return out;
}

}  // namespace surveymix
