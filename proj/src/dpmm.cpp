#include "surveymix/dpmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "surveymix/errors.hpp"
#include "surveymix/normal_math.hpp"
#include "surveymix/samplers.hpp"

namespace surveymix {

namespace {

constexpr double kStickClamp = 1e-15;

double clamp_stick(double v) { return std::clamp(v, kStickClamp, 1.0 - kStickClamp); }

}  // namespace

DpmmPriors DpmmPriors::from_data(std::span<const double> y, int H, double tau2_scale_divisor) {
  if (y.size() < 2) throw ValidationError("priors: need at least two observations");
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  const double var = ss / (n - 1.0);
  if (!(var > 0.0)) throw ValidationError("priors: sample variance is zero");
  DpmmPriors p;
  p.H = H;
  p.mu_mean = mean;
  p.mu_var = var;
  p.tau2_shape = 2.0;
  p.tau2_scale = var / tau2_scale_divisor;
  return p;
}

void DpmmPriors::validate() const {
  if (H < 2) throw ValidationError("priors: truncation level H must be at least 2");
  if (!(alpha_shape > 0.0 && alpha_rate > 0.0 && mu_var > 0.0 && tau2_shape > 0.0 && tau2_scale > 0.0)) {
    throw ValidationError("priors: hyperparameters must be positive");
  }
}

std::vector<std::size_t> MixtureState::counts() const {
  std::vector<std::size_t> n(H(), 0);
  for (int h : s) ++n[static_cast<std::size_t>(h)];
  return n;
}

void MixtureState::check_invariants(double tol) const {
  const std::size_t h_count = H();
  if (h_count < 2 || V.size() != h_count || mu.size() != h_count || tau2.size() != h_count) {
    throw ValidationError("state: inconsistent component dimensions");
  }
  const double total = std::accumulate(lambda.begin(), lambda.end(), 0.0);
  if (std::abs(total - 1.0) > tol) throw ValidationError("state: lambda does not sum to 1");
  double remaining = 1.0;
  for (std::size_t h = 0; h < h_count; ++h) {
    if (!(V[h] > 0.0 && V[h] <= 1.0)) throw ValidationError("state: V out of (0, 1]");
    if (!(tau2[h] > 0.0)) throw ValidationError("state: tau2 must be positive");
    if (std::abs(lambda[h] - V[h] * remaining) > tol) throw ValidationError("state: stick-breaking identity fails");
    remaining *= 1.0 - V[h];
  }
  if (V.back() != 1.0) throw ValidationError("state: V_H must equal 1");
  if (!(alpha > 0.0)) throw ValidationError("state: alpha must be positive");
  for (int a : s) {
    if (a < 0 || static_cast<std::size_t>(a) >= h_count) throw ValidationError("state: allocation out of range");
  }
}

std::vector<double> stick_breaking_weights(std::span<const double> V) {
  std::vector<double> lambda(V.size());
  double remaining = 1.0;
  for (std::size_t h = 0; h < V.size(); ++h) {
    lambda[h] = V[h] * remaining;
    remaining *= 1.0 - V[h];
  }
  return lambda;
}

MixtureState init_state(const SurveySample& sample, const DpmmPriors& priors, RngStream& rng) {
  if (sample.space == ObservationSpace::Count) {
    throw ValidationError("count-valued sample: use the rounded-kernel fit in the counts module");
  }
  const auto y = sample.values();
  return init_state(y, priors, rng);
}

MixtureState init_state(std::span<const double> y, const DpmmPriors& priors, RngStream& rng) {
  priors.validate();
  if (y.empty()) throw ValidationError("init_state: empty sample");
  const auto H = static_cast<std::size_t>(priors.H);
  MixtureState st;
  st.alpha = sample_gamma(rng, priors.alpha_shape, priors.alpha_rate);
  st.V.resize(H);
  for (std::size_t h = 0; h + 1 < H; ++h) st.V[h] = clamp_stick(sample_beta(rng, 1.0, st.alpha));
  st.V[H - 1] = 1.0;
  st.lambda = stick_breaking_weights(st.V);
  st.mu.resize(H);
  st.tau2.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    st.mu[h] = sample_normal(rng, priors.mu_mean, std::sqrt(priors.mu_var));
    st.tau2[h] = sample_inverse_gamma(rng, priors.tau2_shape, priors.tau2_scale);
  }
  st.s.resize(y.size());
  std::uniform_int_distribution<int> pick(0, priors.H - 1);
  for (int& a : st.s) a = pick(rng.engine());
  return st;
}

void update_allocations(MixtureState& state, std::span<const double> y, RngStream& rng) {
  const std::size_t H = state.H();
  std::vector<double> log_lambda(H), log_norm(H), inv_var(H), logp(H);
  for (std::size_t h = 0; h < H; ++h) {
    log_lambda[h] = state.lambda[h] > 0.0 ? std::log(state.lambda[h]) : -kInf;
    log_norm[h] = -0.5 * std::log(2.0 * std::numbers::pi * state.tau2[h]);
    inv_var[h] = 1.0 / state.tau2[h];
  }
  state.s.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    for (std::size_t h = 0; h < H; ++h) {
      const double d = y[i] - state.mu[h];
      logp[h] = log_lambda[h] + log_norm[h] - 0.5 * d * d * inv_var[h];
    }
    state.s[i] = static_cast<int>(sample_categorical_log(rng, logp));
  }
}

void update_sticks(MixtureState& state, RngStream& rng) {
  const std::size_t H = state.H();
  const auto n = state.counts();
  std::size_t tail = std::accumulate(n.begin(), n.end(), std::size_t{0});
  for (std::size_t h = 0; h + 1 < H; ++h) {
    tail -= n[h];
    const double a = 1.0 + static_cast<double>(n[h]);
    const double b = state.alpha + static_cast<double>(tail);
    state.V[h] = clamp_stick(sample_beta(rng, a, b));
  }
  state.V[H - 1] = 1.0;
  state.lambda = stick_breaking_weights(state.V);
}

void update_components(MixtureState& state, std::span<const double> y, const DpmmPriors& priors,
                       RngStream& rng) {
  const std::size_t H = state.H();
  std::vector<double> sum(H, 0.0);
  std::vector<std::size_t> n(H, 0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto h = static_cast<std::size_t>(state.s[i]);
    sum[h] += y[i];
    ++n[h];
  }
  for (std::size_t h = 0; h < H; ++h) {
    if (n[h] == 0) {
      state.mu[h] = sample_normal(rng, priors.mu_mean, std::sqrt(priors.mu_var));
      state.tau2[h] = sample_inverse_gamma(rng, priors.tau2_shape, priors.tau2_scale);
      continue;
    }
    const double nh = static_cast<double>(n[h]);
    const double post_var = 1.0 / (1.0 / priors.mu_var + nh / state.tau2[h]);
    const double post_mean = post_var * (priors.mu_mean / priors.mu_var + sum[h] / state.tau2[h]);
    state.mu[h] = sample_normal(rng, post_mean, std::sqrt(post_var));
  }
  std::vector<double> ss(H, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto h = static_cast<std::size_t>(state.s[i]);
    const double d = y[i] - state.mu[h];
    ss[h] += d * d;
  }
  for (std::size_t h = 0; h < H; ++h) {
    if (n[h] == 0) continue;
    state.tau2[h] = sample_inverse_gamma(rng, priors.tau2_shape + 0.5 * static_cast<double>(n[h]),
                                         priors.tau2_scale + 0.5 * ss[h]);
  }
}

void update_concentration(MixtureState& state, const DpmmPriors& priors, RngStream& rng) {
  const std::size_t H = state.H();
  double log_sum = 0.0;
  for (std::size_t h = 0; h + 1 < H; ++h) log_sum += std::log1p(-clamp_stick(state.V[h]));
  state.alpha = sample_gamma(rng, priors.alpha_shape + static_cast<double>(H - 1), priors.alpha_rate - log_sum);
}

void gibbs_sweep(MixtureState& state, std::span<const double> y, const DpmmPriors& priors, RngStream& rng) {
  update_allocations(state, y, rng);
  update_sticks(state, rng);
  update_components(state, y, priors, rng);
  update_concentration(state, priors, rng);
}

std::vector<double> mixture_density(const MixtureState& state, std::span<const double> weights,
                                    std::span<const double> grid) {
  if (weights.size() != state.H()) throw ValidationError("mixture weights do not match components");
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t h = 0; h < state.H(); ++h) {
    if (weights[h] <= 0.0) continue;
    const double sd = std::sqrt(state.tau2[h]);
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] += weights[h] * normal_pdf(grid[g], state.mu[h], sd);
  }
  return out;
}

std::vector<double> density_at(const MixtureState& state, std::span<const double> grid) {
  return mixture_density(state, state.lambda, grid);
}

}  // namespace surveymix
