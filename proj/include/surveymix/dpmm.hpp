#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "surveymix/rng.hpp"
#include "surveymix/survey_data.hpp"

namespace surveymix {

/// Priors for the truncated stick-breaking mixture of normals.
///   alpha ~ Ga(alpha_shape, alpha_rate)      (shape/rate)
///   mu_h  ~ N(mu_mean, mu_var)
///   tau2_h ~ IG(tau2_shape, tau2_scale)
struct DpmmPriors {
  int H = 20;
  double alpha_shape = 0.25;
  double alpha_rate = 0.25;
  double mu_mean = 0.0;
  double mu_var = 1.0;
  double tau2_shape = 2.0;
  double tau2_scale = 0.5;

  /// Data-centred defaults: mu ~ N(ybar, s_y^2), tau2 ~ IG(2, s_y^2 / tau2_scale_divisor).
  static DpmmPriors from_data(std::span<const double> y, int H = 20, double tau2_scale_divisor = 2.0);

  void validate() const;
};

/// One state of the blocked Gibbs chain. Allocations are 0-based component indices.
struct MixtureState {
  std::vector<double> V;
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<double> tau2;
  std::vector<int> s;
  double alpha = 1.0;

  std::size_t H() const { return lambda.size(); }
  /// Component occupancy counts n_h.
  std::vector<std::size_t> counts() const;
  /// Throws ValidationError when an invariant fails.
  void check_invariants(double tol = 1e-12) const;
  bool operator==(const MixtureState&) const = default;
};

/// lambda_h = V_h prod_{l<h} (1 - V_l).
std::vector<double> stick_breaking_weights(std::span<const double> V);

MixtureState init_state(const SurveySample& sample, const DpmmPriors& priors, RngStream& rng);
MixtureState init_state(std::span<const double> y, const DpmmPriors& priors, RngStream& rng);

void update_allocations(MixtureState& state, std::span<const double> y, RngStream& rng);
void update_sticks(MixtureState& state, RngStream& rng);
void update_components(MixtureState& state, std::span<const double> y, const DpmmPriors& priors,
                       RngStream& rng);
void update_concentration(MixtureState& state, const DpmmPriors& priors, RngStream& rng);

/// Allocations, sticks, components, concentration, in that order.
void gibbs_sweep(MixtureState& state, std::span<const double> y, const DpmmPriors& priors, RngStream& rng);

/// sum_h weights_h N(y | mu_h, tau2_h) on each grid point.
std::vector<double> mixture_density(const MixtureState& state, std::span<const double> weights,
                                    std::span<const double> grid);
std::vector<double> density_at(const MixtureState& state, std::span<const double> grid);

}  // namespace surveymix
