#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "surveymix/fit.hpp"
#include "surveymix/rng.hpp"
#include "surveymix/survey_adjust.hpp"
#include "surveymix/survey_data.hpp"

namespace surveymix {

/// Strata as seen from the sample: N_m estimated as the summed weight in stratum m.
struct StratumLayout {
  std::vector<int> ids;
  std::vector<double> weight;      // w*_m (mean weight in the stratum)
  std::vector<double> inclusion;   // pi_m = 1 / w*_m
  std::vector<std::size_t> count;  // n_m
  std::vector<double> share;       // N_m / N
  std::vector<std::size_t> record_stratum;  // stratum index per record

  std::size_t size() const { return ids.size(); }
};

StratumLayout stratum_layout(const SurveySample& sample);

/// Response the competitors model: y itself, or log(y + 0.5) for counts.
std::vector<double> baseline_response(const SurveySample& sample);

/// beta ~ N(0, beta_var); sigma2, tau2 ~ IG(shape, scale); kappa ~ Ga(kappa_shape, kappa_rate).
struct BaselinePriors {
  double beta_var = 1.0;
  double sigma2_shape = 2.0;
  double sigma2_scale = 0.5;
  double tau2_shape = 2.0;
  double tau2_scale = 0.5;
  double kappa_shape = 1.0;
  double kappa_rate = 2.0;
  double log_kappa_step = 0.3;

  /// beta_var = s_y^2 and variance scales s_y^2 / 2.
  static BaselinePriors from_response(std::span<const double> y);
};

/// Normal predictive of each stratum for one posterior draw.
struct StratumPredictive {
  std::vector<double> mean;
  std::vector<double> sd;
};

/// y_i = beta pi_i + e_i, e_i ~ N(0, pi_i^2 sigma2).
struct HtState {
  double beta = 0.0;
  double sigma2 = 1.0;
};

/// y_i = b0 + b1 pi_i + b2 pi_i^2 + gamma_[i] + e_i, e_i ~ N(0, pi_i^2 sigma2), gamma_m ~ N(0, tau2).
struct ReState {
  double beta0 = 0.0;
  double beta1 = 0.0;
  double beta2 = 0.0;
  std::vector<double> gamma;
  double sigma2 = 1.0;
  double tau2 = 1.0;
};

/// y_i = mu(x_[i]) + e_i, e_i ~ N(0, sigma2), mu ~ GP(beta x, tau2 exp(-kappa |x - x'|)),
/// x = log weight. Strata sharing a weight share one GP input.
struct GpState {
  std::vector<double> mu;  // one value per distinct input
  double beta = 0.0;
  double sigma2 = 1.0;
  double tau2 = 1.0;
  double kappa = 0.5;
};

/// Distinct log-weight inputs and the input index of each stratum.
struct GpInputs {
  std::vector<double> x;
  std::vector<std::size_t> stratum_input;
};

GpInputs gp_inputs(const StratumLayout& layout);

/// C(x, x') = tau2 exp(-kappa |x - x'|).
Eigen::MatrixXd gp_covariance(std::span<const double> x, double tau2, double kappa);

std::vector<HtState> fit_ht(const SurveySample& sample, const BaselinePriors& priors, const McmcSchedule& schedule,
                            RngStream& rng);
std::vector<ReState> fit_re(const SurveySample& sample, const BaselinePriors& priors, const McmcSchedule& schedule,
                            RngStream& rng);
std::vector<GpState> fit_gp(const SurveySample& sample, const BaselinePriors& priors, const McmcSchedule& schedule,
                            RngStream& rng);

StratumPredictive predictive(const HtState& s, const StratumLayout& layout);
StratumPredictive predictive(const ReState& s, const StratumLayout& layout);
StratumPredictive predictive(const GpState& s, const StratumLayout& layout, const GpInputs& inputs);

/// Per draw: sum_m share_m N(y | mean_m, sd_m^2) on the grid.
GridSummary competitor_population_density(const std::vector<StratumPredictive>& draws,
                                          std::span<const double> shares, std::span<const double> grid);

/// Per draw: sum_m share_m pr{log(k) < y* <= log(k + 1)} for k = 0..K with y* ~ N(mean_m, sd_m^2).
GridSummary competitor_population_pmf(const std::vector<StratumPredictive>& draws, std::span<const double> shares,
                                      std::int64_t K);

}  // namespace surveymix
