#include "surveymix/survey_adjust.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>

#include "surveymix/counts.hpp"
#include "surveymix/errors.hpp"
#include "surveymix/normal_math.hpp"
#include "surveymix/samplers.hpp"

namespace surveymix {

AdjustmentPrior default_adjustment_prior(std::int64_t population_size, int H, double fraction,
                                         const std::function<void(std::string_view)>& warn) {
  if (population_size <= 0) throw ValidationError("adjustment prior: population size must be positive");
  if (H < 1) throw ValidationError("adjustment prior: H must be positive");
  if (!(fraction > 0.0)) throw ValidationError("adjustment prior: fraction must be positive");
  if (fraction < 0.005 || fraction > 0.05) {
    const std::string msg = "adjustment prior: fraction " + format_double(fraction) +
                            " is outside the usual 1-2% range of the population size";
    if (warn) {
      warn(msg);
    } else {
      std::cerr << "warning: " << msg << '\n';
    }
  }
  const double a = fraction * static_cast<double>(population_size) / static_cast<double>(H);
  return {std::max(a, 1.0), H};
}

std::vector<double> adjustment_parameters(const MixtureState& state, const SurveySample& sample,
                                          const AdjustmentPrior& prior) {
  if (!(prior.a > 0.0)) throw ValidationError("adjustment prior mass must be positive");
  if (static_cast<std::size_t>(prior.H) != state.H()) throw ValidationError("adjustment prior H mismatch");
  if (state.s.size() != sample.size()) throw ValidationError("allocations do not match the sample");
  const double c_tilde = effective_c(sample);
  if (!(c_tilde > 0.0)) throw ValidationError("effective c must be positive");
  std::vector<double> weight_sum(state.H(), 0.0);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    weight_sum[static_cast<std::size_t>(state.s[i])] += sample.weights[i];
  }
  std::vector<double> params(state.H());
  for (std::size_t h = 0; h < params.size(); ++h) params[h] = prior.a + weight_sum[h] / c_tilde;
  return params;
}

AdjustedState adjusted_weights_step(const MixtureState& state, const SurveySample& sample,
                                    const AdjustmentPrior& prior, RngStream& rng) {
  const auto params = adjustment_parameters(state, sample, prior);
  return {sample_dirichlet(rng, params)};
}

std::vector<double> adjusted_density_at(const MixtureState& state, const AdjustedState& adjusted,
                                        std::span<const double> grid) {
  return mixture_density(state, adjusted.lambda_tilde, grid);
}

double kernel_value(Kernel kernel, double u) {
  switch (kernel) {
    case Kernel::Gaussian:
      return std_normal_pdf(u);
    case Kernel::Epanechnikov:
      return std::abs(u) <= 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
  }
  return 0.0;
}

double kernel_cdf(Kernel kernel, double u) {
  switch (kernel) {
    case Kernel::Gaussian:
      return std_normal_cdf(u);
    case Kernel::Epanechnikov:
      if (u <= -1.0) return 0.0;
      if (u >= 1.0) return 1.0;
      return 0.5 + 0.75 * u - 0.25 * u * u * u;
  }
  return 0.0;
}

double silverman_bandwidth(std::span<const double> y, std::span<const double> weights) {
  if (y.size() != weights.size() || y.size() < 2) throw ValidationError("bandwidth: need >= 2 weighted points");
  const auto wn = normalize_weights(weights);
  double mean = 0.0, sum_sq_w = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    mean += wn[i] * y[i];
    sum_sq_w += wn[i] * wn[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) var += wn[i] * (y[i] - mean) * (y[i] - mean);
  const double n_eff = 1.0 / sum_sq_w;
  const double b = 1.06 * std::sqrt(var) * std::pow(n_eff, -0.2);
  if (!(b > 0.0)) throw ValidationError("bandwidth: weighted sample has zero spread");
  return b;
}

std::vector<double> weighted_kde(std::span<const double> y, std::span<const double> weights, double bandwidth,
                                 Kernel kernel, std::span<const double> grid) {
  if (!(bandwidth > 0.0)) throw ValidationError("kde: bandwidth must be positive");
  if (y.size() != weights.size()) throw ValidationError("kde: values and weights differ in length");
  const auto wn = normalize_weights(weights);
  std::vector<double> out(grid.size(), 0.0);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += wn[i] * kernel_value(kernel, (grid[g] - y[i]) / bandwidth);
    out[g] = acc / bandwidth;
  }
  return out;
}

std::vector<double> weighted_kde(const SurveySample& sample, double bandwidth, Kernel kernel,
                                 std::span<const double> grid) {
  const auto y = sample.values();
  return weighted_kde(y, sample.weights, bandwidth, kernel, grid);
}

PmfValues weighted_kde_pmf(std::span<const double> counts, std::span<const double> weights, double bandwidth,
                           Kernel kernel, std::int64_t K) {
  if (!(bandwidth > 0.0)) throw ValidationError("kde: bandwidth must be positive");
  if (K < 0) throw ValidationError("support cap K must be nonnegative");
  const auto ystar = log_transform_competitor(counts);
  const auto wn = normalize_weights(weights);
  PmfValues out;
  out.pmf.assign(static_cast<std::size_t>(K) + 1, 0.0);
  for (std::size_t i = 0; i < ystar.size(); ++i) {
    double prev = 0.0;  // kernel CDF at a_0 = -inf
    for (std::int64_t k = 0; k <= K; ++k) {
      const double next = kernel_cdf(kernel, (cutpoint(k + 1, CutpointScheme::LogShift) - ystar[i]) / bandwidth);
      out.pmf[static_cast<std::size_t>(k)] += wn[i] * (next - prev);
      prev = next;
    }
    out.tail_mass += wn[i] * (1.0 - prev);
  }
  return out;
}

double quantile_type7(std::vector<double> values, double p) {
  if (values.empty()) throw ValidationError("quantile of empty set");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

GridSummary summarize_posterior(std::span<const double> grid, const std::vector<std::vector<double>>& draws,
                                std::size_t min_draws) {
  if (draws.size() < min_draws) {
    throw ValidationError("posterior summary needs at least " + std::to_string(min_draws) + " draws, got " +
                          std::to_string(draws.size()));
  }
  GridSummary out;
  out.grid.assign(grid.begin(), grid.end());
  out.mean.resize(grid.size());
  out.lower.resize(grid.size());
  out.upper.resize(grid.size());
  std::vector<double> column(draws.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t d = 0; d < draws.size(); ++d) {
      if (draws[d].size() != grid.size()) throw ValidationError("posterior draw does not match the grid");
      column[d] = draws[d][g];
    }
    out.mean[g] = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
    std::sort(column.begin(), column.end());
    out.lower[g] = quantile_type7(column, 0.025);
    out.upper[g] = quantile_type7(column, 0.975);
  }
  return out;
}

GridSummary point_summary(std::span<const double> grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw ValidationError("point estimate does not match the grid");
  GridSummary out;
  out.grid.assign(grid.begin(), grid.end());
  out.lower = values;
  out.upper = values;
  out.mean = std::move(values);
  return out;
}

double coverage_metric(const GridSummary& summary, std::span<const double> truth) {
  if (truth.size() != summary.grid.size() || truth.empty()) throw ValidationError("coverage: grid mismatch");
  std::size_t hit = 0;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    if (summary.lower[g] <= truth[g] && truth[g] <= summary.upper[g]) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

void write_grid_summary_csv(const std::filesystem::path& path, const GridSummary& summary, std::string_view key,
                            std::span<const double> truth) {
  if (!truth.empty() && truth.size() != summary.grid.size()) throw ValidationError("truth does not match the grid");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << key << ",mean,lower,upper" << (truth.empty() ? "" : ",truth") << '\n';
  for (std::size_t g = 0; g < summary.grid.size(); ++g) {
    out << format_double(summary.grid[g]) << ',' << format_double(summary.mean[g]) << ','
        << format_double(summary.lower[g]) << ',' << format_double(summary.upper[g]);
    if (!truth.empty()) out << ',' << format_double(truth[g]);
    out << '\n';
  }
}

}  // namespace surveymix
