#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "surveymix/counts.hpp"
#include "surveymix/dpmm.hpp"
#include "surveymix/rng.hpp"
#include "surveymix/survey_data.hpp"

namespace surveymix {

/// Symmetric Dirichlet prior Dir(a, ..., a) on the population-level mixture weights.
struct AdjustmentPrior {
  double a = 1.0;
  int H = 20;
};

/// Population-level mixture weights for one sweep.
struct AdjustedState {
  std::vector<double> lambda_tilde;
  bool operator==(const AdjustedState&) const = default;
};

/// a = fraction * N / H, floored at 1. Fractions outside [0.005, 0.05] are reported
/// through `warn` (stderr when empty) and otherwise accepted.
AdjustmentPrior default_adjustment_prior(std::int64_t population_size, int H, double fraction,
                                         const std::function<void(std::string_view)>& warn = {});

/// Dirichlet parameters a_h + (1/c~) sum_{i: s_i = h} w_i with c~ = sum_i w_i / N.
std::vector<double> adjustment_parameters(const MixtureState& state, const SurveySample& sample,
                                          const AdjustmentPrior& prior);

/// Draws the survey-adjusted weights lambda~ for the allocations in `state`.
AdjustedState adjusted_weights_step(const MixtureState& state, const SurveySample& sample,
                                    const AdjustmentPrior& prior, RngStream& rng);

/// sum_h lambda~_h N(y | mu_h, tau2_h).
std::vector<double> adjusted_density_at(const MixtureState& state, const AdjustedState& adjusted,
                                        std::span<const double> grid);

enum class Kernel { Gaussian, Epanechnikov };

double kernel_value(Kernel kernel, double u);
double kernel_cdf(Kernel kernel, double u);

/// Silverman's rule 1.06 * sd_w * n_eff^{-1/5} with weighted sd and
/// n_eff = (sum w)^2 / sum w^2.
double silverman_bandwidth(std::span<const double> y, std::span<const double> weights);

/// f(y) = sum_i (w~_i / b) K((y - y_i) / b).
std::vector<double> weighted_kde(std::span<const double> y, std::span<const double> weights, double bandwidth,
                                 Kernel kernel, std::span<const double> grid);
std::vector<double> weighted_kde(const SurveySample& sample, double bandwidth, Kernel kernel,
                                 std::span<const double> grid);

/// Weighted KDE of log(y + 0.5) mapped to counts: pr(y = k) is the kernel mass in
/// (log k, log(k + 1)], for k = 0..K.
PmfValues weighted_kde_pmf(std::span<const double> counts, std::span<const double> weights, double bandwidth,
                           Kernel kernel, std::int64_t K);

/// Pointwise posterior summary on an evaluation grid (or count support).
struct GridSummary {
  std::vector<double> grid;
  std::vector<double> mean;
  std::vector<double> lower;  // 2.5% quantile
  std::vector<double> upper;  // 97.5% quantile
  std::optional<double> tail_mass;  // mean mass beyond the support, pmf summaries only
};

/// Type-7 (linear interpolation) sample quantile of unsorted values.
double quantile_type7(std::vector<double> values, double p);

/// `draws[d][g]` is draw d at grid point g. Requires at least 100 draws.
GridSummary summarize_posterior(std::span<const double> grid, const std::vector<std::vector<double>>& draws,
                                std::size_t min_draws = 100);

/// Degenerate summary for point estimators (lower = mean = upper).
GridSummary point_summary(std::span<const double> grid, std::vector<double> values);

/// Fraction of points with lower <= truth <= upper.
double coverage_metric(const GridSummary& summary, std::span<const double> truth);

/// CSV with header `<key>,mean,lower,upper[,truth]`; key is "y" or "k".
void write_grid_summary_csv(const std::filesystem::path& path, const GridSummary& summary,
                            std::string_view key = "y", std::span<const double> truth = {});

}  // namespace surveymix
