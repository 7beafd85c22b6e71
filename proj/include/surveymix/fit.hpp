#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "surveymix/counts.hpp"
#include "surveymix/dpmm.hpp"
#include "surveymix/survey_adjust.hpp"
#include "surveymix/survey_data.hpp"

namespace surveymix {

/// Burn-in sweeps, then `iterations` further sweeps keeping every `thin`-th.
struct McmcSchedule {
  int burn_in = 5000;
  int iterations = 10000;
  int thin = 10;

  int kept() const { return thin > 0 ? iterations / thin : 0; }
  void validate() const;
};

struct FitConfig {
  int H = 20;
  double alpha_shape = 0.25;
  double alpha_rate = 0.25;
  /// tau2_h ~ IG(2, s_y^2 / tau2_scale_divisor).
  double tau2_scale_divisor = 2.0;
  /// Explicit Dirichlet mass a_h; when unset, fraction * N / H.
  std::optional<double> adjustment_a;
  double adjustment_fraction = 0.02;
  McmcSchedule schedule;
  std::uint64_t seed = 1;
  CutpointScheme cutpoints = CutpointScheme::Integer;
  std::optional<double> kde_bandwidth;
  Kernel kde_kernel = Kernel::Gaussian;
  /// Random-walk sd of the log-kappa Metropolis step in the GP competitor.
  double gp_log_kappa_step = 0.3;
};

/// RNG stream ids; the adjustment draws never touch the chain's stream.
inline constexpr std::uint64_t kChainStream = 100;
inline constexpr std::uint64_t kAdjustStream = 101;

struct KeptDraw {
  MixtureState state;  // allocations dropped
  AdjustedState adjusted;  // empty when the adjustment is disabled
};

struct DpmmFit {
  DpmmPriors priors;
  AdjustmentPrior adjustment;
  ObservationSpace space = ObservationSpace::Continuous;
  CutpointScheme cutpoints = CutpointScheme::Integer;
  std::vector<KeptDraw> draws;
};

struct ChainOptions {
  bool adjust = true;
  /// JSON-lines trace, one object per kept draw.
  std::ostream* trace = nullptr;
  /// Called with (sweeps done, total sweeps).
  std::function<void(int, int)> progress;
  /// Called with the full state (allocations included) after every sweep.
  std::function<void(const MixtureState&)> on_sweep;
};

AdjustmentPrior resolve_adjustment_prior(const SurveySample& sample, const FitConfig& config);

/// Blocked Gibbs on the sample (rounded-kernel latents first for counts), plus the
/// survey-weight adjustment step after every sweep.
DpmmFit fit_dpmm(const SurveySample& sample, const FitConfig& config, const ChainOptions& options = {});

/// Posterior summary of the density on `grid` using lambda~ (adjusted) or lambda.
GridSummary summarize_density(const DpmmFit& fit, std::span<const double> grid, bool adjusted);

/// Posterior summary of the pmf on 0..K using lambda~ (adjusted) or lambda.
GridSummary summarize_pmf(const DpmmFit& fit, std::int64_t K, bool adjusted);

std::vector<double> linspace(double lo, double hi, std::size_t n);
std::vector<double> support_grid(std::int64_t K);

}  // namespace surveymix
