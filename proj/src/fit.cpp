#include "surveymix/fit.hpp"

#include <ostream>

#include <json.hpp>

#include "surveymix/errors.hpp"

namespace surveymix {

void McmcSchedule::validate() const {
  if (burn_in < 0 || iterations <= 0 || thin <= 0 || kept() == 0) {
    throw ValidationError("schedule: need burn_in >= 0 and iterations >= thin > 0");
  }
}

AdjustmentPrior resolve_adjustment_prior(const SurveySample& sample, const FitConfig& config) {
  if (config.adjustment_a) {
    if (!(*config.adjustment_a > 0.0)) throw ValidationError("adjustment prior mass must be positive");
    return {*config.adjustment_a, config.H};
  }
  return default_adjustment_prior(sample.population_size, config.H, config.adjustment_fraction);
}

namespace {

void write_trace(std::ostream& out, int sweep, const KeptDraw& draw) {
  nlohmann::json j;
  j["sweep"] = sweep;
  j["lambda"] = draw.state.lambda;
  j["mu"] = draw.state.mu;
  j["tau2"] = draw.state.tau2;
  j["alpha"] = draw.state.alpha;
  if (!draw.adjusted.lambda_tilde.empty()) j["lambda_tilde"] = draw.adjusted.lambda_tilde;
  out << j.dump() << '\n';
}

}  // namespace

DpmmFit fit_dpmm(const SurveySample& sample, const FitConfig& config, const ChainOptions& options) {
  sample.validate();
  config.schedule.validate();
  const bool count = sample.space == ObservationSpace::Count;
  const auto observed = sample.values();
  std::vector<double> y = count ? initial_latents(observed, config.cutpoints) : observed;

  DpmmFit fit;
  fit.space = sample.space;
  fit.cutpoints = config.cutpoints;
  fit.priors = DpmmPriors::from_data(y, config.H, config.tau2_scale_divisor);
  fit.priors.alpha_shape = config.alpha_shape;
  fit.priors.alpha_rate = config.alpha_rate;
  fit.adjustment = resolve_adjustment_prior(sample, config);

  RngStream chain_rng(config.seed, kChainStream);
  RngStream adjust_rng(config.seed, kAdjustStream);
  MixtureState state = init_state(y, fit.priors, chain_rng);

  const auto& sched = config.schedule;
  const int total = sched.burn_in + sched.iterations;
  fit.draws.reserve(static_cast<std::size_t>(sched.kept()));
  for (int sweep = 1; sweep <= total; ++sweep) {
    if (count) sample_latents(observed, state, config.cutpoints, chain_rng, y);
    gibbs_sweep(state, y, fit.priors, chain_rng);
    AdjustedState adjusted;
    if (options.adjust) adjusted = adjusted_weights_step(state, sample, fit.adjustment, adjust_rng);
    if (options.on_sweep) options.on_sweep(state);
    const int post = sweep - sched.burn_in;
    if (post > 0 && post % sched.thin == 0) {
      KeptDraw draw{state, std::move(adjusted)};
      draw.state.s.clear();
      if (options.trace) write_trace(*options.trace, sweep, draw);
      fit.draws.push_back(std::move(draw));
    }
    if (options.progress) options.progress(sweep, total);
  }
  return fit;
}

namespace {

std::span<const double> draw_weights(const KeptDraw& d, bool adjusted) {
  if (adjusted) {
    if (d.adjusted.lambda_tilde.empty()) throw ValidationError("fit was run without the adjustment step");
    return d.adjusted.lambda_tilde;
  }
  return d.state.lambda;
}

}  // namespace

GridSummary summarize_density(const DpmmFit& fit, std::span<const double> grid, bool adjusted) {
  if (fit.space == ObservationSpace::Count) throw ValidationError("count fit: summarize the pmf instead");
  std::vector<std::vector<double>> values;
  values.reserve(fit.draws.size());
  for (const auto& d : fit.draws) values.push_back(mixture_density(d.state, draw_weights(d, adjusted), grid));
  return summarize_posterior(grid, values);
}

GridSummary summarize_pmf(const DpmmFit& fit, std::int64_t K, bool adjusted) {
  if (fit.space != ObservationSpace::Count) throw ValidationError("continuous fit: summarize the density instead");
  const auto grid = support_grid(K);
  std::vector<std::vector<double>> values;
  values.reserve(fit.draws.size());
  double tail = 0.0;
  for (const auto& d : fit.draws) {
    auto p = pmf_from_state(d.state, draw_weights(d, adjusted), fit.cutpoints, K);
    tail += p.tail_mass;
    values.push_back(std::move(p.pmf));
  }
  auto summary = summarize_posterior(grid, values);
  summary.tail_mass = tail / static_cast<double>(fit.draws.size());
  return summary;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) throw ValidationError("linspace needs at least two points");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return out;
}

std::vector<double> support_grid(std::int64_t K) {
  if (K < 0) throw ValidationError("support cap K must be nonnegative");
  std::vector<double> out(static_cast<std::size_t>(K) + 1);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<double>(k);
  return out;
}

}  // namespace surveymix
