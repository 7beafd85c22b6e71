#include "surveymix/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <numeric>
#include <sstream>

#include "surveymix/baselines.hpp"
#include "surveymix/config.hpp"
#include "surveymix/errors.hpp"
#include "surveymix/serialization.hpp"

namespace surveymix {

std::string method_name(Method m) {
  switch (m) {
    case Method::Proposed: return "proposed";
    case Method::Unadjusted: return "unadjusted";
    case Method::WeightedKde: return "weighted_kde";
    case Method::Ht: return "ht";
    case Method::Re: return "re";
    case Method::Gp: return "gp";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  for (Method m : {Method::Proposed, Method::Unadjusted, Method::WeightedKde, Method::Ht, Method::Re, Method::Gp}) {
    if (method_name(m) == name) return m;
  }
  throw ValidationError("unknown method '" + name + "'");
}

std::vector<Method> parse_methods(const std::string& list) {
  std::vector<Method> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  return out;
}

const std::vector<Method>& comparison_methods() {
  static const std::vector<Method> methods{Method::Proposed, Method::Unadjusted, Method::Ht, Method::Re, Method::Gp};
  return methods;
}

std::vector<double> Scenario::truth() const {
  std::vector<double> out(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) out[g] = population.population_density(grid[g]);
  return out;
}

void Scenario::validate() const {
  population.validate();
  if (grid.size() < 2) throw ValidationError("scenario " + name + ": grid needs at least two points");
  if (is_count()) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] != static_cast<double>(k)) throw ValidationError("scenario " + name + ": count support must be 0..K");
    }
  }
}

namespace {

DensitySpec normal_mix(std::vector<NormalComponent> c) { return {NormalMixture{std::move(c)}}; }
DensitySpec poisson_mix(std::vector<PoissonComponent> c) { return {PoissonMixture{std::move(c)}}; }

}  // namespace

const std::vector<std::string>& builtin_scenario_names() {
  static const std::vector<std::string> names{"case1", "case2", "case3", "case4"};
  return names;
}

Scenario builtin_scenario(const std::string& name) {
  Scenario sc;
  sc.name = name;
  sc.config.adjustment_a = 1000.0;
  sc.grid = linspace(-6.0, 6.0, 100);
  const std::int64_t sizes[3] = {650000, 300000, 50000};
  if (name == "case1") {
    const DensitySpec f[3] = {normal_mix({{1.0, 2.0, 0.6}}), normal_mix({{1.0, 0.0, 0.4}}),
                              normal_mix({{1.0, -2.0, 0.3}})};
    std::vector<StratumSpec> strata;
    for (int m = 0; m < 3; ++m) strata.push_back({m + 1, sizes[m], 500, f[m]});
    sc.population = PopulationSpec::from_strata(std::move(strata));
  } else if (name == "case2") {
    const double w[3] = {0.2, 0.4, 0.85};
    std::vector<StratumSpec> strata;
    for (int m = 0; m < 3; ++m) {
      strata.push_back({m + 1, sizes[m], 500, normal_mix({{w[m], -2.0, 1.0}, {1.0 - w[m], 2.0, 0.8}})});
    }
    sc.population = PopulationSpec::from_strata(std::move(strata));
  } else if (name == "case3") {
    const double w[3] = {0.2, 0.4, 0.85};
    std::vector<StratumSpec> strata;
    for (int m = 0; m < 3; ++m) {
      strata.push_back({m + 1, sizes[m], 500, poisson_mix({{w[m], 15.0}, {1.0 - w[m], 4.0}})});
    }
    sc.population = PopulationSpec::from_strata(std::move(strata));
    sc.grid = support_grid(100);
    sc.config.cutpoints = CutpointScheme::Integer;
  } else if (name == "case4") {
    std::vector<StratumSpec> strata;
    for (int m = 1; m <= 100; ++m) {
      const DensitySpec f = m <= 30 ? normal_mix({{1.0, -2.0, 0.3}})
                            : m <= 70 ? normal_mix({{1.0, 0.0, 0.4}})
                                      : normal_mix({{1.0, 2.0, 0.6}});
      strata.push_back({m, 1000 * static_cast<std::int64_t>(m), 20, f});
    }
    sc.population = PopulationSpec::from_strata(std::move(strata));
    // No explicit Dirichlet mass for this case: a = 2% of N spread over H components.
    sc.config.adjustment_a.reset();
  } else {
    throw ValidationError("unknown scenario '" + name + "' (expected case1, case2, case3 or case4)");
  }
  sc.validate();
  return sc;
}

double trapezoid(std::span<const double> values, std::span<const double> grid) {
  if (values.size() != grid.size() || grid.size() < 2) throw ValidationError("trapezoid: grid mismatch");
  double acc = 0.0;
  for (std::size_t g = 1; g < grid.size(); ++g) acc += 0.5 * (values[g] + values[g - 1]) * (grid[g] - grid[g - 1]);
  return acc;
}

double ise_metric(std::span<const double> estimate, std::span<const double> truth, std::span<const double> grid,
                  bool pmf) {
  if (estimate.size() != truth.size() || estimate.size() != grid.size()) throw ValidationError("ise: grid mismatch");
  std::vector<double> sq(estimate.size());
  for (std::size_t g = 0; g < sq.size(); ++g) sq[g] = (estimate[g] - truth[g]) * (estimate[g] - truth[g]);
  if (pmf) return std::accumulate(sq.begin(), sq.end(), 0.0);
  return trapezoid(sq, grid);
}

std::optional<double> autocorrelation_diagnostic(std::span<const double> chain, std::size_t lag) {
  if (chain.size() <= lag) throw ValidationError("autocorrelation: chain must be longer than the lag");
  const double n = static_cast<double>(chain.size());
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / n;
  double denom = 0.0, num = 0.0;
  for (std::size_t t = 0; t < chain.size(); ++t) denom += (chain[t] - mean) * (chain[t] - mean);
  if (!(denom > 0.0)) return std::nullopt;
  for (std::size_t t = 0; t + lag < chain.size(); ++t) num += (chain[t] - mean) * (chain[t + lag] - mean);
  return num / denom;
}

std::vector<std::size_t> local_maxima(std::span<const double> v) {
  std::vector<std::size_t> out;
  std::size_t i = 1;
  while (i + 1 < v.size()) {
    std::size_t j = i;
    while (j + 1 < v.size() && v[j + 1] == v[i]) ++j;
    if (j + 1 < v.size() && v[i] > v[i - 1] && v[j] > v[j + 1]) out.push_back(i);
    i = j + 1;
  }
  return out;
}

namespace {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  // splitmix64 finalizer
  std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class State, class Pred>
GridSummary summarize_competitor(const std::vector<State>& draws, Pred&& pred, const StratumLayout& layout,
                                 std::span<const double> grid, bool count) {
  std::vector<StratumPredictive> p;
  p.reserve(draws.size());
  for (const auto& d : draws) p.push_back(pred(d));
  if (count) return competitor_population_pmf(p, layout.share, static_cast<std::int64_t>(grid.size()) - 1);
  return competitor_population_density(p, layout.share, grid);
}

}  // namespace

std::map<std::string, MethodResult> fit_methods(const SurveySample& sample, const std::vector<Method>& methods,
                                                const FitConfig& config, std::span<const double> grid,
                                                std::span<const double> truth, const RunOptions& options) {
  if (methods.empty()) throw ValidationError("no methods requested");
  sample.validate();
  const bool count = sample.space == ObservationSpace::Count;
  if (count) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      if (grid[k] != static_cast<double>(k)) throw ValidationError("count samples need the support grid 0..K");
    }
  }
  const auto K = static_cast<std::int64_t>(grid.size()) - 1;
  const auto has = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };

  using Results = std::vector<std::pair<std::string, MethodResult>>;
  std::vector<std::function<Results()>> jobs;

  if (has(Method::Proposed) || has(Method::Unadjusted)) {
    jobs.emplace_back([&, count, K]() {
      const auto t0 = Clock::now();
      FitConfig cfg = config;
      cfg.seed = derive_seed(config.seed, 1);
      ChainOptions opts;
      opts.adjust = has(Method::Proposed);
      std::ofstream trace;
      if (!options.trace_dir.empty()) {
        trace.open(options.trace_dir / (method_name(opts.adjust ? Method::Proposed : Method::Unadjusted) + ".trace.jsonl"));
        opts.trace = &trace;
      }
      const DpmmFit fit = fit_dpmm(sample, cfg, opts);
      const double secs = seconds_since(t0);
      Results r;
      for (Method m : {Method::Proposed, Method::Unadjusted}) {
        if (!has(m)) continue;
        const bool adjusted = m == Method::Proposed;
        MethodResult res;
        res.summary = count ? summarize_pmf(fit, K, adjusted) : summarize_density(fit, grid, adjusted);
        res.seconds = secs;
        res.seed = cfg.seed;
        r.emplace_back(method_name(m), std::move(res));
      }
      return r;
    });
  }
  if (has(Method::WeightedKde)) {
    jobs.emplace_back([&, count, K]() {
      const auto t0 = Clock::now();
      const auto y = count ? log_transform_competitor(sample.values()) : sample.values();
      const double b = config.kde_bandwidth.value_or(silverman_bandwidth(y, sample.weights));
      MethodResult res;
      if (count) {
        auto pmf = weighted_kde_pmf(sample.values(), sample.weights, b, config.kde_kernel, K);
        res.summary = point_summary(grid, std::move(pmf.pmf));
        res.summary.tail_mass = pmf.tail_mass;
      } else {
        res.summary = point_summary(grid, weighted_kde(y, sample.weights, b, config.kde_kernel, grid));
      }
      res.seconds = seconds_since(t0);
      return Results{{method_name(Method::WeightedKde), std::move(res)}};
    });
  }
  const auto layout = stratum_layout(sample);
  auto priors = BaselinePriors::from_response(baseline_response(sample));
  priors.log_kappa_step = config.gp_log_kappa_step;
  if (has(Method::Ht)) {
    jobs.emplace_back([&, count]() {
      const auto t0 = Clock::now();
      MethodResult res;
      res.seed = derive_seed(config.seed, 2);
      RngStream rng(res.seed, 0);
      const auto draws = fit_ht(sample, priors, config.schedule, rng);
      res.summary = summarize_competitor(draws, [&](const HtState& s) { return predictive(s, layout); }, layout, grid,
                                         count);
      res.seconds = seconds_since(t0);
      return Results{{method_name(Method::Ht), std::move(res)}};
    });
  }
  if (has(Method::Re)) {
    jobs.emplace_back([&, count]() {
      const auto t0 = Clock::now();
      MethodResult res;
      res.seed = derive_seed(config.seed, 3);
      RngStream rng(res.seed, 0);
      const auto draws = fit_re(sample, priors, config.schedule, rng);
      res.summary = summarize_competitor(draws, [&](const ReState& s) { return predictive(s, layout); }, layout, grid,
                                         count);
      res.seconds = seconds_since(t0);
      return Results{{method_name(Method::Re), std::move(res)}};
    });
  }
  if (has(Method::Gp)) {
    jobs.emplace_back([&, count]() {
      const auto t0 = Clock::now();
      MethodResult res;
      res.seed = derive_seed(config.seed, 4);
      RngStream rng(res.seed, 0);
      const auto inputs = gp_inputs(layout);
      const auto draws = fit_gp(sample, priors, config.schedule, rng);
      res.summary = summarize_competitor(
          draws, [&](const GpState& s) { return predictive(s, layout, inputs); }, layout, grid, count);
      res.seconds = seconds_since(t0);
      return Results{{method_name(Method::Gp), std::move(res)}};
    });
  }

  std::vector<Results> results;
  if (options.parallel) {
    std::vector<std::future<Results>> futures;
    for (auto& job : jobs) futures.push_back(std::async(std::launch::async, job));
    // Collect every future before rethrowing so no job outlives the references it holds.
    std::exception_ptr error;
    for (auto& f : futures) {
      try {
        results.push_back(f.get());
      } catch (...) {
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
  } else {
    for (auto& job : jobs) results.push_back(job());
  }

  std::map<std::string, MethodResult> out;
  for (auto& r : results) {
    for (auto& [name, res] : r) {
      if (!truth.empty()) {
        res.coverage = coverage_metric(res.summary, truth);
        res.ise = ise_metric(res.summary.mean, truth, grid, count);
      }
      out.emplace(name, std::move(res));
    }
  }
  return out;
}

RunReport run_scenario(const Scenario& scenario, const std::vector<Method>& methods, std::uint64_t seed,
                       const RunOptions& options) {
  if (methods.empty()) throw ValidationError("no methods requested");
  scenario.validate();
  RunReport report;
  report.scenario = scenario.name;
  report.seed = seed;
  report.config = scenario.config;
  report.config.seed = seed;
  report.count = scenario.is_count();
  report.truth = scenario.truth();
  const SurveySample sample = simulate_survey(scenario.population, seed);
  report.methods = fit_methods(sample, methods, report.config, scenario.grid, report.truth, options);
  return report;
}

nlohmann::json RunReport::metrics_json() const {
  nlohmann::json j;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["observation_space"] = count ? "count" : "continuous";
  j["config"] = surveymix::to_json(config);
  j["methods"] = nlohmann::json::object();
  for (const auto& [name, res] : methods) {
    nlohmann::json m;
    m["coverage"] = res.coverage;
    m["ise"] = res.ise;
    m["seed"] = res.seed;
    m["csv"] = name + ".csv";
    if (res.summary.tail_mass) m["tail_mass"] = *res.summary.tail_mass;
    j["methods"][name] = m;
  }
  return j;
}

nlohmann::json RunReport::to_json() const {
  auto j = metrics_json();
  for (const auto& [name, res] : methods) j["methods"][name]["seconds"] = res.seconds;
  return j;
}

void write_report(const std::filesystem::path& dir, const RunReport& report) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "report.json");
    if (!out) throw std::runtime_error("cannot write " + (dir / "report.json").string());
    out << report.metrics_json().dump(2) << '\n';
  }
  {
    nlohmann::json t;
    for (const auto& [name, res] : report.methods) t[name] = res.seconds;
    std::ofstream out(dir / "timing.json");
    out << t.dump(2) << '\n';
  }
  const std::string key = report.count ? "k" : "y";
  for (const auto& [name, res] : report.methods) {
    write_grid_summary_csv(dir / (name + ".csv"), res.summary, key, report.truth);
  }
}

}  // namespace surveymix
