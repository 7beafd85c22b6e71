#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>
#include <string>

#include "moment_check.hpp"
#include "surveymix/errors.hpp"
#include "surveymix/fit.hpp"
#include "surveymix/harness.hpp"
#include "surveymix/survey_adjust.hpp"

namespace surveymix {
namespace {

// Case 1 layout with stratum m allocated to component m - 1.
struct Allocated {
  SurveySample sample;
  MixtureState state;
};

Allocated case1_allocated(std::size_t H) {
  Allocated out;
  out.sample.population_size = 1000000;
  const double w[3] = {1300.0, 600.0, 100.0};
  for (int m = 0; m < 3; ++m) {
    for (int i = 0; i < 500; ++i) {
      out.sample.records.push_back({0.01 * i, m + 1});
      out.sample.weights.push_back(w[m]);
      out.state.s.push_back(m);
    }
  }
  out.state.V.assign(H, 0.5);
  out.state.V.back() = 1.0;
  out.state.lambda = stick_breaking_weights(out.state.V);
  out.state.mu.assign(H, 0.0);
  out.state.tau2.assign(H, 1.0);
  return out;
}

double trapezoid_abs_diff(const std::vector<double>& grid, const std::vector<double>& f,
                          const std::vector<double>& g) {
  double s = 0.0;
  for (std::size_t i = 1; i < grid.size(); ++i)
    s += 0.5 * (std::abs(f[i] - g[i]) + std::abs(f[i - 1] - g[i - 1])) * (grid[i] - grid[i - 1]);
  return s;
}

TEST(AdjustmentPrior, DefaultFromFraction) {
  EXPECT_DOUBLE_EQ(default_adjustment_prior(1000000, 20, 0.02).a, 1000.0);
  EXPECT_NEAR(default_adjustment_prior(14677500, 20, 0.0136).a, 10000.0, 100.0);
  EXPECT_DOUBLE_EQ(default_adjustment_prior(400, 20, 0.05).a, 1.0);
  EXPECT_DOUBLE_EQ(default_adjustment_prior(100, 20, 0.02).a, 1.0);
  std::string warned;
  default_adjustment_prior(1000000, 20, 0.1, [&](std::string_view w) { warned = w; });
  EXPECT_FALSE(warned.empty());
  warned.clear();
  default_adjustment_prior(1000000, 20, 0.02, [&](std::string_view w) { warned = w; });
  EXPECT_TRUE(warned.empty());
  EXPECT_THROW(default_adjustment_prior(1000000, 20, 0.0), ValidationError);
}

TEST(AdjustmentStep, Case1ParametersAndMean) {
  auto [sample, state] = case1_allocated(3);
  const AdjustmentPrior prior{1000.0, 3};
  const auto params = adjustment_parameters(state, sample, prior);
  EXPECT_DOUBLE_EQ(effective_c(sample), 1.0);
  EXPECT_DOUBLE_EQ(params[0], 651000.0);
  EXPECT_DOUBLE_EQ(params[1], 301000.0);
  EXPECT_DOUBLE_EQ(params[2], 51000.0);
  RngStream rng(1, kAdjustStream);
  std::vector<double> mean(3, 0.0);
  const int reps = 20000;
  for (int r = 0; r < reps; ++r) {
    const auto adj = adjusted_weights_step(state, sample, prior, rng);
    for (std::size_t h = 0; h < 3; ++h) mean[h] += adj.lambda_tilde[h] / reps;
  }
  EXPECT_NEAR(mean[0], 0.6490, 1e-3);
  EXPECT_NEAR(mean[1], 0.3001, 1e-3);
  EXPECT_NEAR(mean[2], 0.0509, 1e-3);
}

TEST(AdjustmentStep, EmptyComponentsAndEqualWeights) {
  auto [sample, state] = case1_allocated(20);
  const auto params = adjustment_parameters(state, sample, {1000.0, 20});
  for (std::size_t h = 3; h < 20; ++h) EXPECT_DOUBLE_EQ(params[h], 1000.0);

  for (double& w : sample.weights) w = 1000000.0 / 1500.0;
  const auto eq = adjustment_parameters(state, sample, {2.0, 20});
  for (std::size_t h = 0; h < 3; ++h) EXPECT_NEAR(eq[h], 2.0 + 1000000.0 / 1500.0 * 500.0, 1e-6);
  EXPECT_THROW(adjustment_parameters(state, sample, {0.0, 20}), ValidationError);
}

TEST(AdjustmentStep, SimplexAndMonotoneInWeight) {
  auto [sample, state] = case1_allocated(20);
  RngStream rng(2, kAdjustStream);
  for (int r = 0; r < 1000; ++r) {
    const auto adj = adjusted_weights_step(state, sample, {1000.0, 20}, rng);
    ASSERT_EQ(adj.lambda_tilde.size(), 20u);
    double total = 0.0;
    for (double l : adj.lambda_tilde) {
      ASSERT_GE(l, 0.0);
      total += l;
    }
    ASSERT_NEAR(total, 1.0, 1e-12);
  }
  // Raising the weight of a unit in component 2 raises the posterior mean of lambda~_2.
  double previous = 0.0;
  for (double extra : {0.0, 100.0, 1000.0, 10000.0}) {
    auto s = sample;
    s.weights[1200] += extra;
    const auto p = adjustment_parameters(state, s, {1000.0, 20});
    const double m = p[2] / std::accumulate(p.begin(), p.end(), 0.0);
    EXPECT_GT(m, previous);
    previous = m;
  }
}

TEST(AdjustmentStep, SelfWeightingLimit) {
  auto [sample, state] = case1_allocated(20);
  for (std::size_t i = 0; i < sample.size(); ++i) sample.weights[i] = 1000000.0 / 1500.0;
  state.s.assign(sample.size(), 0);
  for (std::size_t i = 0; i < sample.size(); ++i) state.s[i] = static_cast<int>(i % 7 == 0 ? 4 : i % 3);
  const auto n = state.counts();
  RngStream rng(3, kAdjustStream);
  std::vector<double> mean(20, 0.0);
  const int reps = 100000;
  for (int r = 0; r < reps; ++r) {
    const auto adj = adjusted_weights_step(state, sample, {1e-8, 20}, rng);
    for (std::size_t h = 0; h < 20; ++h) mean[h] += adj.lambda_tilde[h] / reps;
  }
  for (std::size_t h = 0; h < 20; ++h)
    EXPECT_LT(std::abs(mean[h] - static_cast<double>(n[h]) / sample.size()), 1e-3);
}

TEST(AdjustedDensity, ReducesToChainDensity) {
  MixtureState st;
  st.V = {0.3, 0.5, 1.0};
  st.lambda = stick_breaking_weights(st.V);
  st.mu = {-1.0, 0.0, 2.0};
  st.tau2 = {0.5, 1.0, 2.0};
  const auto grid = linspace(-5.0, 5.0, 41);
  EXPECT_EQ(adjusted_density_at(st, {st.lambda}, grid), density_at(st, grid));
  const auto first = adjusted_density_at(st, {{1.0, 0.0, 0.0}}, grid);
  for (std::size_t g = 0; g < grid.size(); ++g)
    EXPECT_NEAR(first[g], std::exp(-std::pow(grid[g] + 1.0, 2)) / std::sqrt(std::numbers::pi), 1e-14);
}

TEST(AdjustedDensity, Case1ConvergesToPopulationDensityAtTwo) {
  const auto scenario = builtin_scenario("case1");
  const auto sample = simulate_survey(scenario.population, 7);
  auto config = scenario.config;
  config.schedule = {1000, 2000, 10};
  config.seed = 7;
  const auto fit = fit_dpmm(sample, config);
  const std::vector<double> at{2.0};
  const auto s = summarize_density(fit, at, true);
  const double truth = scenario.population.population_density(2.0);
  EXPECT_NEAR(truth, 0.4322, 1e-4);
  EXPECT_NEAR(s.mean[0], truth, 0.05);
}

TEST(AdjustedDensity, NonInterferenceWithChain) {
  const auto scenario = builtin_scenario("case2");
  const auto sample = simulate_survey(scenario.population, 3);
  auto config = scenario.config;
  config.schedule = {50, 100, 5};
  std::vector<MixtureState> with, without;
  ChainOptions a, b;
  a.adjust = true;
  a.on_sweep = [&](const MixtureState& s) { with.push_back(s); };
  b.adjust = false;
  b.on_sweep = [&](const MixtureState& s) { without.push_back(s); };
  const auto fa = fit_dpmm(sample, config, a);
  const auto fb = fit_dpmm(sample, config, b);
  ASSERT_EQ(with.size(), 150u);
  EXPECT_EQ(with, without);
  ASSERT_EQ(fa.draws.size(), fb.draws.size());
  for (std::size_t d = 0; d < fa.draws.size(); ++d) {
    EXPECT_EQ(fa.draws[d].state, fb.draws[d].state);
    EXPECT_EQ(fa.draws[d].adjusted.lambda_tilde.size(), 20u);
    EXPECT_TRUE(fb.draws[d].adjusted.lambda_tilde.empty());
  }
}

TEST(AdjustedDensity, L1ErrorShrinksWithSampleSize) {
  auto spec = builtin_scenario("case1").population;
  const auto grid = linspace(-6.0, 6.0, 200);
  std::vector<double> truth;
  for (double y : grid) truth.push_back(spec.population_density(y));
  std::vector<double> l1;
  for (std::int64_t n : {500, 5000}) {
    for (auto& s : spec.strata) s.sample_size = n;
    const auto sample = simulate_survey(spec, 5);
    FitConfig config;
    config.adjustment_a = 1000.0;
    config.schedule = {500, 1000, 5};
    config.seed = 5;
    const auto s = summarize_density(fit_dpmm(sample, config), grid, true);
    l1.push_back(trapezoid_abs_diff(grid, s.mean, truth));
  }
  EXPECT_LT(l1[1], l1[0]);
}

TEST(Kde, WeightedExamples) {
  const std::vector<double> y{0.0, 10.0};
  const std::vector<double> w{9.0, 1.0};
  const std::vector<double> at{0.0};
  EXPECT_NEAR(weighted_kde(y, w, 1.0, Kernel::Gaussian, at)[0], 0.35905, 1e-5);
  EXPECT_THROW(weighted_kde(y, w, 0.0, Kernel::Gaussian, at), ValidationError);
}

TEST(Kde, EqualWeightsIsOrdinaryKde) {
  RngStream rng(9, 0);
  std::vector<double> y(300);
  for (double& v : y) v = rng.normal();
  const std::vector<double> w(y.size(), 3.0);
  const auto grid = linspace(-4.0, 4.0, 33);
  const double b = 0.4;
  for (auto kernel : {Kernel::Gaussian, Kernel::Epanechnikov}) {
    const auto f = weighted_kde(y, w, b, kernel, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      double plain = 0.0;
      for (double v : y) plain += kernel_value(kernel, (grid[g] - v) / b) / (b * y.size());
      EXPECT_NEAR(f[g], plain, 1e-12);
    }
  }
}

TEST(Kde, IntegratesToOneAndPmfSums) {
  const auto sample = simulate_survey(builtin_scenario("case1").population, 2);
  const double b = silverman_bandwidth(sample.values(), sample.weights);
  EXPECT_GT(b, 0.0);
  const auto grid = linspace(-10.0, 10.0, 4001);
  for (auto kernel : {Kernel::Gaussian, Kernel::Epanechnikov}) {
    const auto f = weighted_kde(sample, b, kernel, grid);
    double integral = 0.0;
    for (std::size_t g = 1; g < grid.size(); ++g) integral += 0.5 * (f[g] + f[g - 1]) * (grid[g] - grid[g - 1]);
    EXPECT_NEAR(integral, 1.0, 1e-4);
  }
  const auto counts = simulate_survey(builtin_scenario("case3").population, 2);
  for (auto kernel : {Kernel::Gaussian, Kernel::Epanechnikov}) {
    const auto pmf = weighted_kde_pmf(counts.values(), counts.weights, 0.2, kernel, 40);
    EXPECT_NEAR(std::accumulate(pmf.pmf.begin(), pmf.pmf.end(), pmf.tail_mass), 1.0, 1e-10);
  }
}

TEST(Summaries, QuantilesAndMean) {
  std::vector<std::vector<double>> draws;
  for (int d = 1; d <= 100; ++d) draws.push_back({static_cast<double>(d), 7.0});
  const std::vector<double> grid{0.0, 1.0};
  const auto s = summarize_posterior(grid, draws);
  EXPECT_NEAR(s.lower[0], 3.475, 1e-12);
  EXPECT_NEAR(s.upper[0], 97.525, 1e-12);
  EXPECT_DOUBLE_EQ(s.mean[0], 50.5);
  EXPECT_DOUBLE_EQ(s.lower[1], 7.0);
  EXPECT_DOUBLE_EQ(s.upper[1], 7.0);
  EXPECT_DOUBLE_EQ(s.mean[1], 7.0);
  draws.pop_back();
  EXPECT_THROW(summarize_posterior(grid, draws), ValidationError);
}

TEST(Summaries, QuantileType7) {
  EXPECT_DOUBLE_EQ(quantile_type7({1.0, 2.0, 3.0, 4.0}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_type7({4.0, 1.0, 3.0, 2.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile_type7({4.0, 1.0, 3.0, 2.0}, 1.0), 4.0);
}

TEST(Summaries, CoverageCountsInclusiveBands) {
  GridSummary s;
  std::vector<double> truth;
  for (int g = 0; g < 100; ++g) {
    s.grid.push_back(g);
    s.mean.push_back(0.0);
    s.lower.push_back(g < 49 ? 0.0 : 1.0);
    s.upper.push_back(g < 49 ? 0.0 : 2.0);
    truth.push_back(0.0);
  }
  EXPECT_DOUBLE_EQ(coverage_metric(s, truth), 0.49);
  for (auto& v : truth) v = 1.0;
  EXPECT_DOUBLE_EQ(coverage_metric(s, truth), 0.51);
  EXPECT_THROW(coverage_metric(s, std::vector<double>(3, 0.0)), ValidationError);
}

TEST(Summaries, CsvLayout) {
  const auto dir = std::filesystem::temp_directory_path() / "surveymix_test_csv";
  std::filesystem::create_directories(dir);
  const auto s = point_summary(std::vector<double>{0.0, 0.5}, {0.25, 0.125});
  write_grid_summary_csv(dir / "a.csv", s, "y", std::vector<double>{0.2, 0.1});
  std::ifstream in(dir / "a.csv");
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(header, "y,mean,lower,upper,truth");
  EXPECT_EQ(row, "0,0.25,0.25,0.25,0.2");
}

}  // namespace
}  // namespace surveymix
