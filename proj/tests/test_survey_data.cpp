#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "moment_check.hpp"
#include "surveymix/errors.hpp"
#include "surveymix/harness.hpp"
#include "surveymix/serialization.hpp"
#include "surveymix/survey_data.hpp"

namespace surveymix {
namespace {

namespace fs = std::filesystem;

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("surveymix_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

StratumSpec normal_stratum(int id, std::int64_t N, std::int64_t n, double mean, double sd) {
  return {id, N, n, DensitySpec{NormalMixture{{{1.0, mean, sd}}}}};
}

double poisson_pmf(int k, double rate) {
  double p = std::exp(-rate);
  for (int j = 1; j <= k; ++j) p *= rate / j;
  return p;
}

TEST(Population, Case1SizesAndStratumMeans) {
  const auto spec = builtin_scenario("case1").population;
  const auto pop = generate_population(spec, 1);
  ASSERT_EQ(pop.values.size(), 3u);
  std::size_t total = 0;
  for (std::size_t m = 0; m < 3; ++m) {
    EXPECT_EQ(static_cast<std::int64_t>(pop.values[m].size()), spec.strata[m].population_size);
    total += pop.values[m].size();
  }
  EXPECT_EQ(total, 1000000u);
  // Stratum-level means within 5 sd of the population mean.
  for (std::size_t m = 0; m < 3; ++m) {
    const auto& v = pop.values[m];
    const double mu = spec.strata[m].density.mean();
    double second = 0.0;
    for (const auto& c : std::get<NormalMixture>(spec.strata[m].density.variant).components)
      second += c.weight * (c.sd * c.sd + c.mean * c.mean);
    const double sd = std::sqrt(second - mu * mu);
    EXPECT_LE(std::abs(testing::mean(v) - mu), 5.0 * sd / std::sqrt(static_cast<double>(v.size())));
  }
}

TEST(Population, SingleStandardNormalStratum) {
  const auto spec = PopulationSpec::from_strata({normal_stratum(1, 1000, 10, 0.0, 1.0)});
  const auto pop = generate_population(spec, 3);
  ASSERT_EQ(pop.values[0].size(), 1000u);
  EXPECT_LE(std::abs(testing::mean(pop.values[0])), 4.0 / std::sqrt(1000.0));
}

TEST(Population, PoissonMixtureFrequency) {
  const StratumSpec s{1, 1000000, 10, DensitySpec{PoissonMixture{{{0.2, 15.0}, {0.8, 4.0}}}}};
  const auto pop = generate_population(PopulationSpec::from_strata({s}), 5);
  const auto& v = pop.values[0];
  const double freq = static_cast<double>(std::count(v.begin(), v.end(), 4.0)) / static_cast<double>(v.size());
  EXPECT_NEAR(freq, 0.2 * poisson_pmf(4, 15.0) + 0.8 * poisson_pmf(4, 4.0), 0.003);
  for (double y : v) ASSERT_EQ(y, std::floor(y));
}

TEST(Population, SeedDeterminism) {
  const auto spec = builtin_scenario("case2").population;
  const auto a = generate_population(spec, 9);
  const auto b = generate_population(spec, 9);
  const auto c = generate_population(spec, 10);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
}

TEST(StratifiedSample, Case1WeightsAndSize) {
  const auto spec = builtin_scenario("case1").population;
  const auto sample = draw_stratified_sample(generate_population(spec, 1), spec, 2);
  ASSERT_EQ(sample.size(), 1500u);
  std::map<int, std::set<double>> weights;
  for (std::size_t i = 0; i < sample.size(); ++i) weights[sample.records[i].stratum_id].insert(sample.weights[i]);
  ASSERT_EQ(weights.size(), 3u);
  std::vector<double> got;
  for (const auto& [id, ws] : weights) {
    ASSERT_EQ(ws.size(), 1u);
    got.push_back(*ws.begin());
  }
  EXPECT_EQ(got, (std::vector<double>{1300.0, 600.0, 100.0}));
  EXPECT_NO_THROW(sample.validate());
}

TEST(StratifiedSample, WithoutReplacementAndHorvitzThompsonTotal) {
  const auto spec = builtin_scenario("case4").population;
  const auto sample = simulate_survey(spec, 4);
  ASSERT_EQ(sample.size(), 2000u);
  EXPECT_EQ(std::accumulate(sample.weights.begin(), sample.weights.end(), 0.0),
            static_cast<double>(sample.population_size));
  EXPECT_EQ(sample.population_size, 5050000);
  std::map<int, std::set<double>> values;
  for (const auto& r : sample.records) EXPECT_TRUE(values[r.stratum_id].insert(r.value).second);
  for (std::size_t i = 0; i < sample.size(); ++i)
    EXPECT_EQ(sample.weights[i], 50.0 * sample.records[i].stratum_id);
}

TEST(StratifiedSample, CensusIsPermutationWithUnitWeights) {
  const auto spec = PopulationSpec::from_strata({normal_stratum(1, 50, 50, 0.0, 1.0)});
  const auto pop = generate_population(spec, 8);
  const auto sample = draw_stratified_sample(pop, spec, 9);
  auto drawn = sample.values();
  auto all = pop.values[0];
  std::sort(drawn.begin(), drawn.end());
  std::sort(all.begin(), all.end());
  EXPECT_EQ(drawn, all);
  for (double w : sample.weights) EXPECT_EQ(w, 1.0);
}

TEST(StratifiedSample, SimulateMatchesTwoStep) {
  const auto spec = builtin_scenario("case3").population;
  const auto one = simulate_survey(spec, 11);
  const auto two = draw_stratified_sample(generate_population(spec, 11), spec, 11);
  EXPECT_EQ(one.records, two.records);
  EXPECT_EQ(one.weights, two.weights);
  EXPECT_EQ(one.space, ObservationSpace::Count);
}

TEST(Weights, EffectiveC) {
  auto sample = simulate_survey(builtin_scenario("case1").population, 1);
  EXPECT_DOUBLE_EQ(effective_c(sample), 1.0);
  for (double& w : sample.weights) w *= 2.0;
  EXPECT_DOUBLE_EQ(effective_c(sample), 2.0);
  const auto census = simulate_survey(PopulationSpec::from_strata({normal_stratum(1, 40, 40, 0.0, 1.0)}), 1);
  EXPECT_DOUBLE_EQ(effective_c(census), 1.0);
}

TEST(Weights, NormalizeExamples) {
  const std::vector<double> w{1300.0, 600.0, 100.0};
  const auto n = normalize_weights(w);
  EXPECT_DOUBLE_EQ(n[0], 0.65);
  EXPECT_DOUBLE_EQ(n[1], 0.30);
  EXPECT_DOUBLE_EQ(n[2], 0.05);
  EXPECT_THROW(normalize_weights(std::vector<double>{1.0, 0.0}), ValidationError);
  EXPECT_THROW(normalize_weights(std::vector<double>{}), ValidationError);
}

TEST(Weights, NormalizeSumsToOneAndIsScaleInvariant) {
  RngStream rng(21, 0);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> w(1 + rep % 37);
    for (double& x : w) x = 0.01 + 100.0 * rng.uniform();
    const auto n = normalize_weights(w);
    EXPECT_NEAR(std::accumulate(n.begin(), n.end(), 0.0), 1.0, 1e-12);
    const double k = 0.001 + 1000.0 * rng.uniform();
    auto scaled = w;
    for (double& x : scaled) x *= k;
    const auto ns = normalize_weights(scaled);
    for (std::size_t i = 0; i < w.size(); ++i) EXPECT_NEAR(n[i], ns[i], 1e-12);
  }
}

TEST(Validation, RejectsBadSpecs) {
  auto too_big = PopulationSpec::from_strata({normal_stratum(1, 100, 10, 0, 1), normal_stratum(7, 5, 6, 0, 1)});
  try {
    too_big.validate();
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find('7'), std::string::npos);
  }
  EXPECT_THROW(PopulationSpec::from_strata({normal_stratum(1, 10, 2, 0, 0.0)}).validate(), ValidationError);
  EXPECT_THROW(PopulationSpec::from_strata({normal_stratum(1, 10, 0, 0, 1.0)}).validate(), ValidationError);
  EXPECT_THROW(PopulationSpec::from_strata({}).validate(), ValidationError);
  auto mismatch = PopulationSpec::from_strata({normal_stratum(1, 10, 2, 0, 1)});
  mismatch.total_size = 11;
  EXPECT_THROW(mismatch.validate(), ValidationError);
  const StratumSpec bad_rate{1, 10, 2, DensitySpec{PoissonMixture{{{1.0, -1.0}}}}};
  EXPECT_THROW(PopulationSpec::from_strata({bad_rate}).validate(), ValidationError);
}

TEST(Validation, SampleWeightsMustBePositive) {
  auto sample = simulate_survey(builtin_scenario("case1").population, 1);
  sample.weights[3] = -1.0;
  EXPECT_THROW(sample.validate(), ValidationError);
}

TEST(Persistence, RoundTripKeepsEverything) {
  const auto dir = temp_dir("roundtrip");
  for (const std::string name : {"case1", "case3"}) {
    const auto sample = simulate_survey(builtin_scenario(name).population, 13);
    const auto path = dir / (name + ".csv");
    save_sample(path, sample);
    EXPECT_TRUE(fs::exists(sidecar_path(path)));
    const auto back = load_sample(path);
    EXPECT_EQ(back, sample);
  }
}

TEST(Persistence, ParseErrorsCarryLineNumbers) {
  const auto dir = temp_dir("parse");
  const auto sample = simulate_survey(builtin_scenario("case1").population, 1);
  const auto path = dir / "s.csv";
  save_sample(path, sample);
  std::vector<std::string> lines;
  {
    std::ifstream in(path);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
  }
  lines[5] = "1.5,abc,1300";
  {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
  }
  try {
    load_sample(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6);
  }
  {
    std::ofstream out(path);
    out << "y,stratum,weight\n";
  }
  EXPECT_THROW(load_sample(path), ValidationError);
  EXPECT_THROW(load_sample(dir / "missing.csv"), ValidationError);
}

TEST(Serialization, PopulationSpecJsonRoundTrip) {
  for (const auto& name : builtin_scenario_names()) {
    const auto spec = builtin_scenario(name).population;
    EXPECT_EQ(population_spec_from_json(to_json(spec)), spec);
  }
}

TEST(PopulationDensity, MixesStrataByShare) {
  const auto spec =
      PopulationSpec::from_strata({normal_stratum(1, 300, 3, 0.0, 1.0), normal_stratum(2, 100, 1, 2.0, 0.5)});
  const double expected = 0.75 * 0.3989422804014327 + 0.25 * std::exp(-8.0) / (0.5 * std::sqrt(2.0 * M_PI));
  EXPECT_NEAR(spec.population_density(0.0), expected, 1e-14);
}

}  // namespace
}  // namespace surveymix
