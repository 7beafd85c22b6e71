#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "surveymix/rng.hpp"

namespace surveymix {

struct NormalComponent {
  double weight = 1.0;
  double mean = 0.0;
  double sd = 1.0;
  bool operator==(const NormalComponent&) const = default;
};

struct PoissonComponent {
  double weight = 1.0;
  double rate = 1.0;
  bool operator==(const PoissonComponent&) const = default;
};

struct NormalMixture {
  std::vector<NormalComponent> components;
  bool operator==(const NormalMixture&) const = default;
};

struct PoissonMixture {
  std::vector<PoissonComponent> components;
  bool operator==(const PoissonMixture&) const = default;
};

/// Within-stratum data-generating density.
struct DensitySpec {
  std::variant<NormalMixture, PoissonMixture> variant;

  bool is_count() const { return std::holds_alternative<PoissonMixture>(variant); }
  double mean() const;
  /// Density (continuous) or probability mass (count) at y.
  double evaluate(double y) const;
  void validate() const;
  bool operator==(const DensitySpec&) const = default;
};

struct StratumSpec {
  int id = 0;
  std::int64_t population_size = 0;
  std::int64_t sample_size = 0;
  DensitySpec density;
  bool operator==(const StratumSpec&) const = default;
};

struct PopulationSpec {
  std::vector<StratumSpec> strata;
  std::int64_t total_size = 0;

  /// Builds a spec whose total is the sum of stratum sizes.
  static PopulationSpec from_strata(std::vector<StratumSpec> strata);

  /// Throws ValidationError naming the offending stratum.
  void validate() const;
  bool is_count() const;
  /// Population density f_0(y) = sum_m (N_m / N) f_m(y).
  double population_density(double y) const;
  bool operator==(const PopulationSpec&) const = default;
};

enum class ObservationSpace { Continuous, Count };

struct Population {
  std::vector<int> stratum_ids;
  std::vector<std::vector<double>> values;  // one array per stratum, spec order
};

struct SurveyRecord {
  double value = 0.0;
  int stratum_id = 0;
  bool operator==(const SurveyRecord&) const = default;
};

struct SurveySample {
  std::vector<SurveyRecord> records;
  std::vector<double> weights;
  std::int64_t population_size = 0;
  ObservationSpace space = ObservationSpace::Continuous;
  /// Present when the sample was simulated.
  std::optional<PopulationSpec> population;

  std::size_t size() const { return records.size(); }
  std::vector<double> values() const;
  void validate() const;
  bool operator==(const SurveySample&) const = default;
};

Population generate_population(const PopulationSpec& spec, std::uint64_t seed);

/// Uniform sampling without replacement of n_m units per stratum with weights N_m / n_m.
SurveySample draw_stratified_sample(const Population& pop, const PopulationSpec& spec,
                                    std::uint64_t seed);

/// Generates and samples one stratum at a time so full populations are never held
/// together. Same result as generate_population followed by draw_stratified_sample.
SurveySample simulate_survey(const PopulationSpec& spec, std::uint64_t seed);

/// c~ = sum_i w_i / N.
double effective_c(const SurveySample& sample);

std::vector<double> normalize_weights(std::span<const double> weights);
std::vector<double> normalize_weights(const SurveySample& sample);

/// Writes `path` (CSV: y,stratum,weight) and the sidecar `path.json`.
void save_sample(const std::filesystem::path& path, const SurveySample& sample);
SurveySample load_sample(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

std::string format_double(double x);

}  // namespace surveymix
