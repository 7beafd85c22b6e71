#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "surveymix/fit.hpp"
#include "surveymix/survey_adjust.hpp"
#include "surveymix/survey_data.hpp"

namespace surveymix {

enum class Method { Proposed, Unadjusted, WeightedKde, Ht, Re, Gp };

std::string method_name(Method m);
Method parse_method(const std::string& name);
/// Comma-separated list, e.g. "proposed,unadjusted,ht".
std::vector<Method> parse_methods(const std::string& list);
const std::vector<Method>& comparison_methods();  // proposed, unadjusted, ht, re, gp

struct Scenario {
  std::string name;
  PopulationSpec population;
  FitConfig config;
  /// Continuous evaluation grid, or support 0..K for counts.
  std::vector<double> grid;

  bool is_count() const { return population.is_count(); }
  /// f_0 on the grid (density, or pmf for counts).
  std::vector<double> truth() const;
  void validate() const;
};

Scenario builtin_scenario(const std::string& name);
const std::vector<std::string>& builtin_scenario_names();

struct MethodResult {
  GridSummary summary;
  double coverage = 0.0;
  double ise = 0.0;
  double seconds = 0.0;
  std::uint64_t seed = 0;
};

struct RunReport {
  std::string scenario;
  std::uint64_t seed = 0;
  FitConfig config;
  std::vector<double> truth;
  bool count = false;
  std::map<std::string, MethodResult> methods;

  /// Deterministic part of the report (no timings).
  nlohmann::json metrics_json() const;
  nlohmann::json to_json() const;
};

struct RunOptions {
  /// Directory for `<method>.trace.jsonl` files of the DPMM methods; empty disables.
  std::filesystem::path trace_dir;
  bool parallel = true;
};

/// Fits every requested method to one simulated sample of the scenario.
RunReport run_scenario(const Scenario& scenario, const std::vector<Method>& methods, std::uint64_t seed,
                       const RunOptions& options = {});

/// Fits every requested method to an existing sample. `grid` is the evaluation grid,
/// or the support 0..K for count samples.
std::map<std::string, MethodResult> fit_methods(const SurveySample& sample, const std::vector<Method>& methods,
                                                const FitConfig& config, std::span<const double> grid,
                                                std::span<const double> truth = {},
                                                const RunOptions& options = {});

/// Trapezoid integral of squared error for densities, plain sum for pmfs.
double ise_metric(std::span<const double> estimate, std::span<const double> truth, std::span<const double> grid,
                  bool pmf);

/// Trapezoid integral of a function tabulated on a grid.
double trapezoid(std::span<const double> values, std::span<const double> grid);

/// Lag-k sample autocorrelation; nullopt for a constant chain.
std::optional<double> autocorrelation_diagnostic(std::span<const double> chain, std::size_t lag);

/// Interior grid points strictly above both neighbours (plateaus count once).
std::vector<std::size_t> local_maxima(std::span<const double> values);

/// Writes report.json and one <method>.csv per method.
void write_report(const std::filesystem::path& dir, const RunReport& report);

}  // namespace surveymix
