#include "surveymix/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "surveymix/config.hpp"
#include "surveymix/errors.hpp"
#include "surveymix/harness.hpp"
#include "surveymix/serialization.hpp"

namespace surveymix {

namespace fs = std::filesystem;

namespace {

struct ScheduleFlags {
  std::optional<int> burn_in;
  std::optional<int> iterations;
  std::optional<int> thin;

  void add(CLI::App* app) {
    app->add_option("--burn-in", burn_in, "Burn-in sweeps");
    app->add_option("--iterations", iterations, "Sweeps after burn-in");
    app->add_option("--thin", thin, "Keep every n-th sweep");
  }
  void apply(FitConfig& c) const {
    if (burn_in) c.schedule.burn_in = *burn_in;
    if (iterations) c.schedule.iterations = *iterations;
    if (thin) c.schedule.thin = *thin;
    c.schedule.validate();
  }
};

fs::path default_out_dir() {
  if (const char* env = std::getenv("SURVEYMIX_OUT"); env && *env) return env;
  return ".";
}

void emit(std::ostream& out, bool json, const nlohmann::json& payload, const std::string& text) {
  if (json) {
    out << payload.dump() << '\n';
  } else {
    out << text << '\n';
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survey-weighted Dirichlet-process mixture density estimation"};
  app.require_subcommand(1);
  bool json = false;
  app.add_flag("--json", json, "Machine-readable output");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate a stratified survey sample");
  std::string sim_case, sim_spec;
  std::uint64_t sim_seed = 1;
  std::string sim_out;
  auto* case_opt = sim->add_option("--case", sim_case, "Builtin scenario (case1..case4)");
  sim->add_option("--spec", sim_spec, "Population spec JSON file")->excludes(case_opt);
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_flag("--json", json, "Machine-readable output");

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one method to a sample file");
  std::string fit_sample, fit_method = "proposed", fit_config, fit_out;
  std::optional<std::uint64_t> fit_seed;
  bool no_adjust = false, fit_trace = false, fit_truth = false;
  double grid_lo = -6.0, grid_hi = 6.0;
  std::size_t grid_n = 100;
  std::int64_t support = 100;
  std::optional<std::string> fit_cutpoints;
  ScheduleFlags fit_sched;
  fit->add_option("--sample", fit_sample, "Sample CSV (with .json sidecar)")->required();
  fit->add_option("--method", fit_method, "proposed|unadjusted|weighted_kde|ht|re|gp");
  fit->add_option("--config", fit_config, "FitConfig JSON file");
  fit->add_option("--seed", fit_seed, "Random seed");
  fit->add_option("--out", fit_out, "Output directory");
  fit->add_flag("--no-adjust", no_adjust, "Report the unadjusted DPMM fit");
  fit->add_flag("--trace", fit_trace, "Write the chain trace as JSON lines");
  fit->add_flag("--truth", fit_truth, "Add the true density column when the sidecar has a population");
  fit->add_option("--grid-lo", grid_lo, "Lower end of the evaluation grid");
  fit->add_option("--grid-hi", grid_hi, "Upper end of the evaluation grid");
  fit->add_option("--grid-n", grid_n, "Number of grid points");
  fit->add_option("--support", support, "Largest count reported for count samples");
  fit->add_option("--cutpoints", fit_cutpoints, "integer|log rounded-kernel cut-points");
  fit->add_flag("--json", json, "Machine-readable output");
  fit_sched.add(fit);

  // compare
  auto* cmp = app.add_subcommand("compare", "Run a builtin scenario across methods");
  std::string cmp_case, cmp_methods = "proposed,unadjusted,ht,re,gp", cmp_config, cmp_out;
  std::uint64_t cmp_seed = 1;
  bool cmp_trace = false;
  ScheduleFlags cmp_sched;
  cmp->add_option("--case", cmp_case, "Builtin scenario (case1..case4)")->required();
  cmp->add_option("--methods", cmp_methods, "Comma-separated method list");
  cmp->add_option("--config", cmp_config, "FitConfig JSON file overriding the scenario defaults");
  cmp->add_option("--seed", cmp_seed, "Random seed");
  cmp->add_option("--out", cmp_out, "Report directory");
  cmp->add_flag("--trace", cmp_trace, "Write DPMM chain traces");
  cmp->add_flag("--json", json, "Machine-readable output");
  cmp_sched.add(cmp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*sim) {
      PopulationSpec spec;
      std::string label;
      if (!sim_spec.empty()) {
        std::ifstream in(sim_spec);
        if (!in) throw ValidationError("cannot open spec " + sim_spec);
        try {
          spec = population_spec_from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
          throw ValidationError(sim_spec + ": " + e.what());
        }
        label = sim_spec;
      } else if (!sim_case.empty()) {
        spec = builtin_scenario(sim_case).population;
        label = sim_case;
      } else {
        throw ValidationError("simulate needs --case or --spec");
      }
      const fs::path dir = sim_out.empty() ? default_out_dir() : fs::path(sim_out);
      fs::create_directories(dir);
      const auto sample = simulate_survey(spec, sim_seed);
      save_sample(dir / "sample.csv", sample);
      emit(out, json,
           {{"command", "simulate"}, {"source", label}, {"seed", sim_seed}, {"records", sample.size()},
            {"sample", (dir / "sample.csv").string()}},
           "wrote " + std::to_string(sample.size()) + " records to " + (dir / "sample.csv").string());
      return kExitOk;
    }

    if (*fit) {
      Method method = parse_method(fit_method);
      if (no_adjust) {
        if (method != Method::Proposed && method != Method::Unadjusted) {
          throw ValidationError("--no-adjust applies only to the DPMM methods");
        }
        method = Method::Unadjusted;
      }
      const auto sample = load_sample(fit_sample);
      FitConfig config;
      if (!fit_config.empty()) config = load_fit_config(fit_config, config);
      if (fit_seed) config.seed = *fit_seed;
      if (fit_cutpoints) config.cutpoints = parse_cutpoints(*fit_cutpoints);
      fit_sched.apply(config);

      const bool count = sample.space == ObservationSpace::Count;
      const auto grid = count ? support_grid(support) : linspace(grid_lo, grid_hi, grid_n);
      std::vector<double> truth;
      if (fit_truth && !sample.population) throw ValidationError("--truth needs a sample with a population spec");
      if (sample.population) {
        for (double g : grid) truth.push_back(sample.population->population_density(g));
      }
      const fs::path dir = fit_out.empty() ? default_out_dir() : fs::path(fit_out);
      fs::create_directories(dir);
      RunOptions opts;
      if (fit_trace) opts.trace_dir = dir;
      auto results = fit_methods(sample, {method}, config, grid, truth, opts);
      const auto& [name, res] = *results.begin();
      const fs::path csv = dir / (name + ".csv");
      write_grid_summary_csv(csv, res.summary, count ? "k" : "y",
                             fit_truth ? std::span<const double>(truth) : std::span<const double>{});
      nlohmann::json payload{{"command", "fit"}, {"method", name}, {"csv", csv.string()}, {"rows", grid.size()}};
      if (!truth.empty()) {
        payload["coverage"] = res.coverage;
        payload["ise"] = res.ise;
      }
      emit(out, json, payload, "wrote " + csv.string());
      return kExitOk;
    }

    if (*cmp) {
      Scenario scenario = builtin_scenario(cmp_case);
      if (!cmp_config.empty()) scenario.config = load_fit_config(cmp_config, scenario.config);
      cmp_sched.apply(scenario.config);
      const auto methods = parse_methods(cmp_methods);
      const fs::path dir = cmp_out.empty() ? default_out_dir() : fs::path(cmp_out);
      fs::create_directories(dir);
      RunOptions opts;
      if (cmp_trace) opts.trace_dir = dir;
      const auto report = run_scenario(scenario, methods, cmp_seed, opts);
      write_report(dir, report);
      std::string text = "wrote report to " + dir.string();
      for (const auto& [name, res] : report.methods) {
        text += "\n  " + name + ": coverage " + format_double(res.coverage) + ", ise " + format_double(res.ise);
      }
      emit(out, json, report.to_json(), text);
      return kExitOk;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace surveymix
