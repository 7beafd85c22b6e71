#include "surveymix/config.hpp"

#include <fstream>

#include "surveymix/errors.hpp"

namespace surveymix {

CutpointScheme parse_cutpoints(const std::string& name) {
  if (name == "integer") return CutpointScheme::Integer;
  if (name == "log") return CutpointScheme::LogShift;
  throw ValidationError("unknown cut-point scheme '" + name + "' (expected integer or log)");
}

std::string cutpoints_name(CutpointScheme scheme) { return scheme == CutpointScheme::Integer ? "integer" : "log"; }

namespace {

Kernel parse_kernel(const std::string& name) {
  if (name == "gaussian") return Kernel::Gaussian;
  if (name == "epanechnikov") return Kernel::Epanechnikov;
  throw ValidationError("unknown kernel '" + name + "'");
}

}  // namespace

nlohmann::json to_json(const FitConfig& c) {
  nlohmann::json j;
  j["H"] = c.H;
  j["alpha_prior"] = {{"shape", c.alpha_shape}, {"rate", c.alpha_rate}};
  j["tau2_scale_divisor"] = c.tau2_scale_divisor;
  j["adjustment"] = {{"fraction", c.adjustment_fraction}};
  if (c.adjustment_a) j["adjustment"]["a"] = *c.adjustment_a;
  j["schedule"] = {{"burn_in", c.schedule.burn_in}, {"iterations", c.schedule.iterations}, {"thin", c.schedule.thin}};
  j["seed"] = c.seed;
  j["cutpoints"] = cutpoints_name(c.cutpoints);
  j["kde"] = {{"kernel", c.kde_kernel == Kernel::Gaussian ? "gaussian" : "epanechnikov"}};
  if (c.kde_bandwidth) j["kde"]["bandwidth"] = *c.kde_bandwidth;
  j["gp"] = {{"log_kappa_step", c.gp_log_kappa_step}};
  return j;
}

FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig c) {
  try {
    if (j.contains("H")) c.H = j["H"].get<int>();
    if (j.contains("alpha_prior")) {
      const auto& a = j["alpha_prior"];
      if (a.contains("shape")) c.alpha_shape = a["shape"].get<double>();
      if (a.contains("rate")) c.alpha_rate = a["rate"].get<double>();
    }
    if (j.contains("tau2_scale_divisor")) c.tau2_scale_divisor = j["tau2_scale_divisor"].get<double>();
    if (j.contains("adjustment")) {
      const auto& a = j["adjustment"];
      if (a.contains("a")) c.adjustment_a = a["a"].get<double>();
      if (a.contains("fraction")) c.adjustment_fraction = a["fraction"].get<double>();
    }
    if (j.contains("schedule")) {
      const auto& s = j["schedule"];
      if (s.contains("burn_in")) c.schedule.burn_in = s["burn_in"].get<int>();
      if (s.contains("iterations")) c.schedule.iterations = s["iterations"].get<int>();
      if (s.contains("thin")) c.schedule.thin = s["thin"].get<int>();
    }
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("cutpoints")) c.cutpoints = parse_cutpoints(j["cutpoints"].get<std::string>());
    if (j.contains("kde")) {
      const auto& k = j["kde"];
      if (k.contains("bandwidth")) c.kde_bandwidth = k["bandwidth"].get<double>();
      if (k.contains("kernel")) c.kde_kernel = parse_kernel(k["kernel"].get<std::string>());
    }
    if (j.contains("gp") && j["gp"].contains("log_kappa_step")) {
      c.gp_log_kappa_step = j["gp"]["log_kappa_step"].get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  if (c.H < 2) throw ValidationError("config: H must be at least 2");
  c.schedule.validate();
  return c;
}

FitConfig load_fit_config(const std::filesystem::path& path, FitConfig base) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return fit_config_from_json(j, std::move(base));
}

}  // namespace surveymix
