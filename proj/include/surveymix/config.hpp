#pragma once

#include <filesystem>

#include <json.hpp>

#include "surveymix/fit.hpp"

namespace surveymix {

/// JSON form of FitConfig. Every key is optional when reading; missing keys keep
/// the values already in `base`.
///
///   {
///     "H": 20,
///     "alpha_prior": {"shape": 0.25, "rate": 0.25},
///     "tau2_scale_divisor": 2,
///     "adjustment": {"a": 1000, "fraction": 0.02},
///     "schedule": {"burn_in": 5000, "iterations": 10000, "thin": 10},
///     "seed": 1,
///     "cutpoints": "integer" | "log",
///     "kde": {"bandwidth": 0.3, "kernel": "gaussian" | "epanechnikov"},
///     "gp": {"log_kappa_step": 0.3}
///   }
nlohmann::json to_json(const FitConfig& config);
FitConfig fit_config_from_json(const nlohmann::json& j, FitConfig base = {});
FitConfig load_fit_config(const std::filesystem::path& path, FitConfig base = {});

CutpointScheme parse_cutpoints(const std::string& name);
std::string cutpoints_name(CutpointScheme scheme);

}  // namespace surveymix
