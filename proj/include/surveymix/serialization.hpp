#pragma once

#include <json.hpp>

#include "surveymix/survey_data.hpp"

namespace surveymix {

nlohmann::json to_json(const DensitySpec& density);
nlohmann::json to_json(const PopulationSpec& spec);
DensitySpec density_spec_from_json(const nlohmann::json& j);
PopulationSpec population_spec_from_json(const nlohmann::json& j);

}  // namespace surveymix
