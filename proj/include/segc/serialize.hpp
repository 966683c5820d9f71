#pragma once

#include "segc/perturb.hpp"
#include "segc/synthgen.hpp"
#include "segc/trainer.hpp"

#include <json.hpp>

namespace segc {

// JSON mappings for configuration types. Readers start from the object passed
// in and override only the keys present; unknown keys are rejected.

nlohmann::json to_json(const PerturbationSpec& s);
void update_from_json(PerturbationSpec& s, const nlohmann::json& j);

nlohmann::json to_json(const EnvironmentSpec& s);
void update_from_json(EnvironmentSpec& s, const nlohmann::json& j);

nlohmann::json to_json(const SuiteConfig& c);
void update_from_json(SuiteConfig& c, const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& c);
void update_from_json(TrainConfig& c, const nlohmann::json& j);

}  // namespace segc
