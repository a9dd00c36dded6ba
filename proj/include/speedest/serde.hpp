// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 speedest contributors

#pragma once

#include <json.hpp>

#include "speedest/models.hpp"
#include "speedest/synth.hpp"

namespace speedest::train {
struct TrainConfig;
}

namespace speedest::serde {

// JSON bindings for the config and stats types. Parsers are strict: an
// unknown key is a ConfigError (it is almost always a typo), a missing key
// falls back to the documented default.

nlohmann::json model_config_to_json(const models::ModelConfig& cfg);
models::ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json train_config_to_json(const train::TrainConfig& cfg);
train::TrainConfig train_config_from_json(const nlohmann::json& j);

nlohmann::json norm_stats_to_json(const features::NormStats& s);
features::NormStats norm_stats_from_json(const nlohmann::json& j);

nlohmann::json target_stats_to_json(const models::TargetStats& s);
models::TargetStats target_stats_from_json(const nlohmann::json& j);

synth::DatasetConfig dataset_config_from_json(const nlohmann::json& j);
nlohmann::json dataset_config_to_json(const synth::DatasetConfig& cfg);

/// Parses a JSON file, mapping parse failures to ConfigError with the path.
nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace speedest::serde
