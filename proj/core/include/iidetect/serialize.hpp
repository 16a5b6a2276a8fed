#pragma once

// JSON documents for models, designs, keys and encoded configs.  Matrices
// are row-major nested arrays; vectors are flat arrays.  Dimensions are
// inferred on load and validated against the owning type.

#include <filesystem>

#include <nlohmann/json.hpp>

#include "iidetect/coding.hpp"
#include "iidetect/detector.hpp"
#include "iidetect/encoded_config.hpp"
#include "iidetect/plant.hpp"

namespace iidetect {

using nlohmann::json;

json matrix_to_json(const Mat& M);
Mat matrix_from_json(const json& j, std::string_view name);
json vector_to_json(const Vec& v);
Vec vector_from_json(const json& j, std::string_view name);

json to_json(const SystemModel& model);
SystemModel model_from_json(const json& j);

json to_json(const DetectorDesign& design);
DetectorDesign design_from_json(const json& j);

/// Keyfile contents.  Keyfiles are secret and must stay on the user side.
json to_json(const KeySet& key);
KeySet key_from_json(const json& j);

json to_json(const EncodedConfig& config);
EncodedConfig config_from_json(const json& j);

json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace iidetect
