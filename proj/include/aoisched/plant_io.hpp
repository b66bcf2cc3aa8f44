#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoisched/plant.hpp"

namespace aoisched {

inline constexpr int kSchemaVersion = 1;

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j, const char* what);

/// {"schema_version":1,"plants":[{"A":[[..]],"C":..,"Q":..,"R":..,"p":0.9}, ...]}
/// Row-major nested arrays; doubles print with 17 significant digits so parsing is exact.
nlohmann::json plants_to_json(const std::vector<PlantModel>& plants);
std::vector<PlantModel> plants_from_json(const nlohmann::json& j);

std::vector<PlantModel> load_plants(const std::filesystem::path& path);

/// Writes `contents` to `path` through a temporary sibling and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace aoisched
