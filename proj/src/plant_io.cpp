#include "aoisched/plant_io.hpp"

#include <fstream>
#include <sstream>

#include "aoisched/errors.hpp"

namespace aoisched {

using nlohmann::json;

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + ": expected nested array");
  const auto rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw ConfigError(std::string(what) + ": expected nested array");
  const auto cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) {
      throw ConfigError(std::string(what) + ": ragged matrix");
    }
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) throw ConfigError(std::string(what) + ": non-numeric entry");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return m;
}

json plants_to_json(const std::vector<PlantModel>& plants) {
  json arr = json::array();
  for (const auto& pl : plants) {
    arr.push_back({{"A", matrix_to_json(pl.A)},
                   {"C", matrix_to_json(pl.C)},
                   {"Q", matrix_to_json(pl.Q)},
                   {"R", matrix_to_json(pl.R)},
                   {"p", pl.p}});
  }
  return {{"schema_version", kSchemaVersion}, {"plants", std::move(arr)}};
}

std::vector<PlantModel> plants_from_json(const json& j) {
  if (!j.is_object() || !j.contains("plants") || !j["plants"].is_array()) {
    throw ConfigError("plant ensemble: missing \"plants\" array");
  }
  std::vector<PlantModel> out;
  for (const auto& e : j["plants"]) {
    PlantModel pl;
    for (const char* key : {"A", "C", "Q", "R", "p"}) {
      if (!e.contains(key)) throw ConfigError(std::string("plant entry missing \"") + key + "\"");
    }
    pl.A = matrix_from_json(e["A"], "A");
    pl.C = matrix_from_json(e["C"], "C");
    pl.Q = matrix_from_json(e["Q"], "Q");
    pl.R = matrix_from_json(e["R"], "R");
    if (!e["p"].is_number()) throw ConfigError("p must be a number");
    pl.p = e["p"].get<double>();
    out.push_back(std::move(pl));
  }
  return out;
}

std::vector<PlantModel> load_plants(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open plants file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse plants file " + path.string() + ": " + e.what());
  }
  return plants_from_json(j);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

}  // namespace aoisched
