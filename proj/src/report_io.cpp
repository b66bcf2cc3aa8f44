#include "aoisched/report_io.hpp"

#include <cmath>
#include <sstream>

namespace aoisched {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepCsvHeader << "\n";
  for (const auto& r : rows) {
    os << num(r.sweep_value) << "," << r.policy << "," << num(r.report.mean_J) << "," << num(r.report.ci95) << ","
       << num(r.report.time_per_decision_ns) << "," << r.report.diverged_runs << "\n";
  }
  return os.str();
}

nlohmann::json to_json(const SimReport& r) {
  nlohmann::json j;
  j["mean_J"] = finite_or_null(r.mean_J);
  j["ci95"] = finite_or_null(r.ci95);
  j["runs"] = r.runs;
  j["diverged_runs"] = r.diverged_runs;
  j["per_sensor_attempt_rate"] = r.per_sensor_attempt_rate;
  j["per_sensor_success_rate"] = r.per_sensor_success_rate;
  j["aoi_histogram"] = r.aoi_histogram;
  j["max_scheduled"] = r.max_scheduled;
  j["time_per_decision_ns"] = r.time_per_decision_ns;
  return j;
}

nlohmann::json sweep_json(const std::vector<SweepRow>& rows, const std::string& kind, Metric metric) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["sweep"] = kind;
  j["metric"] = metric_name(metric);
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = to_json(r.report);
    row["sweep_value"] = r.sweep_value;
    row["policy"] = r.policy;
    arr.push_back(std::move(row));
  }
  j["rows"] = std::move(arr);
  return j;
}

}  // namespace aoisched
