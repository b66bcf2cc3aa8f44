#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "aoisched/simulator.hpp"

namespace aoisched {

inline constexpr const char* kSweepCsvHeader = "sweep_value,policy,mean_J,ci95,time_per_decision_ns,diverged_runs";

/// One header line plus one row per (sweep point, policy).
std::string sweep_csv(const std::vector<SweepRow>& rows);

nlohmann::json to_json(const SimReport& report);
/// {"schema_version":1, "sweep": kind, "metric": ..., "rows":[{sweep_value, policy, report}]}
nlohmann::json sweep_json(const std::vector<SweepRow>& rows, const std::string& kind, Metric metric);

}  // namespace aoisched
