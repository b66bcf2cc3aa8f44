#pragma once

#include <optional>
#include <vector>

#include "aoisched/aoi_index.hpp"
#include "aoisched/plant.hpp"

namespace aoisched {

inline constexpr int kTraceTableMax = 4096;
inline constexpr double kTraceTableStop = 1e15;

/// Everything a scheduler or the simulator needs to know about one sensor: its scalar
/// AoI function and, when it observes a concrete plant, the trace table Tr P(delta).
struct Sensor {
  AoiFunction fn;
  std::optional<PlantModel> plant;
  std::optional<SteadyStateFilter> filter;
  CovarianceConvention convention = CovarianceConvention::kRecursion;
  std::vector<double> traces;  // Tr P(d) for d = 1..traces.size()

  bool has_plant() const { return plant.has_value(); }

  /// Tr P(delta); +inf past the end of the table. A sensor built from an AoiFunction
  /// alone uses f(delta) as its error trace.
  double trace_at(int delta) const;
};

/// Runs the Riccati iteration, extracts (alpha, beta) and tabulates Tr P(delta) up to
/// kTraceTableMax or until the trace exceeds kTraceTableStop.
Sensor make_sensor(const PlantModel& plant,
                   CovarianceConvention convention = CovarianceConvention::kRecursion);

Sensor make_abstract_sensor(const AoiFunction& fn);

std::vector<Sensor> make_sensors(const std::vector<PlantModel>& plants,
                                 CovarianceConvention convention = CovarianceConvention::kRecursion);

}  // namespace aoisched
