#include "aoisched/sensor.hpp"

#include <limits>

#include "aoisched/errors.hpp"

namespace aoisched {

double Sensor::trace_at(int delta) const {
  if (delta < 1) throw DomainError("trace_at: delta must be >= 1");
  if (!has_plant()) return f_value(fn, delta);
  if (static_cast<std::size_t>(delta) > traces.size()) return std::numeric_limits<double>::infinity();
  return traces[static_cast<std::size_t>(delta - 1)];
}

Sensor make_sensor(const PlantModel& plant, CovarianceConvention convention) {
  validate_plant(plant);
  Sensor s;
  s.filter = steady_state_filter(plant);
  const CharParams cp = characteristic_params(plant, *s.filter);
  s.fn = AoiFunction{cp.alpha, cp.beta, plant.p};
  s.convention = convention;
  s.traces = error_trace_table(plant, *s.filter, kTraceTableMax, convention, kTraceTableStop);
  s.plant = plant;
  return s;
}

Sensor make_abstract_sensor(const AoiFunction& fn) {
  Sensor s;
  s.fn = fn;
  return s;
}

std::vector<Sensor> make_sensors(const std::vector<PlantModel>& plants, CovarianceConvention convention) {
  std::vector<Sensor> out;
  out.reserve(plants.size());
  for (const auto& p : plants) out.push_back(make_sensor(p, convention));
  return out;
}

}  // namespace aoisched
