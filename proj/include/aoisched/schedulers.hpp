#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aoisched/rng.hpp"
#include "aoisched/sensor.hpp"

namespace aoisched {

struct SensorState {
  int delta = 1;
  double err_trace = 0.0;  // Tr P(delta), kept up to date by the simulator
};

/// Indices of the scheduled sensors in increasing order, at most M of them.
struct Decision {
  std::vector<int> scheduled;
};

enum class PolicyKind {
  kLightweight,
  kAoiGreedy,
  kVoiGreedy,
  kAoiWhittle,
  kVoiWhittle,
  kRoundRobin,
  kRandomized,
  kDp,
};

/// Per-state cost used by the joint DP.
enum class DpCost { kAoiFunction, kTraceOfP };

/// Ties are always broken in favour of the lowest sensor index.
struct PolicySpec {
  PolicyKind kind = PolicyKind::kLightweight;
  std::vector<double> q;  // randomized marginals; empty means q* from optimize_randomized_q
  int dp_delta_cap = 25;
  DpCost dp_cost = DpCost::kAoiFunction;
  int voi_delta_cap = 100;  // truncation of the VoI-Whittle single-sensor MDP
  bool voi_cache = true;
};

/// "lightweight", "aoi-greedy", "voi-greedy", "aoi-whittle", "voi-whittle",
/// "round-robin", "randomized", "dp". Throws ConfigError.
PolicySpec parse_policy(std::string_view name);
std::string policy_name(PolicyKind kind);

/// The M largest scores, lowest index first among equals; result sorted ascending.
void select_top_m(std::span<const double> score, int M, std::vector<int>& out);

Decision lightweight_schedule(std::span<const SensorState> states, std::span<const AoiFunction> fns, int M);
Decision aoi_greedy_schedule(std::span<const SensorState> states, int M);
Decision voi_greedy_schedule(std::span<const SensorState> states, std::span<const Sensor> sensors, int M);
Decision aoi_whittle_schedule(std::span<const SensorState> states, std::span<const double> probs, int M);

/// p delta (delta + 2/p - 1) / 2.
double aoi_whittle_score(double p, int delta);

/// p (Tr P(delta + 1) - Tr P(1)).
double voi_greedy_score(const Sensor& sensor, int delta);

/// Numeric Whittle index of the single-sensor MDP with per-state cost Tr P(d), truncated
/// at `delta_cap` states. Computed directly for delta <= delta_cap / 2 and extended
/// geometrically by the ratio of the last two direct values beyond that.
class VoiIndexTable {
 public:
  VoiIndexTable(const Sensor& sensor, int delta_cap);
  double at(int delta) const;
  int direct_limit() const { return static_cast<int>(direct_.size()); }

 private:
  std::vector<double> direct_;
  double ratio_ = 1.0;
};

/// Recomputes the trace table from the plant matrices and runs the bisection on every
/// call; this is the uncached path whose cost the timing comparison measures.
double voi_whittle_index_uncached(const Sensor& sensor, int delta, int delta_cap);

Decision voi_whittle_schedule(std::span<const SensorState> states, std::span<const Sensor> sensors, int M,
                              int delta_cap);

/// Systematic sampling: sensor i is included with probability exactly q_i and at most
/// ceil(sum q) <= M sensors are drawn. Throws DomainError on infeasible marginals.
Decision randomized_stationary_schedule(std::span<const double> q, int M, Rng& rng);

/// Next M sensors cyclically from `cursor`; advances the cursor by M (mod N).
Decision round_robin_schedule(int& cursor, int N, int M);

struct DpPolicyTable;

/// Uniform decision interface over every policy kind. Copies are independent (cursor,
/// uncached scratch) but share the immutable sensor data, index tables and DP table.
class Scheduler {
 public:
  Scheduler(PolicySpec spec, std::shared_ptr<const std::vector<Sensor>> sensors, int M);
  Scheduler(PolicySpec spec, const std::vector<Sensor>& sensors, int M);

  void decide(std::span<const SensorState> states, Rng& rng, std::vector<int>& out);
  Decision decide(std::span<const SensorState> states, Rng& rng);

  const PolicySpec& spec() const { return spec_; }
  int budget() const { return M_; }
  int size() const { return static_cast<int>(sensors_->size()); }
  const std::vector<Sensor>& sensors() const { return *sensors_; }
  /// Marginals in use by the randomized policy (empty for other kinds).
  const std::vector<double>& marginals() const { return spec_.q; }
  /// Long-run average cost of the DP policy on its truncated chain (DP kind only).
  double dp_average_cost() const;

 private:
  PolicySpec spec_;
  std::shared_ptr<const std::vector<Sensor>> sensors_;
  int M_;
  int cursor_ = 0;
  std::vector<double> score_;
  std::shared_ptr<const std::vector<VoiIndexTable>> voi_tables_;
  std::shared_ptr<const DpPolicyTable> dp_;
};

}  // namespace aoisched
