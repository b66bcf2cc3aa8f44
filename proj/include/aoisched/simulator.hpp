#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aoisched/plant.hpp"
#include "aoisched/schedulers.hpp"

namespace aoisched {

enum class Metric { kAoiFunctionCost, kTraceOfP, kEmpiricalSquaredError };

std::string metric_name(Metric m);
/// "aoi", "trace", "empirical". Throws ConfigError.
Metric parse_metric(std::string_view name);

struct SimConfig {
  long horizon = 1000;
  long runs = 10000;
  std::uint64_t seed = 1;
  long warmup = -1;  // negative: 10% of the horizon
  Metric metric = Metric::kTraceOfP;
  int histogram_cap = 64;  // AoI histogram bins 1..cap, the last one absorbing larger ages
  double divergence_threshold = 1e12;
  bool time_decisions = true;
};

/// Throws ConfigError on horizon < 1, runs < 1 or warmup >= horizon.
long effective_warmup(const SimConfig& cfg);

struct SimReport {
  double mean_J = 0.0;  // over non-diverged runs
  double ci95 = 0.0;    // 1.96 * sample sd / sqrt(runs)
  long runs = 0;
  long diverged_runs = 0;
  std::vector<double> run_means;  // per run, in run order (NaN for diverged runs)
  std::vector<double> per_sensor_attempt_rate;
  std::vector<double> per_sensor_success_rate;  // successes / attempts
  std::vector<std::vector<std::uint64_t>> aoi_histogram;  // [sensor][delta - 1]
  std::uint64_t max_scheduled = 0;  // largest number of sensors scheduled in one step
  double time_per_decision_ns = 0.0;
};

/// Covariance-recursion Monte Carlo: per step the policy decides on the current ages,
/// every sensor draws s_i ~ Bernoulli(p_i), scheduled sensors with s_i = 1 reset to age
/// 1, and the cost is evaluated at the new ages. All ages start at 1. Runs are spread
/// over OpenMP threads; each run owns the random substreams (seed, run), so the report
/// does not depend on the thread count (apart from timing).
SimReport run_covariance_sim(const Scheduler& policy, const SimConfig& cfg);
/// Single-threaded reference of run_covariance_sim.
SimReport run_covariance_sim_serial(const Scheduler& policy, const SimConfig& cfg);

/// Simulates true states, the local steady-state Kalman filters and the remote
/// estimators; the cost is sum_i |x_i - xhat_i|^2 (EmpiricalSquaredError) or whatever
/// metric the config names. Every sensor needs a plant.
SimReport run_trajectory_sim(const Scheduler& policy, const SimConfig& cfg);

/// Median over `batches` of the mean wall time of one decide() call, with states evolving
/// under the policy's own decisions.
double measure_decision_time(const Scheduler& policy, long decisions, int batches, std::uint64_t seed);

struct TimingRow {
  std::string policy;
  int N = 0;
  double ns_per_decision = 0.0;
};

/// For each N, generates N plants from `gen` and times every policy with M = N / 2.
std::vector<TimingRow> measure_decision_times(const PlantGenSpec& gen, const std::vector<PolicySpec>& policies,
                                              const std::vector<int>& N_list, long decisions,
                                              std::uint64_t seed);

enum class SweepKind { kScale, kHeterogeneity, kChannel };

struct SweepSpec {
  SweepKind kind = SweepKind::kChannel;
  std::vector<double> values;
  int N = 10;
  int M = 5;
  double n_over_m = 2.0;  // scale sweeps keep N / M fixed
  PlantGenSpec gen;
  std::uint64_t plant_seed = 1;
  CovarianceConvention convention = CovarianceConvention::kRecursion;
};

/// "scale:lo:hi:count", "heterogeneity:lo:hi:count" or "channel:lo:hi:count" with
/// evenly spaced values (scale values are rounded to integers). Throws ConfigError.
SweepSpec parse_sweep(std::string_view text);
std::string sweep_kind_name(SweepKind kind);

struct SweepRow {
  double sweep_value = 0.0;
  std::string policy;
  SimReport report;
};

/// Plants of one sweep point. Scale: N = value fresh plants. Heterogeneity: the first
/// round(value * N) plants are distinct and the rest copy plant 0. Channel: every p set
/// to value. `base` (if non-empty) replaces the generated ensemble.
std::vector<PlantModel> sweep_plants(const SweepSpec& spec, double value, const std::vector<PlantModel>& base);
int sweep_budget(const SweepSpec& spec, double value);

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::vector<PolicySpec>& policies,
                                const SimConfig& cfg, const std::vector<PlantModel>& base = {});

}  // namespace aoisched
