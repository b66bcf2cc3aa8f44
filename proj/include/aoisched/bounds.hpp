#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "aoisched/sensor.hpp"

namespace aoisched {

/// rho^2 (1 - p) < 1: the remote estimate can be mean-square stable at all.
bool necessary_stability(double alpha, double p);
bool necessary_stability(const PlantModel& plant);

/// rho^2 (1 - q p) < 1: the randomized policy with marginal q stabilizes the sensor.
bool sufficient_stability(double alpha, double p, double q);
bool sufficient_stability(const PlantModel& plant, double q);

/// sum_i (1/p_i)(1 - 1/alpha_i) < M: some randomized policy stabilizes every sensor.
bool upper_bound_exists(std::span<const AoiFunction> fns, int M);

struct RandomizedQ {
  std::vector<double> q;
  double objective = 0.0;   // sum_i beta_i (alpha_i - 1) / (1 - alpha_i + alpha_i p_i q_i)
  double multiplier = 0.0;  // KKT multiplier of the budget constraint (0 when N <= M)
};

double randomized_objective(std::span<const AoiFunction> fns, std::span<const double> q);

/// KKT water-filling with bisection on the multiplier so that sum q = min(M, N).
/// Throws NoBoundError when the existence condition fails.
RandomizedQ optimize_randomized_q(std::span<const AoiFunction> fns, int M);

/// Long-run E[f] of one sensor under threshold T:
///   K (p alpha^T - alpha p + alpha - 1) / (T p + 1 - p),  K = p alpha beta / ((alpha-1)(1-alpha+alpha p)).
double relaxed_sensor_cost(const AoiFunction& fn, int delta_th);

struct LowerBound {
  double value = 0.0;            // min over integer thresholds subject to sum of rates <= M
  std::vector<int> thresholds;
  double dual_value = 0.0;       // Lagrangian dual of the same problem (always a valid bound)
  std::vector<double> search_caps;  // per-sensor threshold caps (filled when exhaustive)
  bool exhaustive = false;
};

inline constexpr int kExhaustiveMaxSensors = 6;

/// Exhaustive branch-and-bound for N <= 6, Lagrangian dual otherwise (value = dual value,
/// thresholds from the feasible side of the dual bisection). Throws StabilityError when
/// some alpha_i (1 - p_i) >= 1.
LowerBound lower_bound_J(std::span<const AoiFunction> fns, int M);

/// (1/p_i)(1/G_i + 2 p_i - 1), where G_i = M minus the largest sum of the other sensors'
/// rates that stays below M (thresholds searched over 1..64).
std::vector<double> threshold_search_caps(std::span<const AoiFunction> fns, int M);

struct OriginParams {
  double zeta = 0.0;
  double alpha_hat = 0.0;
  double beta_hat = 0.0;
};

/// zeta = sigma_min(U)^2 / sigma_max(U)^2 for the unit-column eigenvector matrix U of A,
/// alpha_hat = rho^2, beta_hat = zeta min(lambda_min(Q), lambda_min(Pbar)).
/// Throws UnsupportedError when A is (numerically) defective.
OriginParams origin_params(const PlantModel& plant, const SteadyStateFilter& ss);

struct OriginLowerBound {
  double value = 0.0;
  std::vector<OriginParams> params;
  LowerBound search;
};

/// Every sensor must carry a plant.
OriginLowerBound lower_bound_J_origin(std::span<const Sensor> sensors, int M);

struct UpperBoundTerms {
  double l1 = 0.0;
  double l2 = 0.0;
  double eta = 0.0;
  double S = 0.0;
  int delta_tilde = 0;
  double C_term = 0.0;
};

struct UpperBound {
  double value = 0.0;
  double C = 0.0;
  std::vector<UpperBoundTerms> terms;
};

/// Throws NoBoundError when the existence condition fails or q* does not make every
/// eta_i positive.
UpperBound upper_bound_J(std::span<const AoiFunction> fns, int M, std::span<const double> q_star);

struct BoundsReport {
  int M = 0;
  std::vector<AoiFunction> params;
  std::optional<double> lower_J;
  std::optional<double> lower_J_dual;
  std::optional<double> lower_J_origin;
  std::optional<double> upper_J;
  std::vector<double> q_star;
  std::vector<int> thresholds_star;
  std::vector<double> search_caps;
  std::vector<bool> necessary_stable;
  std::vector<bool> sufficient_stable;
  std::vector<double> zeta;
  std::vector<UpperBoundTerms> upper_terms;
  double C_const = 0.0;
  std::vector<std::string> notes;  // why a quantity is missing
};

/// Everything above for one ensemble; failures of individual bounds become notes.
BoundsReport compute_bounds(std::span<const Sensor> sensors, int M);

nlohmann::json to_json(const BoundsReport& report);
std::string summarize(const BoundsReport& report);

}  // namespace aoisched
