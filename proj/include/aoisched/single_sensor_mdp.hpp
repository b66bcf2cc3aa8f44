#pragma once

#include <span>
#include <vector>

#include "aoisched/aoi_index.hpp"

namespace aoisched {

/// Optimal stationary policy of the Lagrangian single-sensor average-cost MDP
///   h(d) + theta = min{ c(d) + h(d+1),  c(d) + w + (1-p) h(d+1) + p h(1) }
/// on states 1..K (K = cost.size()), where a failed or skipped transmission at the cap K
/// stays at K. Transmission is forced at the cap so the chain stays unichain.
struct SingleSensorSolution {
  double average_cost = 0.0;            // theta
  std::vector<double> relative_value;   // h(d), d = 1..K, h(1) = 0
  std::vector<char> transmit;           // optimal action per state
  int iterations = 0;
};

/// Howard policy iteration; each policy is evaluated exactly by back substitution along
/// the chain (O(K) per evaluation). `warm_start` (optional) seeds the initial policy.
SingleSensorSolution solve_single_sensor_mdp(std::span<const double> cost, double p,
                                             double lagrange_w,
                                             const std::vector<char>* warm_start = nullptr);

/// Multiplier at which transmitting and idling tie at state `delta` (delta < K), found by
/// bisection on w -> w - p (h_w(delta+1) - h_w(1)). Requires a strictly increasing cost.
/// Throws OracleError when no bracket is found.
double numeric_whittle_index(std::span<const double> cost, double p, int delta);

/// numeric_whittle_index with cost f(d) = beta alpha^d truncated at delta_max states.
/// Throws StabilityError / DomainError on invalid arguments.
double whittle_index_numeric(const AoiFunction& fn, int delta, int delta_max);

}  // namespace aoisched
