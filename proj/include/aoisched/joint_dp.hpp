#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "aoisched/schedulers.hpp"

namespace aoisched {

/// Joint AoI chain of N sensors with ages saturating at delta_cap. State index is
/// sum_i (delta_i - 1) * delta_cap^i.
struct DpInstance {
  std::vector<double> p;
  std::vector<std::vector<double>> cost;  // cost[i][d - 1], d = 1..delta_cap
  int M = 1;
  int delta_cap = 25;

  int sensors() const { return static_cast<int>(p.size()); }
  std::size_t states() const;
};

DpInstance make_dp_instance(std::span<const Sensor> sensors, int M, int delta_cap, DpCost cost);

struct DpOptions {
  double tau = 0.5;        // aperiodicity transform P -> tau I + (1 - tau) P
  double tol_rel = 1e-9;   // stop when span(Th - h) <= tol_rel * max(1, |theta|)
  double stall_tol = 1e-13;  // or when no per-state gain moves by more than this (relative)
  long max_iters = 1000000;
  std::size_t max_states = 10000000;
};

/// Action (bitmask of scheduled sensors) for every joint state.
struct DpPolicyTable {
  int N = 0;
  int delta_cap = 0;
  std::vector<std::uint32_t> action;
  double average_cost = 0.0;  // long-run average from the all-ones start state

  std::uint32_t lookup(std::span<const SensorState> states) const;
};

struct DpSolution {
  DpPolicyTable table;
  std::vector<double> relative_value;
  double lower = 0.0;  // Odoni bounds, min and max over states of (Th - h)
  double upper = 0.0;
  long iterations = 0;
};

/// Relative value iteration over all exactly-min(M, N) subsets; the Bellman sweep is
/// parallelized with OpenMP. Throws ResourceError when the state space exceeds the
/// budget and ConvergenceError when max_iters is hit.
DpSolution dp_optimal_policy(const DpInstance& inst, const DpOptions& opt = {});
/// Single-threaded reference; bit-identical to dp_optimal_policy.
DpSolution dp_optimal_policy_serial(const DpInstance& inst, const DpOptions& opt = {});

/// Exact long-run average cost of a fixed policy table on the same chain.
double evaluate_policy_table(const DpInstance& inst, const std::vector<std::uint32_t>& action,
                             const DpOptions& opt = {});

/// The lightweight policy's choice in every joint state.
std::vector<std::uint32_t> lightweight_policy_table(const DpInstance& inst, std::span<const AoiFunction> fns);

}  // namespace aoisched
