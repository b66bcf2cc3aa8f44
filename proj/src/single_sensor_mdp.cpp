#include "aoisched/single_sensor_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aoisched/errors.hpp"

namespace aoisched {

namespace {

// Exact average cost and relative values of a fixed policy (transmit forced at the cap).
void evaluate_policy(std::span<const double> cost, double p, double w, const std::vector<char>& u,
                     std::vector<double>& h, double& theta) {
  const std::size_t K = cost.size();
  // h(k) = a[k] + b[k] * theta, built backwards from the cap.
  std::vector<double> a(K), b(K);
  a[K - 1] = (cost[K - 1] + w) / p;
  b[K - 1] = -1.0 / p;
  for (std::size_t k = K - 1; k-- > 0;) {
    const double keep = u[k] ? 1.0 - p : 1.0;
    a[k] = cost[k] + (u[k] ? w : 0.0) + keep * a[k + 1];
    b[k] = -1.0 + keep * b[k + 1];
  }
  theta = -a[0] / b[0];
  h.resize(K);
  for (std::size_t k = 0; k < K; ++k) h[k] = a[k] + b[k] * theta;
  h[0] = 0.0;
}

}  // namespace

SingleSensorSolution solve_single_sensor_mdp(std::span<const double> cost, double p,
                                             double lagrange_w, const std::vector<char>* warm_start) {
  const std::size_t K = cost.size();
  if (K < 2) throw DomainError("single-sensor MDP needs at least two states");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("single-sensor MDP: p must lie in (0, 1]");

  SingleSensorSolution sol;
  sol.transmit = warm_start && warm_start->size() == K ? *warm_start : std::vector<char>(K, 1);
  sol.transmit[K - 1] = 1;
  for (sol.iterations = 1; sol.iterations <= static_cast<int>(4 * K + 10); ++sol.iterations) {
    evaluate_policy(cost, p, lagrange_w, sol.transmit, sol.relative_value, sol.average_cost);
    bool changed = false;
    for (std::size_t k = 0; k + 1 < K; ++k) {
      // transmit - idle = w - p (h(k+1) - h(1)), with h(1) = 0.
      const double hp = p * sol.relative_value[k + 1];
      const double gap = lagrange_w - hp;
      const double scale = std::max({std::abs(lagrange_w), std::abs(hp), 1e-300});
      if (std::abs(gap) <= 1e-12 * scale) continue;
      const char want = gap < 0.0 ? 1 : 0;
      if (want != sol.transmit[k]) {
        sol.transmit[k] = want;
        changed = true;
      }
    }
    if (!changed) return sol;
  }
  throw ConvergenceError("single-sensor policy iteration did not terminate");
}

double numeric_whittle_index(std::span<const double> cost, double p, int delta) {
  const int K = static_cast<int>(cost.size());
  if (delta < 1 || delta >= K) {
    throw DomainError("numeric_whittle_index: need 1 <= delta < number of states (" +
                      std::to_string(K) + ")");
  }
  std::vector<char> policy;
  auto gap = [&](double w) {
    SingleSensorSolution s = solve_single_sensor_mdp(cost, p, w, policy.empty() ? nullptr : &policy);
    policy = s.transmit;
    return w - p * s.relative_value[static_cast<std::size_t>(delta)];
  };

  // Non-monotone costs can push the index below zero, so widen in both directions.
  double lo = 0.0, hi = 1.0;
  int widen = 0;
  if (!(gap(lo) < 0.0)) {
    hi = lo;
    lo = -1.0;
    while (!(gap(lo) < 0.0)) {
      hi = lo;
      lo *= 2.0;
      if (++widen > 1100 || !std::isfinite(lo)) throw OracleError("numeric_whittle_index: bracket failure");
    }
  } else {
    while (!(gap(hi) > 0.0)) {
      lo = hi;
      hi *= 2.0;
      if (++widen > 1100 || !std::isfinite(hi)) throw OracleError("numeric_whittle_index: bracket failure");
    }
  }
  for (int it = 0; it < 300 && hi - lo > 1e-14 * std::max({std::abs(lo), std::abs(hi), 1e-300}); ++it) {
    const double mid = 0.5 * (lo + hi);
    (gap(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

double whittle_index_numeric(const AoiFunction& fn, int delta, int delta_max) {
  require_stable(fn);
  if (delta < 1 || delta >= delta_max) throw DomainError("whittle_index_numeric: need 1 <= delta < delta_max");
  std::vector<double> cost(static_cast<std::size_t>(delta_max));
  for (int d = 1; d <= delta_max; ++d) cost[static_cast<std::size_t>(d - 1)] = f_value(fn, d);
  return numeric_whittle_index(cost, fn.p, delta);
}

}  // namespace aoisched
