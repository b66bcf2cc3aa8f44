#pragma once

#include <iosfwd>
#include <vector>

namespace aoisched {

/// Scalar AoI cost f(delta) = beta * alpha^delta of one sensor, with its channel
/// success probability p.
struct AoiFunction {
  double alpha = 2.0;
  double beta = 1.0;
  double p = 1.0;
};

/// Throws StabilityError unless alpha > 1, beta > 0, p in (0,1] and alpha (1 - p) < 1.
void require_stable(const AoiFunction& fn);

/// Transmit iff delta >= delta_th.
struct ThresholdPolicy {
  int delta_th = 1;
};

/// AoI after one step: 1 on a delivered packet, delta + 1 otherwise.
int aoi_step(int delta, bool gamma);

/// alpha^delta; switches to exp(delta * log alpha) beyond delta = 200.
double geometric_power(double alpha, int delta);

double f_value(const AoiFunction& fn, int delta);

/// Closed-form Whittle index of the decoupled single-sensor problem:
///   W(d) = beta p alpha^{d+1} (p d / (1 + alpha p - alpha) - 1 / (alpha - 1))
///          + beta p alpha / (alpha - 1).
/// Strictly increasing in d. Throws StabilityError when alpha (1 - p) >= 1.
double whittle_index(const AoiFunction& fn, int delta);

/// Relative value V(delta) of the threshold policy in the Lagrangian single-sensor
/// problem with multiplier w, normalized so V(1) = 0.
double threshold_value_function(const AoiFunction& fn, ThresholdPolicy tp, double lagrange_w,
                                int delta);

/// Long-run Lagrangian cost of the threshold policy:
///   theta = [w + p beta (alpha^T - alpha)/(alpha - 1) + p beta alpha^T/(1 - alpha + p alpha)]
///           / (1 + p T - p)
/// which equals E_Psi[f] + w * threshold_transmission_rate.
double threshold_average_cost(const AoiFunction& fn, ThresholdPolicy tp, double lagrange_w);

/// Stationary AoI law under a threshold policy, truncated at delta_cap.
struct AoiDistribution {
  std::vector<double> mass;  // mass[k] = Psi(k + 1), k < delta_cap
  double tail = 0.0;         // Psi(delta > delta_cap), computed in closed form
};

/// Psi(d) = p / D for d < T, p (1-p)^{d-T} / D otherwise, with D = T p + 1 - p.
/// Throws DomainError on p outside (0,1], T < 1 or delta_cap < T.
AoiDistribution stationary_aoi_distribution(double p, ThresholdPolicy tp, int delta_cap);

/// 1 / (T p + 1 - p): long-run fraction of steps in which the sensor transmits.
double threshold_transmission_rate(double p, ThresholdPolicy tp);

/// "delta,mass" rows, one per support point plus a final "tail" row.
void write_distribution_csv(std::ostream& out, const AoiDistribution& dist);

}  // namespace aoisched
