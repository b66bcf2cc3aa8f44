#include "aoisched/aoi_index.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "aoisched/errors.hpp"

namespace aoisched {

void require_stable(const AoiFunction& fn) {
  if (!(fn.alpha > 1.0)) throw StabilityError("AoI function requires alpha > 1");
  if (!(fn.beta > 0.0)) throw StabilityError("AoI function requires beta > 0");
  if (!(fn.p > 0.0 && fn.p <= 1.0)) throw StabilityError("AoI function requires p in (0, 1]");
  if (!(fn.alpha * (1.0 - fn.p) < 1.0)) {
    throw StabilityError("alpha (1 - p) = " + std::to_string(fn.alpha * (1.0 - fn.p)) +
                         " violates alpha (1 - p) < 1");
  }
}

int aoi_step(int delta, bool gamma) { return gamma ? 1 : delta + 1; }

double geometric_power(double alpha, int delta) {
  if (delta > 200) return std::exp(static_cast<double>(delta) * std::log(alpha));
  return std::pow(alpha, delta);
}

double f_value(const AoiFunction& fn, int delta) { return fn.beta * geometric_power(fn.alpha, delta); }

double whittle_index(const AoiFunction& fn, int delta) {
  require_stable(fn);
  if (delta < 1) throw DomainError("whittle_index: delta must be >= 1");
  const double a = fn.alpha;
  const double p = fn.p;
  const double denom = 1.0 + a * p - a;
  return fn.beta * p * geometric_power(a, delta + 1) * (p * delta / denom - 1.0 / (a - 1.0)) +
         fn.beta * p * a / (a - 1.0);
}

double threshold_average_cost(const AoiFunction& fn, ThresholdPolicy tp, double lagrange_w) {
  require_stable(fn);
  if (tp.delta_th < 1) throw DomainError("threshold must be >= 1");
  const double a = fn.alpha;
  const double p = fn.p;
  const double b = fn.beta;
  const double aT = geometric_power(a, tp.delta_th);
  const double num = lagrange_w + p * b * (aT - a) / (a - 1.0) + p * b * aT / (1.0 - a + p * a);
  return num / (1.0 + p * tp.delta_th - p);
}

double threshold_value_function(const AoiFunction& fn, ThresholdPolicy tp, double lagrange_w,
                                int delta) {
  if (delta < 1) throw DomainError("threshold_value_function: delta must be >= 1");
  const double theta = threshold_average_cost(fn, tp, lagrange_w);
  const double a = fn.alpha;
  const double p = fn.p;
  const double b = fn.beta;
  const int T = tp.delta_th;
  // Transmitting region: V(d) = beta alpha^d / (1 - alpha + p alpha) + (w - theta) / p.
  auto active = [&](int d) { return b * geometric_power(a, d) / (1.0 - a + p * a) + (lagrange_w - theta) / p; };
  if (delta >= T) return active(delta);
  // Idle region: V(d) = beta (alpha^T - alpha^d) / (alpha - 1) + d theta + V(T) - T theta.
  const double v_res = active(T) - T * theta;
  return b * (geometric_power(a, T) - geometric_power(a, delta)) / (a - 1.0) + delta * theta + v_res;
}

AoiDistribution stationary_aoi_distribution(double p, ThresholdPolicy tp, int delta_cap) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("stationary_aoi_distribution: p must lie in (0, 1]");
  if (tp.delta_th < 1) throw DomainError("stationary_aoi_distribution: threshold must be >= 1");
  if (delta_cap < tp.delta_th) throw DomainError("stationary_aoi_distribution: delta_cap < threshold");
  const int T = tp.delta_th;
  const double D = T * p + 1.0 - p;
  AoiDistribution dist;
  dist.mass.resize(static_cast<std::size_t>(delta_cap));
  for (int d = 1; d <= delta_cap; ++d) {
    dist.mass[static_cast<std::size_t>(d - 1)] = d < T ? p / D : p * std::pow(1.0 - p, d - T) / D;
  }
  // Sum over d > cap of p (1-p)^{d-T} / D = (1-p)^{cap-T+1} / D.
  dist.tail = std::pow(1.0 - p, delta_cap - T + 1) / D;
  return dist;
}

double threshold_transmission_rate(double p, ThresholdPolicy tp) {
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("threshold_transmission_rate: p must lie in (0, 1]");
  if (tp.delta_th < 1) throw DomainError("threshold_transmission_rate: threshold must be >= 1");
  return 1.0 / (tp.delta_th * p + 1.0 - p);
}

void write_distribution_csv(std::ostream& out, const AoiDistribution& dist) {
  out << "delta,mass\n";
  out.precision(17);
  for (std::size_t k = 0; k < dist.mass.size(); ++k) out << (k + 1) << ',' << dist.mass[k] << '\n';
  out << "tail," << dist.tail << '\n';
}

}  // namespace aoisched
