#include "aoisched/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "aoisched/errors.hpp"
#include "aoisched/linalg.hpp"

namespace aoisched {

bool necessary_stability(double alpha, double p) { return alpha * (1.0 - p) < 1.0; }

bool necessary_stability(const PlantModel& plant) {
  const double r = spectral_radius(plant.A);
  return necessary_stability(r * r, plant.p);
}

bool sufficient_stability(double alpha, double p, double q) { return alpha * (1.0 - q * p) < 1.0; }

bool sufficient_stability(const PlantModel& plant, double q) {
  const double r = spectral_radius(plant.A);
  return sufficient_stability(r * r, plant.p, q);
}

bool upper_bound_exists(std::span<const AoiFunction> fns, int M) {
  double s = 0.0;
  for (const auto& f : fns) s += (1.0 - 1.0 / f.alpha) / f.p;
  return s < static_cast<double>(M);
}

double randomized_objective(std::span<const AoiFunction> fns, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto& f = fns[i];
    s += f.beta * (f.alpha - 1.0) / (1.0 - f.alpha + f.alpha * f.p * q[i]);
  }
  return s;
}

namespace {

void require_sensors(std::span<const AoiFunction> fns, int M) {
  if (fns.empty()) throw DomainError("bounds: no sensors");
  if (M < 1) throw DomainError("bounds: M must be >= 1");
}

double q_min(const AoiFunction& f) { return (1.0 - 1.0 / f.alpha) / f.p; }

}  // namespace

RandomizedQ optimize_randomized_q(std::span<const AoiFunction> fns, int M) {
  require_sensors(fns, M);
  for (const auto& f : fns) {
    if (!(f.alpha > 1.0 && f.beta > 0.0 && f.p > 0.0 && f.p <= 1.0)) {
      throw DomainError("optimize_randomized_q: need alpha > 1, beta > 0, p in (0, 1]");
    }
  }
  if (!upper_bound_exists(fns, M)) {
    throw NoBoundError("no stabilizing randomized policy: sum (1/p)(1 - 1/alpha) >= M");
  }
  const std::size_t N = fns.size();
  RandomizedQ out;
  if (static_cast<int>(N) <= M) {
    out.q.assign(N, 1.0);
    out.objective = randomized_objective(fns, out.q);
    return out;
  }
  constexpr double kEps = 1e-9;
  auto q_of = [&](double lambda, std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& f = fns[i];
      const double raw =
          (std::sqrt(f.beta * (f.alpha - 1.0) * f.alpha * f.p / lambda) - 1.0 + f.alpha) / (f.alpha * f.p);
      q[i] = std::clamp(raw, std::min(q_min(f) + kEps, 1.0), 1.0);
      s += q[i];
    }
    return s;
  };
  std::vector<double> q(N);
  const double target = static_cast<double>(M);
  // Bisection on log(lambda): sum q is nonincreasing in lambda.
  double lo = -700.0, hi = 700.0;
  if (q_of(std::exp(hi), q) > target) {
    throw NoBoundError("optimize_randomized_q: budget unreachable inside the feasible region");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (q_of(std::exp(mid), q) > target ? lo : hi) = mid;
  }
  out.multiplier = std::exp(hi);
  q_of(out.multiplier, q);
  out.q = q;
  out.objective = randomized_objective(fns, out.q);
  return out;
}

double relaxed_sensor_cost(const AoiFunction& fn, int delta_th) {
  require_stable(fn);
  if (delta_th < 1) throw DomainError("relaxed_sensor_cost: threshold must be >= 1");
  const double a = fn.alpha, b = fn.beta, p = fn.p;
  const double K = p * a * b / ((a - 1.0) * (1.0 - a + a * p));
  return K * (p * geometric_power(a, delta_th) - a * p + a - 1.0) /
         (static_cast<double>(delta_th) * p + 1.0 - p);
}

namespace {

double rate(const AoiFunction& f, int T) { return threshold_transmission_rate(f.p, ThresholdPolicy{T}); }

// Smallest T with rate(T) <= r, or INT_MAX when r <= 0.
int min_threshold_for_rate(const AoiFunction& f, double r) {
  if (r >= 1.0) return 1;
  if (!(r > 0.0)) return std::numeric_limits<int>::max();
  const double t = (1.0 / r - 1.0 + f.p) / f.p;
  if (!(t < 1e9)) return std::numeric_limits<int>::max();
  int T = std::max(1, static_cast<int>(std::ceil(t - 1e-9)));
  while (T > 1 && rate(f, T - 1) <= r) --T;
  while (rate(f, T) > r) ++T;
  return T;
}

struct DualResult {
  double value;
  std::vector<int> feasible;
};

// Lagrangian dual max_lambda sum_i min_T [g_i(T) + lambda r_i(T)] - lambda M.
DualResult lagrangian_dual(std::span<const AoiFunction> fns, int M) {
  const std::size_t N = fns.size();
  std::vector<int> T(N);
  auto inner = [&](double lambda, std::vector<int>& Ts) {
    double total = -lambda * M;
    double rates = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int best_t = 1;
      for (int t = 1; t < 100000; ++t) {
        const double g = relaxed_sensor_cost(fns[i], t);
        if (g >= best) break;
        const double v = g + lambda * rate(fns[i], t);
        if (v < best) {
          best = v;
          best_t = t;
        }
      }
      Ts[i] = best_t;
      total += best;
      rates += rate(fns[i], best_t);
    }
    return std::pair{total, rates - M};
  };
  double lo = 0.0, hi = 1.0;
  auto [best, sub0] = inner(0.0, T);
  if (sub0 <= 1e-12) return {best, T};
  std::vector<int> Thi(N);
  for (int k = 0; k < 2000; ++k) {
    auto [v, sub] = inner(hi, Thi);
    best = std::max(best, v);
    if (sub <= 1e-12) break;
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    auto [v, sub] = inner(mid, T);
    best = std::max(best, v);
    if (sub <= 1e-12) {
      hi = mid;
      Thi = T;
    } else {
      lo = mid;
    }
  }
  return {best, Thi};
}

}  // namespace

std::vector<double> threshold_search_caps(std::span<const AoiFunction> fns, int M) {
  require_sensors(fns, M);
  constexpr int kMaxT = 64;
  const std::size_t N = fns.size();
  const double limit = static_cast<double>(M) - 1e-12;
  std::vector<double> caps(N);
  for (std::size_t i = 0; i < N; ++i) {
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < N; ++j) {
      if (j != i) others.push_back(j);
    }
    auto sums_of = [&](std::size_t from, std::size_t to) {
      std::vector<double> sums{0.0};
      for (std::size_t k = from; k < to; ++k) {
        std::vector<double> next;
        for (double s : sums) {
          for (int t = 1; t <= kMaxT; ++t) {
            const double v = s + rate(fns[others[k]], t);
            if (v < limit) next.push_back(v);
          }
        }
        std::sort(next.begin(), next.end());
        next.erase(std::unique(next.begin(), next.end()), next.end());
        sums = std::move(next);
      }
      return sums;
    };
    const std::size_t half = others.size() / 2;
    const std::vector<double> left = sums_of(0, half);
    const std::vector<double> right = sums_of(half, others.size());
    double best = -1.0;
    for (double a : left) {
      auto it = std::lower_bound(right.begin(), right.end(), limit - a);
      if (it == right.begin()) continue;
      best = std::max(best, a + *std::prev(it));
    }
    const double g = static_cast<double>(M) - best;
    caps[i] = (1.0 / g + 2.0 * fns[i].p - 1.0) / fns[i].p;
  }
  return caps;
}

LowerBound lower_bound_J(std::span<const AoiFunction> fns, int M) {
  require_sensors(fns, M);
  for (const auto& f : fns) require_stable(f);
  const std::size_t N = fns.size();
  LowerBound lb;
  if (static_cast<int>(N) <= M) {
    lb.thresholds.assign(N, 1);
    for (const auto& f : fns) lb.value += relaxed_sensor_cost(f, 1);
    lb.dual_value = lb.value;
    lb.exhaustive = true;
    return lb;
  }
  const DualResult dual = lagrangian_dual(fns, M);
  lb.dual_value = dual.value;
  if (static_cast<int>(N) > kExhaustiveMaxSensors) {
    lb.value = dual.value;
    lb.thresholds = dual.feasible;
    return lb;
  }

  // Branch and bound. Each g_i is increasing on the positive integers, so a feasible
  // incumbent caps every threshold.
  double incumbent = 0.0;
  for (std::size_t i = 0; i < N; ++i) incumbent += relaxed_sensor_cost(fns[i], dual.feasible[i]);
  std::vector<int> best_T = dual.feasible;
  std::vector<double> g1(N);
  double g1_total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    g1[i] = relaxed_sensor_cost(fns[i], 1);
    g1_total += g1[i];
  }
  std::vector<int> cap(N);
  for (std::size_t i = 0; i < N; ++i) {
    int t = 1;
    while (t < 1000000 && relaxed_sensor_cost(fns[i], t + 1) + g1_total - g1[i] <= incumbent * (1.0 + 1e-12)) ++t;
    cap[i] = t;
  }
  std::vector<double> rest_g1(N + 1, 0.0);
  for (std::size_t i = N; i-- > 0;) rest_g1[i] = rest_g1[i + 1] + g1[i];

  std::vector<int> T(N, 1);
  const double budget = static_cast<double>(M) + 1e-12;
  std::function<void(std::size_t, double, double)> dfs = [&](std::size_t i, double cost, double used) {
    if (cost + rest_g1[i] >= incumbent) return;
    if (i + 1 == N) {
      const int t = min_threshold_for_rate(fns[i], budget - used);
      if (t > cap[i]) return;
      const double total = cost + relaxed_sensor_cost(fns[i], t);
      if (total < incumbent) {
        incumbent = total;
        T[i] = t;
        best_T = T;
      }
      return;
    }
    for (int t = 1; t <= cap[i]; ++t) {
      const double g = relaxed_sensor_cost(fns[i], t);
      if (cost + g + rest_g1[i + 1] >= incumbent) break;
      T[i] = t;
      dfs(i + 1, cost + g, used + rate(fns[i], t));
    }
  };
  dfs(0, 0.0, 0.0);
  lb.value = incumbent;
  lb.thresholds = best_T;
  lb.search_caps = threshold_search_caps(fns, M);
  lb.exhaustive = true;
  return lb;
}

OriginParams origin_params(const PlantModel& plant, const SteadyStateFilter& ss) {
  Eigen::EigenSolver<Matrix> es(plant.A, true);
  if (es.info() != Eigen::Success) throw UnsupportedError("origin bound: eigen decomposition failed");
  Eigen::MatrixXcd U = es.eigenvectors();
  for (Eigen::Index k = 0; k < U.cols(); ++k) U.col(k).normalize();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(U);
  const auto& sv = svd.singularValues();
  const double smax = sv(0), smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > 1e8) {
    throw UnsupportedError("origin bound: A is numerically defective (eigenvector condition number " +
                           std::to_string(smin > 0.0 ? smax / smin : INFINITY) + ")");
  }
  OriginParams op;
  op.zeta = (smin * smin) / (smax * smax);
  const double r = spectral_radius(plant.A);
  op.alpha_hat = r * r;
  op.beta_hat = op.zeta * std::min(min_eigenvalue_sym(plant.Q), min_eigenvalue_sym(ss.posterior));
  return op;
}

OriginLowerBound lower_bound_J_origin(std::span<const Sensor> sensors, int M) {
  OriginLowerBound out;
  std::vector<AoiFunction> hat;
  for (const Sensor& s : sensors) {
    if (!s.has_plant()) throw DomainError("origin bound: every sensor needs a plant");
    out.params.push_back(origin_params(*s.plant, *s.filter));
    hat.push_back(AoiFunction{out.params.back().alpha_hat, out.params.back().beta_hat, s.fn.p});
  }
  out.search = lower_bound_J(hat, M);
  out.value = out.search.value;
  return out;
}

UpperBound upper_bound_J(std::span<const AoiFunction> fns, int M, std::span<const double> q_star) {
  require_sensors(fns, M);
  if (q_star.size() != fns.size()) throw DimensionError("upper_bound_J: one q per sensor");
  if (!upper_bound_exists(fns, M)) throw NoBoundError("upper bound does not exist: sum (1/p)(1 - 1/alpha) >= M");
  UpperBound ub;
  double numerator_tail = 0.0;
  double denom = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto& f = fns[i];
    require_stable(f);
    const double a = f.alpha, b = f.beta, p = f.p, q = q_star[i];
    UpperBoundTerms t;
    t.l1 = p / (1.0 - (1.0 - p) * a);
    t.l2 = (a - 1.0 + p - 2.0 * a * p) / ((a - 1.0) * (1.0 - a * (1.0 - p)));
    t.eta = t.l1 * (1.0 - a * (1.0 - p * q));
    t.S = a * (t.l1 + t.l2) * (1.0 - p * q) - t.l2;
    if (!(t.eta > 0.0)) {
      throw NoBoundError("upper bound: q* does not satisfy alpha (1 - p q*) < 1 for sensor " + std::to_string(i));
    }
    const double start = std::floor(t.S / t.eta);
    if (!(start < 1e6)) throw NoBoundError("upper bound: delta-tilde search exceeds 1e6");
    int d = std::max(1, static_cast<int>(start));
    while (d > 1 && t.eta * (d - 1) - t.S > 0.0) --d;
    while (!(t.eta * d - t.S > 0.0)) ++d;
    t.delta_tilde = d;
    t.C_term = d > 1 ? t.eta * d * b * geometric_power(a, d) : 0.0;
    ub.C += t.C_term;
    numerator_tail += p * q * b * a * (t.l1 + t.l2);
    denom = std::min(denom, t.eta * d - t.S);
    ub.terms.push_back(t);
  }
  ub.value = (ub.C + numerator_tail) / denom;
  return ub;
}

BoundsReport compute_bounds(std::span<const Sensor> sensors, int M) {
  BoundsReport r;
  r.M = M;
  for (const Sensor& s : sensors) {
    r.params.push_back(s.fn);
    r.necessary_stable.push_back(necessary_stability(s.fn.alpha, s.fn.p));
  }
  const bool all_stable = std::all_of(r.necessary_stable.begin(), r.necessary_stable.end(), [](bool b) { return b; });
  if (!all_stable) {
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      if (!r.necessary_stable[i]) {
        std::ostringstream os;
        os << "sensor " << i << " violates rho^2 (1 - p) < 1 (" << sensors[i].fn.alpha * (1.0 - sensors[i].fn.p)
           << "); lower bounds are undefined";
        r.notes.push_back(os.str());
      }
    }
  } else {
    const LowerBound lb = lower_bound_J(r.params, M);
    r.lower_J = lb.value;
    r.lower_J_dual = lb.dual_value;
    r.thresholds_star = lb.thresholds;
    r.search_caps = lb.search_caps;
    const bool all_plants = std::all_of(sensors.begin(), sensors.end(), [](const Sensor& s) { return s.has_plant(); });
    if (all_plants) {
      try {
        const OriginLowerBound ob = lower_bound_J_origin(sensors, M);
        r.lower_J_origin = ob.value;
        for (const auto& op : ob.params) r.zeta.push_back(op.zeta);
      } catch (const Error& e) {
        r.notes.push_back(std::string("origin lower bound unavailable: ") + e.what());
      }
    }
  }
  try {
    const RandomizedQ rq = optimize_randomized_q(r.params, M);
    r.q_star = rq.q;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      r.sufficient_stable.push_back(sufficient_stability(r.params[i].alpha, r.params[i].p, rq.q[i]));
    }
    const UpperBound ub = upper_bound_J(r.params, M, rq.q);
    r.upper_J = ub.value;
    r.upper_terms = ub.terms;
    r.C_const = ub.C;
  } catch (const Error& e) {
    r.notes.push_back(std::string("upper bound unavailable: ") + e.what());
    if (r.sufficient_stable.empty()) r.sufficient_stable.assign(sensors.size(), false);
  }
  return r;
}

nlohmann::json to_json(const BoundsReport& r) {
  using nlohmann::json;
  json j;
  j["schema_version"] = 1;
  j["M"] = r.M;
  j["N"] = r.params.size();
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  j["lower_J"] = opt(r.lower_J);
  j["lower_J_dual"] = opt(r.lower_J_dual);
  j["lower_J_origin"] = opt(r.lower_J_origin);
  j["upper_J"] = opt(r.upper_J);
  j["C_const"] = r.C_const;
  json sensors = json::array();
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    json s;
    s["alpha"] = r.params[i].alpha;
    s["beta"] = r.params[i].beta;
    s["p"] = r.params[i].p;
    s["necessary_stable"] = static_cast<bool>(r.necessary_stable[i]);
    if (i < r.sufficient_stable.size()) s["sufficient_stable"] = static_cast<bool>(r.sufficient_stable[i]);
    if (i < r.q_star.size()) s["q_star"] = r.q_star[i];
    if (i < r.thresholds_star.size()) s["threshold_star"] = r.thresholds_star[i];
    if (i < r.search_caps.size()) s["threshold_cap"] = r.search_caps[i];
    if (i < r.zeta.size()) s["zeta"] = r.zeta[i];
    if (i < r.upper_terms.size()) {
      const auto& t = r.upper_terms[i];
      s["l1"] = t.l1;
      s["l2"] = t.l2;
      s["eta"] = t.eta;
      s["S"] = t.S;
      s["delta_tilde"] = t.delta_tilde;
      s["C_term"] = t.C_term;
    }
    sensors.push_back(s);
  }
  j["sensors"] = sensors;
  j["notes"] = r.notes;
  return j;
}

std::string summarize(const BoundsReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "N=" << r.params.size() << " M=" << r.M << "\n";
  auto line = [&](const char* name, const std::optional<double>& v) {
    os << "  " << name << ": ";
    if (v) os << *v; else os << "n/a";
    os << "\n";
  };
  line("lower_J", r.lower_J);
  line("lower_J (dual)", r.lower_J_dual);
  line("lower_J_origin", r.lower_J_origin);
  line("upper_J", r.upper_J);
  for (std::size_t i = 0; i < r.params.size(); ++i) {
    os << "  sensor " << i << ": alpha=" << r.params[i].alpha << " beta=" << r.params[i].beta
       << " p=" << r.params[i].p << " necessary_stable=" << (r.necessary_stable[i] ? "yes" : "no");
    if (i < r.sufficient_stable.size()) os << " sufficient_stable=" << (r.sufficient_stable[i] ? "yes" : "no");
    if (i < r.q_star.size()) os << " q*=" << r.q_star[i];
    if (i < r.thresholds_star.size()) os << " threshold*=" << r.thresholds_star[i];
    os << "\n";
  }
  for (const auto& n : r.notes) os << "  note: " << n << "\n";
  return os.str();
}

}  // namespace aoisched
