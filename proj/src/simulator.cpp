#include "aoisched/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include <omp.h>

#include "aoisched/errors.hpp"

namespace aoisched {

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::kAoiFunctionCost: return "aoi";
    case Metric::kTraceOfP: return "trace";
    case Metric::kEmpiricalSquaredError: return "empirical";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  if (name == "aoi") return Metric::kAoiFunctionCost;
  if (name == "trace") return Metric::kTraceOfP;
  if (name == "empirical") return Metric::kEmpiricalSquaredError;
  throw ConfigError("unknown metric '" + std::string(name) + "' (expected aoi, trace or empirical)");
}

long effective_warmup(const SimConfig& cfg) {
  if (cfg.horizon < 1) throw ConfigError("simulation horizon must be >= 1");
  if (cfg.runs < 1) throw ConfigError("simulation runs must be >= 1");
  if (cfg.histogram_cap < 1) throw ConfigError("histogram cap must be >= 1");
  const long w = cfg.warmup < 0 ? cfg.horizon / 10 : cfg.warmup;
  if (w >= cfg.horizon) throw ConfigError("warmup must be shorter than the horizon");
  return w;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Accum {
  std::vector<std::uint64_t> attempts, successes, hist;
  std::uint64_t steps = 0;
  std::uint64_t max_scheduled = 0;
  std::uint64_t decisions = 0;
  double decide_ns = 0.0;

  Accum(std::size_t N, int cap) : attempts(N, 0), successes(N, 0), hist(N * static_cast<std::size_t>(cap), 0) {}

  void merge(const Accum& o) {
    for (std::size_t i = 0; i < attempts.size(); ++i) {
      attempts[i] += o.attempts[i];
      successes[i] += o.successes[i];
    }
    for (std::size_t i = 0; i < hist.size(); ++i) hist[i] += o.hist[i];
    steps += o.steps;
    max_scheduled = std::max(max_scheduled, o.max_scheduled);
    decisions += o.decisions;
    decide_ns += o.decide_ns;
  }
};

struct TrajData {
  Matrix LQ, LR, LP;
};

std::vector<TrajData> trajectory_data(const std::vector<Sensor>& sensors) {
  std::vector<TrajData> out;
  for (const Sensor& s : sensors) {
    if (!s.has_plant()) throw ConfigError("trajectory simulation needs a plant behind every sensor");
    out.push_back({sqrt_psd(s.plant->Q), sqrt_psd(s.plant->R), sqrt_psd(s.filter->posterior)});
  }
  return out;
}

Vector gaussian(const Matrix& L, Rng& rng, std::normal_distribution<double>& g) {
  Vector z(L.cols());
  for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = g(rng);
  return L * z;
}

double run_once(const Scheduler& proto, const SimConfig& cfg, long warmup, long run, Accum& acc,
                const std::vector<TrajData>* traj) {
  Scheduler sched = proto;
  const std::vector<Sensor>& sensors = sched.sensors();
  const std::size_t N = sensors.size();
  const std::size_t cap = static_cast<std::size_t>(cfg.histogram_cap);
  const std::uint64_t base = 4 * static_cast<std::uint64_t>(run);
  Rng chan = substream(cfg.seed, base);
  Rng pol = substream(cfg.seed, base + 1);
  Rng noise = substream(cfg.seed, base + 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<SensorState> st(N);
  for (std::size_t i = 0; i < N; ++i) st[i].err_trace = sensors[i].trace_at(1);

  // Trajectory state: the age-1 start is a delivered packet at t = -1.
  std::vector<Vector> x, xl, xr;
  if (traj) {
    for (std::size_t i = 0; i < N; ++i) {
      const PlantModel& pm = *sensors[i].plant;
      const Vector xl0 = Vector::Zero(pm.n());
      const Vector xm1 = xl0 + gaussian((*traj)[i].LP, noise, gauss);
      Vector x0 = pm.A * xm1 + gaussian((*traj)[i].LQ, noise, gauss);
      const Vector y0 = pm.C * x0 + gaussian((*traj)[i].LR, noise, gauss);
      xl.push_back(pm.A * xl0 + sensors[i].filter->gain * (y0 - pm.C * pm.A * xl0));
      xr.push_back(pm.A * xl0);
      x.push_back(std::move(x0));
    }
  }

  std::vector<int> chosen;
  std::vector<char> on(N, 0), got(N, 0);
  double sum = 0.0;
  long counted = 0;
  for (long t = 0; t < cfg.horizon; ++t) {
    if (cfg.time_decisions) {
      const auto t0 = Clock::now();
      sched.decide(st, pol, chosen);
      acc.decide_ns += std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
    } else {
      sched.decide(st, pol, chosen);
    }
    ++acc.decisions;
    acc.max_scheduled = std::max<std::uint64_t>(acc.max_scheduled, chosen.size());
    std::fill(on.begin(), on.end(), 0);
    for (int i : chosen) on[static_cast<std::size_t>(i)] = 1;
    for (std::size_t i = 0; i < N; ++i) got[i] = unif(chan) < sensors[i].fn.p;

    const bool record = t >= warmup;
    double cost = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const bool gamma = on[i] && got[i];
      if (record && on[i]) {
        ++acc.attempts[i];
        acc.successes[i] += got[i];
      }
      st[i].delta = gamma ? 1 : std::min(st[i].delta + 1, INT_MAX / 2);
      st[i].err_trace = sensors[i].trace_at(st[i].delta);
      if (traj) {
        const PlantModel& pm = *sensors[i].plant;
        const Vector x_next = pm.A * x[i] + gaussian((*traj)[i].LQ, noise, gauss);
        const Vector y = pm.C * x_next + gaussian((*traj)[i].LR, noise, gauss);
        const Vector pred = pm.A * xl[i];
        xr[i] = gamma ? pred : Vector(pm.A * xr[i]);
        xl[i] = pred + sensors[i].filter->gain * (y - pm.C * pred);
        // Shift the frame so the local estimate sits at the origin; errors are unchanged
        // and the unstable state never leaves floating-point range.
        x[i] = x_next - xl[i];
        xr[i] -= xl[i];
        xl[i].setZero();
      }
      switch (cfg.metric) {
        case Metric::kAoiFunctionCost: cost += f_value(sensors[i].fn, st[i].delta); break;
        case Metric::kTraceOfP: cost += st[i].err_trace; break;
        case Metric::kEmpiricalSquaredError: cost += (x[i] - xr[i]).squaredNorm(); break;
      }
      if (record) ++acc.hist[i * cap + std::min<std::size_t>(static_cast<std::size_t>(st[i].delta), cap) - 1];
    }
    if (!(cost <= cfg.divergence_threshold)) return std::numeric_limits<double>::quiet_NaN();
    if (record) {
      sum += cost;
      ++counted;
    }
  }
  acc.steps += static_cast<std::uint64_t>(counted);
  return sum / static_cast<double>(counted);
}

SimReport finalize(const Scheduler& proto, const SimConfig& cfg, std::vector<double> means, const Accum& acc) {
  SimReport r;
  const std::size_t N = proto.sensors().size();
  r.runs = cfg.runs;
  double s = 0.0;
  long n = 0;
  for (double m : means) {
    if (std::isnan(m)) {
      ++r.diverged_runs;
    } else {
      s += m;
      ++n;
    }
  }
  if (n > 0) {
    r.mean_J = s / static_cast<double>(n);
    double ss = 0.0;
    for (double m : means) {
      if (!std::isnan(m)) ss += (m - r.mean_J) * (m - r.mean_J);
    }
    r.ci95 = n > 1 ? 1.96 * std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n)) : 0.0;
  } else {
    r.mean_J = std::numeric_limits<double>::quiet_NaN();
    r.ci95 = std::numeric_limits<double>::quiet_NaN();
  }
  r.run_means = std::move(means);
  const std::size_t cap = static_cast<std::size_t>(cfg.histogram_cap);
  for (std::size_t i = 0; i < N; ++i) {
    r.per_sensor_attempt_rate.push_back(acc.steps ? static_cast<double>(acc.attempts[i]) / acc.steps : 0.0);
    r.per_sensor_success_rate.push_back(acc.attempts[i] ? static_cast<double>(acc.successes[i]) / acc.attempts[i] : 0.0);
    r.aoi_histogram.emplace_back(acc.hist.begin() + static_cast<long>(i * cap),
                                 acc.hist.begin() + static_cast<long>((i + 1) * cap));
  }
  r.max_scheduled = acc.max_scheduled;
  r.time_per_decision_ns = acc.decisions ? acc.decide_ns / static_cast<double>(acc.decisions) : 0.0;
  return r;
}

SimReport simulate(const Scheduler& proto, const SimConfig& cfg, bool parallel, bool trajectory) {
  const long warmup = effective_warmup(cfg);
  if (!trajectory && cfg.metric == Metric::kEmpiricalSquaredError) {
    throw ConfigError("the empirical squared-error metric needs the trajectory simulator");
  }
  std::vector<TrajData> td;
  if (trajectory) td = trajectory_data(proto.sensors());
  const std::vector<TrajData>* tp = trajectory ? &td : nullptr;
  const std::size_t N = proto.sensors().size();
  std::vector<double> means(static_cast<std::size_t>(cfg.runs));
  Accum total(N, cfg.histogram_cap);
  if (!parallel) {
    for (long r = 0; r < cfg.runs; ++r) means[static_cast<std::size_t>(r)] = run_once(proto, cfg, warmup, r, total, tp);
    return finalize(proto, cfg, std::move(means), total);
  }
  std::exception_ptr failure;
#pragma omp parallel
  {
    Accum local(N, cfg.histogram_cap);
#pragma omp for schedule(dynamic, 8)
    for (long r = 0; r < cfg.runs; ++r) {
      try {
        means[static_cast<std::size_t>(r)] = run_once(proto, cfg, warmup, r, local, tp);
      } catch (...) {
#pragma omp critical(aoisched_sim_failure)
        if (!failure) failure = std::current_exception();
      }
    }
#pragma omp critical(aoisched_sim_merge)
    total.merge(local);
  }
  if (failure) std::rethrow_exception(failure);
  return finalize(proto, cfg, std::move(means), total);
}

}  // namespace

SimReport run_covariance_sim(const Scheduler& policy, const SimConfig& cfg) {
  return simulate(policy, cfg, true, false);
}

SimReport run_covariance_sim_serial(const Scheduler& policy, const SimConfig& cfg) {
  return simulate(policy, cfg, false, false);
}

SimReport run_trajectory_sim(const Scheduler& policy, const SimConfig& cfg) {
  return simulate(policy, cfg, true, true);
}

double measure_decision_time(const Scheduler& proto, long decisions, int batches, std::uint64_t seed) {
  if (decisions < 1 || batches < 1) throw ConfigError("decision timing needs positive counts");
  Scheduler sched = proto;
  const std::vector<Sensor>& sensors = sched.sensors();
  const std::size_t N = sensors.size();
  Rng chan = substream(seed, 0), pol = substream(seed, 1);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<SensorState> st(N);
  for (std::size_t i = 0; i < N; ++i) st[i].err_trace = sensors[i].trace_at(1);
  std::vector<int> chosen;
  std::vector<char> on(N);
  const long per_batch = std::max(1L, decisions / batches);
  std::vector<double> batch_ns;
  for (int b = 0; b < batches; ++b) {
    double ns = 0.0;
    for (long k = 0; k < per_batch; ++k) {
      const auto t0 = Clock::now();
      sched.decide(st, pol, chosen);
      ns += std::chrono::duration<double, std::nano>(Clock::now() - t0).count();
      std::fill(on.begin(), on.end(), 0);
      for (int i : chosen) on[static_cast<std::size_t>(i)] = 1;
      for (std::size_t i = 0; i < N; ++i) {
        const bool gamma = on[i] && unif(chan) < sensors[i].fn.p;
        st[i].delta = gamma ? 1 : std::min(st[i].delta + 1, INT_MAX / 2);
        st[i].err_trace = sensors[i].trace_at(st[i].delta);
      }
    }
    batch_ns.push_back(ns / static_cast<double>(per_batch));
  }
  std::nth_element(batch_ns.begin(), batch_ns.begin() + static_cast<long>(batch_ns.size() / 2), batch_ns.end());
  return batch_ns[batch_ns.size() / 2];
}

std::vector<TimingRow> measure_decision_times(const PlantGenSpec& gen, const std::vector<PolicySpec>& policies,
                                              const std::vector<int>& N_list, long decisions,
                                              std::uint64_t seed) {
  std::vector<TimingRow> rows;
  for (int N : N_list) {
    const auto sensors = std::make_shared<const std::vector<Sensor>>(make_sensors(generate_ensemble(gen, N, seed)));
    const int M = std::max(1, N / 2);
    for (const PolicySpec& ps : policies) {
      const Scheduler s(ps, sensors, M);
      rows.push_back({policy_name(ps.kind), N, measure_decision_time(s, decisions, 11, seed)});
    }
  }
  return rows;
}

std::string sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::kScale: return "scale";
    case SweepKind::kHeterogeneity: return "heterogeneity";
    case SweepKind::kChannel: return "channel";
  }
  return "unknown";
}

SweepSpec parse_sweep(std::string_view text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  const std::string bad = "invalid sweep '" + std::string(text) + "' (expected kind:lo:hi:count)";
  if (parts.size() != 4) throw ConfigError(bad);
  SweepSpec spec;
  if (parts[0] == "scale") spec.kind = SweepKind::kScale;
  else if (parts[0] == "heterogeneity") spec.kind = SweepKind::kHeterogeneity;
  else if (parts[0] == "channel") spec.kind = SweepKind::kChannel;
  else throw ConfigError(bad);
  double lo = 0.0, hi = 0.0;
  long count = 0;
  try {
    std::size_t used = 0;
    lo = std::stod(parts[1], &used);
    if (used != parts[1].size()) throw ConfigError(bad);
    hi = std::stod(parts[2], &used);
    if (used != parts[2].size()) throw ConfigError(bad);
    count = std::stol(parts[3], &used);
    if (used != parts[3].size()) throw ConfigError(bad);
  } catch (const std::logic_error&) {
    throw ConfigError(bad);
  }
  if (count < 1 || !(lo <= hi)) throw ConfigError(bad);
  for (long k = 0; k < count; ++k) {
    double v = count == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
    if (spec.kind == SweepKind::kScale) v = std::round(v);
    spec.values.push_back(v);
  }
  if (spec.kind == SweepKind::kChannel) {
    for (double v : spec.values) {
      if (!(v > 0.0 && v <= 1.0)) throw ConfigError("channel sweep values must lie in (0, 1]");
    }
  }
  if (spec.kind == SweepKind::kHeterogeneity) {
    for (double v : spec.values) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("heterogeneity sweep values must lie in [0, 1]");
    }
  }
  if (spec.kind == SweepKind::kScale) {
    for (double v : spec.values) {
      if (v < 1.0) throw ConfigError("scale sweep values must be >= 1");
    }
  }
  return spec;
}

int sweep_budget(const SweepSpec& spec, double value) {
  if (spec.kind == SweepKind::kScale) {
    return std::max(1, static_cast<int>(std::lround(value / spec.n_over_m)));
  }
  return spec.M;
}

std::vector<PlantModel> sweep_plants(const SweepSpec& spec, double value, const std::vector<PlantModel>& base) {
  switch (spec.kind) {
    case SweepKind::kScale:
      return generate_ensemble(spec.gen, static_cast<int>(value), spec.plant_seed);
    case SweepKind::kHeterogeneity: {
      std::vector<PlantModel> plants = base.empty() ? generate_ensemble(spec.gen, spec.N, spec.plant_seed) : base;
      const std::size_t distinct = static_cast<std::size_t>(std::lround(value * static_cast<double>(plants.size())));
      for (std::size_t i = std::max<std::size_t>(distinct, 1); i < plants.size(); ++i) plants[i] = plants[0];
      return plants;
    }
    case SweepKind::kChannel: {
      std::vector<PlantModel> plants = base.empty() ? generate_ensemble(spec.gen, spec.N, spec.plant_seed) : base;
      for (auto& p : plants) p.p = value;
      return plants;
    }
  }
  return {};
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, const std::vector<PolicySpec>& policies,
                                const SimConfig& cfg, const std::vector<PlantModel>& base) {
  if (policies.empty()) throw ConfigError("sweep needs at least one policy");
  std::vector<SweepRow> rows;
  for (double v : spec.values) {
    const auto sensors =
        std::make_shared<const std::vector<Sensor>>(make_sensors(sweep_plants(spec, v, base), spec.convention));
    const int M = sweep_budget(spec, v);
    for (const PolicySpec& ps : policies) {
      const Scheduler s(ps, sensors, M);
      rows.push_back({v, policy_name(ps.kind), run_covariance_sim(s, cfg)});
    }
  }
  return rows;
}

}  // namespace aoisched
