#include "aoisched/schedulers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aoisched/bounds.hpp"
#include "aoisched/errors.hpp"
#include "aoisched/joint_dp.hpp"
#include "aoisched/single_sensor_mdp.hpp"

namespace aoisched {

namespace {

struct NamedKind {
  const char* name;
  PolicyKind kind;
};

constexpr NamedKind kNames[] = {
    {"lightweight", PolicyKind::kLightweight}, {"aoi-greedy", PolicyKind::kAoiGreedy},
    {"voi-greedy", PolicyKind::kVoiGreedy},    {"aoi-whittle", PolicyKind::kAoiWhittle},
    {"voi-whittle", PolicyKind::kVoiWhittle},  {"round-robin", PolicyKind::kRoundRobin},
    {"randomized", PolicyKind::kRandomized},   {"dp", PolicyKind::kDp},
};

void check_budget(std::size_t N, int M) {
  if (N == 0) throw DomainError("scheduler: no sensors");
  if (M < 1) throw DomainError("scheduler: M must be >= 1");
}

Decision from_scores(std::span<const double> score, int M) {
  Decision d;
  select_top_m(score, M, d.scheduled);
  return d;
}

}  // namespace

PolicySpec parse_policy(std::string_view name) {
  for (const auto& nk : kNames) {
    if (name == nk.name) {
      PolicySpec s;
      s.kind = nk.kind;
      return s;
    }
  }
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected lightweight, aoi-greedy, voi-greedy, aoi-whittle, voi-whittle, "
                    "round-robin, randomized or dp)");
}

std::string policy_name(PolicyKind kind) {
  for (const auto& nk : kNames) {
    if (nk.kind == kind) return nk.name;
  }
  return "unknown";
}

void select_top_m(std::span<const double> score, int M, std::vector<int>& out) {
  const int N = static_cast<int>(score.size());
  const int k = std::clamp(M, 0, N);
  out.resize(static_cast<std::size_t>(N));
  std::iota(out.begin(), out.end(), 0);
  std::partial_sort(out.begin(), out.begin() + k, out.end(), [&](int a, int b) {
    const double sa = score[static_cast<std::size_t>(a)], sb = score[static_cast<std::size_t>(b)];
    return sa > sb || (sa == sb && a < b);
  });
  out.resize(static_cast<std::size_t>(k));
  std::sort(out.begin(), out.end());
}

Decision lightweight_schedule(std::span<const SensorState> states, std::span<const AoiFunction> fns, int M) {
  check_budget(states.size(), M);
  if (fns.size() != states.size()) throw DimensionError("lightweight_schedule: one AoiFunction per sensor");
  std::vector<double> score(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) score[i] = whittle_index(fns[i], states[i].delta);
  return from_scores(score, M);
}

Decision aoi_greedy_schedule(std::span<const SensorState> states, int M) {
  check_budget(states.size(), M);
  std::vector<double> score(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) score[i] = states[i].delta;
  return from_scores(score, M);
}

double voi_greedy_score(const Sensor& sensor, int delta) {
  return sensor.fn.p * (sensor.trace_at(delta + 1) - sensor.trace_at(1));
}

Decision voi_greedy_schedule(std::span<const SensorState> states, std::span<const Sensor> sensors, int M) {
  check_budget(states.size(), M);
  if (sensors.size() != states.size()) throw DimensionError("voi_greedy_schedule: one sensor per state");
  std::vector<double> score(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) score[i] = voi_greedy_score(sensors[i], states[i].delta);
  return from_scores(score, M);
}

double aoi_whittle_score(double p, int delta) {
  const double d = delta;
  return p * d * (d + 2.0 / p - 1.0) / 2.0;
}

Decision aoi_whittle_schedule(std::span<const SensorState> states, std::span<const double> probs, int M) {
  check_budget(states.size(), M);
  if (probs.size() != states.size()) throw DimensionError("aoi_whittle_schedule: one p per sensor");
  std::vector<double> score(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) score[i] = aoi_whittle_score(probs[i], states[i].delta);
  return from_scores(score, M);
}

namespace {

std::vector<double> voi_costs(const Sensor& sensor, int delta_cap) {
  std::vector<double> cost;
  if (sensor.has_plant()) {
    cost = error_trace_table(*sensor.plant, *sensor.filter, delta_cap, sensor.convention);
  } else {
    for (int d = 1; d <= delta_cap; ++d) cost.push_back(f_value(sensor.fn, d));
  }
  return cost;
}

double extrapolate(double last, double ratio, int steps) {
  return last * std::pow(ratio, static_cast<double>(steps));
}

}  // namespace

VoiIndexTable::VoiIndexTable(const Sensor& sensor, int delta_cap) {
  if (delta_cap < 6) throw DomainError("VoI index: delta_cap must be >= 6");
  const std::vector<double> cost = voi_costs(sensor, delta_cap);
  const int direct = delta_cap / 2;
  for (int d = 1; d <= direct; ++d) direct_.push_back(numeric_whittle_index(cost, sensor.fn.p, d));
  const double a = direct_[direct_.size() - 2], b = direct_.back();
  ratio_ = a > 0.0 && b > a ? b / a : 1.0;
}

double VoiIndexTable::at(int delta) const {
  if (delta < 1) throw DomainError("VoI index: delta must be >= 1");
  const int n = direct_limit();
  if (delta <= n) return direct_[static_cast<std::size_t>(delta - 1)];
  return extrapolate(direct_.back(), ratio_, delta - n);
}

double voi_whittle_index_uncached(const Sensor& sensor, int delta, int delta_cap) {
  if (delta < 1) throw DomainError("VoI index: delta must be >= 1");
  const std::vector<double> cost = voi_costs(sensor, delta_cap);
  const int direct = delta_cap / 2;
  if (delta <= direct) return numeric_whittle_index(cost, sensor.fn.p, delta);
  const double a = numeric_whittle_index(cost, sensor.fn.p, direct - 1);
  const double b = numeric_whittle_index(cost, sensor.fn.p, direct);
  return extrapolate(b, a > 0.0 && b > a ? b / a : 1.0, delta - direct);
}

Decision voi_whittle_schedule(std::span<const SensorState> states, std::span<const Sensor> sensors, int M,
                              int delta_cap) {
  check_budget(states.size(), M);
  if (sensors.size() != states.size()) throw DimensionError("voi_whittle_schedule: one sensor per state");
  std::vector<double> score(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    score[i] = voi_whittle_index_uncached(sensors[i], states[i].delta, delta_cap);
  }
  return from_scores(score, M);
}

Decision randomized_stationary_schedule(std::span<const double> q, int M, Rng& rng) {
  if (M < 1) throw DomainError("randomized schedule: M must be >= 1");
  double total = 0.0;
  for (double qi : q) {
    if (!(qi > 0.0 && qi <= 1.0)) throw DomainError("randomized schedule: every q_i must lie in (0, 1]");
    total += qi;
  }
  if (total > M + 1e-9) throw DomainError("randomized schedule: sum of q exceeds M");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  // Sensor i owns [c_{i-1}, c_i); the points u, u+1, u+2, ... pick at most one point each.
  double point = unif(rng);
  double cum = 0.0;
  Decision d;
  for (std::size_t i = 0; i < q.size(); ++i) {
    const double next = cum + q[i];
    if (point < next) {
      d.scheduled.push_back(static_cast<int>(i));
      point += 1.0;
    }
    cum = next;
  }
  if (static_cast<int>(d.scheduled.size()) > M) d.scheduled.resize(static_cast<std::size_t>(M));
  return d;
}

Decision round_robin_schedule(int& cursor, int N, int M) {
  check_budget(static_cast<std::size_t>(std::max(N, 0)), M);
  const int k = std::min(M, N);
  Decision d;
  for (int j = 0; j < k; ++j) d.scheduled.push_back((cursor + j) % N);
  std::sort(d.scheduled.begin(), d.scheduled.end());
  cursor = (cursor + k) % N;
  return d;
}

Scheduler::Scheduler(PolicySpec spec, const std::vector<Sensor>& sensors, int M)
    : Scheduler(std::move(spec), std::make_shared<const std::vector<Sensor>>(sensors), M) {}

Scheduler::Scheduler(PolicySpec spec, std::shared_ptr<const std::vector<Sensor>> sensors, int M)
    : spec_(std::move(spec)), sensors_(std::move(sensors)), M_(M) {
  check_budget(sensors_->size(), M_);
  const std::size_t N = sensors_->size();
  score_.resize(N);
  std::vector<AoiFunction> fns;
  for (const Sensor& s : *sensors_) fns.push_back(s.fn);
  switch (spec_.kind) {
    case PolicyKind::kLightweight:
      for (const auto& f : fns) require_stable(f);
      break;
    case PolicyKind::kVoiWhittle:
      if (spec_.voi_cache) {
        auto tables = std::make_shared<std::vector<VoiIndexTable>>();
        for (const Sensor& s : *sensors_) tables->emplace_back(s, spec_.voi_delta_cap);
        voi_tables_ = std::move(tables);
      }
      break;
    case PolicyKind::kRandomized:
      if (spec_.q.empty()) spec_.q = optimize_randomized_q(fns, M_).q;
      if (spec_.q.size() != N) throw DimensionError("randomized policy: one q per sensor");
      break;
    case PolicyKind::kDp: {
      const DpInstance inst = make_dp_instance(*sensors_, M_, spec_.dp_delta_cap, spec_.dp_cost);
      dp_ = std::make_shared<const DpPolicyTable>(dp_optimal_policy(inst).table);
      break;
    }
    default:
      break;
  }
}

double Scheduler::dp_average_cost() const {
  if (!dp_) throw DomainError("dp_average_cost: not a DP scheduler");
  return dp_->average_cost;
}

void Scheduler::decide(std::span<const SensorState> states, Rng& rng, std::vector<int>& out) {
  const std::vector<Sensor>& sensors = *sensors_;
  const std::size_t N = sensors.size();
  if (states.size() != N) throw DimensionError("scheduler: state vector size mismatch");
  switch (spec_.kind) {
    case PolicyKind::kLightweight:
      for (std::size_t i = 0; i < N; ++i) score_[i] = whittle_index(sensors[i].fn, states[i].delta);
      break;
    case PolicyKind::kAoiGreedy:
      for (std::size_t i = 0; i < N; ++i) score_[i] = states[i].delta;
      break;
    case PolicyKind::kVoiGreedy:
      for (std::size_t i = 0; i < N; ++i) score_[i] = voi_greedy_score(sensors[i], states[i].delta);
      break;
    case PolicyKind::kAoiWhittle:
      for (std::size_t i = 0; i < N; ++i) score_[i] = aoi_whittle_score(sensors[i].fn.p, states[i].delta);
      break;
    case PolicyKind::kVoiWhittle:
      for (std::size_t i = 0; i < N; ++i) {
        score_[i] = voi_tables_ ? (*voi_tables_)[i].at(states[i].delta)
                                : voi_whittle_index_uncached(sensors[i], states[i].delta, spec_.voi_delta_cap);
      }
      break;
    case PolicyKind::kRoundRobin:
      out = round_robin_schedule(cursor_, static_cast<int>(N), M_).scheduled;
      return;
    case PolicyKind::kRandomized:
      out = randomized_stationary_schedule(spec_.q, M_, rng).scheduled;
      return;
    case PolicyKind::kDp: {
      const std::uint32_t mask = dp_->lookup(states);
      out.clear();
      for (std::size_t i = 0; i < N; ++i) {
        if (mask >> i & 1u) out.push_back(static_cast<int>(i));
      }
      return;
    }
  }
  select_top_m(score_, M_, out);
}

Decision Scheduler::decide(std::span<const SensorState> states, Rng& rng) {
  Decision d;
  decide(states, rng, d.scheduled);
  return d;
}

}  // namespace aoisched
