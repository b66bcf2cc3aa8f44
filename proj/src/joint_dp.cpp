#include "aoisched/joint_dp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "aoisched/errors.hpp"

namespace aoisched {

std::size_t DpInstance::states() const {
  std::size_t s = 1;
  for (int i = 0; i < sensors(); ++i) s *= static_cast<std::size_t>(delta_cap);
  return s;
}

DpInstance make_dp_instance(std::span<const Sensor> sensors, int M, int delta_cap, DpCost cost) {
  if (sensors.empty()) throw DomainError("dp: no sensors");
  if (M < 1) throw DomainError("dp: M must be >= 1");
  if (delta_cap < 2) throw DomainError("dp: delta_cap must be >= 2");
  if (sensors.size() > 20) throw ResourceError("dp: too many sensors for a bitmask action");
  DpInstance inst;
  inst.M = M;
  inst.delta_cap = delta_cap;
  for (const Sensor& s : sensors) {
    inst.p.push_back(s.fn.p);
    std::vector<double> c(static_cast<std::size_t>(delta_cap));
    for (int d = 1; d <= delta_cap; ++d) {
      c[static_cast<std::size_t>(d - 1)] = cost == DpCost::kAoiFunction ? f_value(s.fn, d) : s.trace_at(d);
    }
    inst.cost.push_back(std::move(c));
  }
  return inst;
}

std::uint32_t DpPolicyTable::lookup(std::span<const SensorState> states) const {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int i = 0; i < N; ++i) {
    idx += static_cast<std::size_t>(std::min(states[static_cast<std::size_t>(i)].delta, delta_cap) - 1) * stride;
    stride *= static_cast<std::size_t>(delta_cap);
  }
  return action[idx];
}

namespace {

struct Outcome {
  double prob;
  std::uint32_t reset;  // sensors whose packet got through
};

struct Action {
  std::uint32_t mask;
  std::vector<Outcome> outcomes;
};

// Shared precomputation for the Bellman sweeps.
struct Chain {
  int N;
  int cap;
  std::size_t S;
  std::vector<std::size_t> stride;
  std::vector<double> state_cost;
  std::vector<Action> actions;
};

Action make_action(const DpInstance& inst, std::uint32_t mask) {
  Action a{mask, {}};
  for (std::uint32_t sub = mask;; sub = (sub - 1) & mask) {
    double pr = 1.0;
    for (int i = 0; i < inst.sensors(); ++i) {
      if (!(mask >> i & 1u)) continue;
      pr *= (sub >> i & 1u) ? inst.p[static_cast<std::size_t>(i)] : 1.0 - inst.p[static_cast<std::size_t>(i)];
    }
    if (pr > 0.0) a.outcomes.push_back({pr, sub});
    if (sub == 0) break;
  }
  return a;
}

Chain make_chain(const DpInstance& inst, const DpOptions& opt) {
  const int N = inst.sensors();
  if (static_cast<int>(inst.cost.size()) != N) throw DimensionError("dp: cost table size mismatch");
  for (const auto& c : inst.cost) {
    if (static_cast<int>(c.size()) != inst.delta_cap) throw DimensionError("dp: cost row length mismatch");
  }
  for (double p : inst.p) {
    if (!(p > 0.0 && p <= 1.0)) throw DomainError("dp: p must lie in (0, 1]");
  }
  const double states_f = std::pow(static_cast<double>(inst.delta_cap), N);
  if (!(states_f <= static_cast<double>(opt.max_states))) {
    throw ResourceError("dp: " + std::to_string(inst.delta_cap) + "^" + std::to_string(N) +
                        " joint states exceed the budget of " + std::to_string(opt.max_states));
  }
  Chain ch{N, inst.delta_cap, inst.states(), {}, {}, {}};
  std::size_t st = 1;
  for (int i = 0; i < N; ++i) {
    ch.stride.push_back(st);
    st *= static_cast<std::size_t>(inst.delta_cap);
  }
  ch.state_cost.assign(ch.S, 0.0);
  for (std::size_t s = 0; s < ch.S; ++s) {
    std::size_t rem = s;
    double c = 0.0;
    for (int i = 0; i < N; ++i) {
      c += inst.cost[static_cast<std::size_t>(i)][rem % static_cast<std::size_t>(ch.cap)];
      rem /= static_cast<std::size_t>(ch.cap);
    }
    ch.state_cost[s] = c;
  }
  const int k = std::min(inst.M, N);
  for (std::uint32_t mask = 0; mask < (1u << N); ++mask) {
    if (std::popcount(mask) == k) ch.actions.push_back(make_action(inst, mask));
  }
  return ch;
}

// E[h(next) | s, a]
inline double expected_next(const Chain& ch, const Action& a, const int* d, std::size_t inc_all,
                            const std::vector<double>& h) {
  double acc = 0.0;
  for (const Outcome& o : a.outcomes) {
    std::size_t idx = inc_all;
    for (int i = 0; i < ch.N; ++i) {
      if (!(o.reset >> i & 1u)) continue;
      // undo the increment and send the age back to 1
      const std::size_t cur = static_cast<std::size_t>(d[i] - 1) * ch.stride[static_cast<std::size_t>(i)];
      const std::size_t inc = d[i] < ch.cap ? ch.stride[static_cast<std::size_t>(i)] : 0;
      idx -= cur + inc;
    }
    acc += o.prob * h[idx];
  }
  return acc;
}

inline std::size_t decode(const Chain& ch, std::size_t s, int* d) {
  std::size_t inc_all = s;
  for (int i = 0; i < ch.N; ++i) {
    d[i] = static_cast<int>(s % static_cast<std::size_t>(ch.cap)) + 1;
    s /= static_cast<std::size_t>(ch.cap);
    if (d[i] < ch.cap) inc_all += ch.stride[static_cast<std::size_t>(i)];
  }
  return inc_all;
}

// One Bellman sweep over [0, S). With `fixed` non-null, evaluates that policy.
void sweep_state(const Chain& ch, double tau, const std::vector<double>& h, std::vector<double>& th,
                 std::vector<std::uint32_t>& act, const std::vector<std::uint32_t>* fixed,
                 const std::vector<int>* fixed_ord, std::size_t s, double& lo, double& hi) {
  int d[32];
  const std::size_t inc_all = decode(ch, s, d);
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_a = 0;
  if (fixed) {
    best_a = static_cast<std::size_t>((*fixed_ord)[s]);
    best = expected_next(ch, ch.actions[best_a], d, inc_all, h);
  } else {
    for (std::size_t a = 0; a < ch.actions.size(); ++a) {
      const double v = expected_next(ch, ch.actions[a], d, inc_all, h);
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
  }
  th[s] = ch.state_cost[s] + tau * h[s] + (1.0 - tau) * best;
  act[s] = ch.actions[best_a].mask;
  const double diff = th[s] - h[s];
  lo = std::min(lo, diff);
  hi = std::max(hi, diff);
}

DpSolution run_rvi(const DpInstance& inst, const DpOptions& opt, bool parallel,
                   const std::vector<std::uint32_t>* fixed) {
  if (!(opt.tau > 0.0 && opt.tau < 1.0)) throw DomainError("dp: tau must lie in (0, 1)");
  const Chain ch = make_chain(inst, opt);
  std::vector<int> fixed_ord;
  if (fixed) {
    if (fixed->size() != ch.S) throw DimensionError("dp: policy table size mismatch");
    fixed_ord.resize(ch.S);
    for (std::size_t s = 0; s < ch.S; ++s) {
      auto it = std::find_if(ch.actions.begin(), ch.actions.end(),
                             [&](const Action& a) { return a.mask == (*fixed)[s]; });
      if (it == ch.actions.end()) throw DomainError("dp: policy table holds an infeasible action");
      fixed_ord[s] = static_cast<int>(it - ch.actions.begin());
    }
  }
  const long S = static_cast<long>(ch.S);
  std::vector<double> h(ch.S, 0.0), th(ch.S, 0.0);
  std::vector<std::uint32_t> act(ch.S, 0);

  DpSolution sol;
  double last_lo = 0.0, last_hi = 0.0, last_moved = 0.0;
  // Per-state gain estimates (Th - h)(s). They converge even when the span does not,
  // e.g. when the policy keeps several closed classes apart.
  std::vector<double> gain(ch.S, 0.0);
  for (long it = 1; it <= opt.max_iters; ++it) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    if (parallel) {
#pragma omp parallel for schedule(static) reduction(min : lo) reduction(max : hi)
      for (long s = 0; s < S; ++s) {
        sweep_state(ch, opt.tau, h, th, act, fixed, &fixed_ord, static_cast<std::size_t>(s), lo, hi);
      }
    } else {
      for (long s = 0; s < S; ++s) {
        sweep_state(ch, opt.tau, h, th, act, fixed, &fixed_ord, static_cast<std::size_t>(s), lo, hi);
      }
    }
    if (!std::isfinite(lo) || !std::isfinite(hi)) throw ConvergenceError("dp: non-finite Bellman update");
    last_lo = lo;
    last_hi = hi;
    double moved = 0.0, magnitude = 0.0;
    for (std::size_t s = 0; s < ch.S; ++s) {
      magnitude = std::max(magnitude, std::abs(th[s]));
      const double g = th[s] - h[s];
      moved = std::max(moved, std::abs(g - gain[s]));
      gain[s] = g;
    }
    last_moved = moved;
    const double ref = th[0];
    for (std::size_t s = 0; s < ch.S; ++s) h[s] = th[s] - ref;
    const double scale = std::max(1.0, std::abs(hi));
    const bool certified = hi - lo <= opt.tol_rel * scale;
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() * magnitude;
    if (certified || (it > 1 && moved <= std::max(opt.stall_tol * scale, noise))) {
      sol.lower = lo;
      sol.upper = hi;
      sol.iterations = it;
      sol.table = DpPolicyTable{ch.N, ch.cap, std::move(act), certified ? 0.5 * (lo + hi) : gain[0]};
      sol.relative_value = std::move(h);
      return sol;
    }
  }
  throw ConvergenceError("dp: relative value iteration did not converge within " +
                         std::to_string(opt.max_iters) + " sweeps (gain bounds " +
                         std::to_string(last_lo) + ", " + std::to_string(last_hi) + "; last gain change " +
                         std::to_string(last_moved) + ")");
}

}  // namespace

DpSolution dp_optimal_policy(const DpInstance& inst, const DpOptions& opt) {
  return run_rvi(inst, opt, true, nullptr);
}

DpSolution dp_optimal_policy_serial(const DpInstance& inst, const DpOptions& opt) {
  return run_rvi(inst, opt, false, nullptr);
}

double evaluate_policy_table(const DpInstance& inst, const std::vector<std::uint32_t>& action,
                             const DpOptions& opt) {
  return run_rvi(inst, opt, true, &action).table.average_cost;
}

std::vector<std::uint32_t> lightweight_policy_table(const DpInstance& inst, std::span<const AoiFunction> fns) {
  const int N = inst.sensors();
  if (static_cast<int>(fns.size()) != N) throw DimensionError("lightweight table: one AoiFunction per sensor");
  const std::size_t S = inst.states();
  std::vector<std::uint32_t> table(S);
  std::vector<double> score(static_cast<std::size_t>(N));
  std::vector<int> chosen;
  for (std::size_t s = 0; s < S; ++s) {
    std::size_t rem = s;
    for (int i = 0; i < N; ++i) {
      const int d = static_cast<int>(rem % static_cast<std::size_t>(inst.delta_cap)) + 1;
      rem /= static_cast<std::size_t>(inst.delta_cap);
      score[static_cast<std::size_t>(i)] = whittle_index(fns[static_cast<std::size_t>(i)], d);
    }
    select_top_m(score, inst.M, chosen);
    std::uint32_t mask = 0;
    for (int i : chosen) mask |= 1u << i;
    table[s] = mask;
  }
  return table;
}

}  // namespace aoisched
