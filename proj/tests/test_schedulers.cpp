#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "aoisched/bounds.hpp"
#include "aoisched/errors.hpp"
#include "aoisched/joint_dp.hpp"
#include "aoisched/schedulers.hpp"
#include "aoisched/single_sensor_mdp.hpp"
#include "fixtures.hpp"

using namespace aoisched;
using doctest::Approx;

namespace {

std::vector<SensorState> ages(std::initializer_list<int> ds) {
  std::vector<SensorState> s;
  for (int d : ds) s.push_back({d, 0.0});
  return s;
}

std::vector<int> ids(std::initializer_list<int> v) { return v; }

}  // namespace

TEST_SUITE("schedulers") {

TEST_CASE("top-M selection breaks ties by lowest index") {
  std::vector<int> out;
  const std::vector<double> s{3.0, 2.0};
  select_top_m(s, 1, out);
  CHECK(out == ids({0}));
  const std::vector<double> eq{1.0, 1.0, 1.0, 1.0};
  select_top_m(eq, 2, out);
  CHECK(out == ids({0, 1}));
  const std::vector<double> mixed{1.0, 5.0, 5.0, 7.0};
  select_top_m(mixed, 2, out);
  CHECK(out == ids({1, 3}));
  select_top_m(mixed, 10, out);
  CHECK(out.size() == 4);
}

TEST_CASE("lightweight schedule") {
  const std::vector<AoiFunction> homo(3, AoiFunction{1.5, 1.0, 0.8});
  CHECK(lightweight_schedule(ages({4, 2, 3}), homo, 1).scheduled == ids({0}));
  CHECK(lightweight_schedule(ages({2, 2, 2}), homo, 1).scheduled == ids({0}));
  // a sensor with a larger index wins even at a smaller age
  const std::vector<AoiFunction> het{{1.2, 1.0, 0.9}, {1.8, 5.0, 0.9}};
  CHECK(lightweight_schedule(ages({3, 2}), het, 1).scheduled == ids({1}));
  CHECK_THROWS_AS(lightweight_schedule(ages({1, 1}), std::vector<AoiFunction>{{2.0, 1.0, 0.3}, {1.5, 1.0, 0.9}}, 1),
                  StabilityError);
}

TEST_CASE("lightweight selection is invariant to a common beta scale") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ad(1, 12);
  for (int k = 0; k < 200; ++k) {
    std::vector<AoiFunction> f, g;
    std::vector<SensorState> st;
    for (int i = 0; i < 6; ++i) {
      f.push_back({1.05 + 0.6 * u(rng), 0.5 + 3 * u(rng), 0.7 + 0.3 * u(rng)});
      g.push_back(f.back());
      g.back().beta *= 42.0;
      st.push_back({ad(rng), 0.0});
    }
    CHECK(lightweight_schedule(st, f, 2).scheduled == lightweight_schedule(st, g, 2).scheduled);
  }
}

TEST_CASE("AoI greedy and AoI Whittle") {
  CHECK(aoi_greedy_schedule(ages({4, 2, 3}), 2).scheduled == ids({0, 2}));
  CHECK(aoi_greedy_schedule(ages({5, 5, 5}), 1).scheduled == ids({0}));
  CHECK(aoi_greedy_schedule(ages({1, 7, 2}), 3).scheduled == ids({0, 1, 2}));
  CHECK(aoi_whittle_score(1.0, 3) == Approx(6.0));
  const std::vector<double> probs(4, 0.7);
  for (int k = 0; k < 20; ++k) {
    const auto st = ages({1 + k % 5, 3, 2 + k % 3, 4});
    CHECK(aoi_whittle_schedule(st, probs, 2).scheduled == aoi_greedy_schedule(st, 2).scheduled);
  }
}

TEST_CASE("VoI greedy") {
  const Sensor lone = make_sensor(fixtures::scalar_plant(1.2, 1.0, 1.0, 1.0, 0.9));
  const std::vector<Sensor> one{lone};
  CHECK(voi_greedy_schedule(ages({1}), one, 1).scheduled == ids({0}));
  const std::vector<Sensor> twins{lone, lone};
  CHECK(voi_greedy_schedule(ages({3, 1}), twins, 1).scheduled == ids({0}));
  // fast-diverging, reliable sensor versus a slow, lossy one at the same age
  const Sensor fast = make_sensor(fixtures::scalar_plant(1.3, 1.0, 1.0, 1.0, 0.95));
  const Sensor slow = make_sensor(fixtures::scalar_plant(1.05, 1.0, 1.0, 1.0, 0.6));
  CHECK(voi_greedy_score(fast, 3) > voi_greedy_score(slow, 3));
  const std::vector<Sensor> pair{slow, fast};
  CHECK(voi_greedy_schedule(ages({3, 3}), pair, 1).scheduled == ids({1}));
}

TEST_CASE("VoI Whittle index reduces to the closed form for a geometric trace") {
  // q = 0 limit is excluded by the model, so use an abstract sensor whose trace is f itself
  const AoiFunction f{1.44, 1.0, 0.9};
  const Sensor s = make_abstract_sensor(f);
  const VoiIndexTable table(s, 200);
  for (int d = 1; d <= 20; ++d) CHECK(table.at(d) == Approx(whittle_index(f, d)).epsilon(1e-6));
  CHECK(voi_whittle_index_uncached(s, 5, 200) == table.at(5));
}

TEST_CASE("VoI Whittle index on plants: monotone, cached values reproducible") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Sensor s = make_sensor(generate_plant(PlantGenSpec{}, seed));
    const VoiIndexTable table(s, 100);
    for (int d = 1; d < 20; ++d) CHECK(table.at(d + 1) > table.at(d));
    for (int d = 50; d < 70; ++d) CHECK(table.at(d + 1) > table.at(d));
    CHECK(table.at(7) == table.at(7));
    CHECK(voi_whittle_index_uncached(s, 7, 100) == table.at(7));
  }
}

TEST_CASE("randomized stationary schedule matches its marginals") {
  Rng rng(9);
  auto freq = [&](const std::vector<double>& q, int M, int draws) {
    std::vector<double> c(q.size(), 0.0);
    for (int k = 0; k < draws; ++k) {
      const Decision d = randomized_stationary_schedule(q, M, rng);
      CHECK(static_cast<int>(d.scheduled.size()) <= M);
      for (int i : d.scheduled) c[static_cast<std::size_t>(i)] += 1.0 / draws;
    }
    return c;
  };
  const auto a = freq({0.5, 0.5}, 1, 100000);
  CHECK(std::abs(a[0] - 0.5) < 0.01);
  CHECK(std::abs(a[1] - 0.5) < 0.01);
  const auto b = freq({1.0}, 1, 100);
  CHECK(b[0] == Approx(1.0));
  const auto c = freq({0.9, 0.6, 0.5}, 2, 100000);
  CHECK(std::abs(c[0] - 0.9) < 0.01);
  CHECK(std::abs(c[1] - 0.6) < 0.01);
  CHECK(std::abs(c[2] - 0.5) < 0.01);
  CHECK_THROWS_AS(randomized_stationary_schedule(std::vector<double>{0.9, 0.9}, 1, rng), DomainError);
  CHECK_THROWS_AS(randomized_stationary_schedule(std::vector<double>{0.0, 0.5}, 1, rng), DomainError);
}

TEST_CASE("round robin") {
  int cursor = 0;
  CHECK(round_robin_schedule(cursor, 4, 2).scheduled == ids({0, 1}));
  CHECK(round_robin_schedule(cursor, 4, 2).scheduled == ids({2, 3}));
  CHECK(round_robin_schedule(cursor, 4, 2).scheduled == ids({0, 1}));
  cursor = 0;
  CHECK(round_robin_schedule(cursor, 3, 2).scheduled == ids({0, 1}));
  CHECK(round_robin_schedule(cursor, 3, 2).scheduled == ids({0, 2}));
  cursor = 0;
  // lcm(3, 2) / 2 = 3 decisions bring the cursor back
  for (int k = 0; k < 3; ++k) round_robin_schedule(cursor, 3, 2);
  CHECK(cursor == 0);
}

TEST_CASE("policy names parse") {
  for (const char* n : {"lightweight", "aoi-greedy", "voi-greedy", "aoi-whittle", "voi-whittle", "round-robin",
                        "randomized", "dp"}) {
    CHECK(policy_name(parse_policy(n).kind) == n);
  }
  CHECK_THROWS_AS(parse_policy("fastest"), ConfigError);
}

TEST_CASE("index policies coincide on homogeneous ensembles") {
  const PlantModel base = generate_plant(PlantGenSpec{}, 77);
  const auto sensors = std::make_shared<const std::vector<Sensor>>(make_sensors(std::vector<PlantModel>(5, base)));
  std::vector<Scheduler> pols;
  for (PolicyKind k : {PolicyKind::kLightweight, PolicyKind::kAoiGreedy, PolicyKind::kAoiWhittle,
                       PolicyKind::kVoiWhittle, PolicyKind::kVoiGreedy}) {
    PolicySpec ps;
    ps.kind = k;
    pols.emplace_back(ps, sensors, 2);
  }
  Rng rng(1), chan(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto st = ages({5, 1, 3, 2, 4});
  for (int t = 0; t < 500; ++t) {
    const Decision ref = pols[0].decide(st, rng);
    for (std::size_t k = 1; k < pols.size(); ++k) CHECK(pols[k].decide(st, rng).scheduled == ref.scheduled);
    std::vector<char> on(5, 0);
    for (int i : ref.scheduled) on[static_cast<std::size_t>(i)] = 1;
    for (std::size_t i = 0; i < 5; ++i) st[i].delta = aoi_step(st[i].delta, on[i] && u(chan) < base.p);
  }
}

TEST_CASE("every scheduler respects the channel budget") {
  const auto sensors = std::make_shared<const std::vector<Sensor>>(make_sensors(generate_ensemble(PlantGenSpec{}, 4, 5)));
  Rng rng(2);
  for (PolicyKind k : {PolicyKind::kLightweight, PolicyKind::kAoiGreedy, PolicyKind::kVoiGreedy,
                       PolicyKind::kAoiWhittle, PolicyKind::kVoiWhittle, PolicyKind::kRoundRobin,
                       PolicyKind::kRandomized, PolicyKind::kDp}) {
    PolicySpec ps;
    ps.kind = k;
    ps.dp_delta_cap = 8;
    Scheduler s(ps, sensors, 2);
    for (int t = 0; t < 200; ++t) {
      const auto st = ages({1 + t % 7, 1 + t % 3, 2 + t % 11, 1 + (t * 5) % 9});
      const Decision d = s.decide(st, rng);
      CHECK(d.scheduled.size() <= 2);
      CHECK(std::is_sorted(d.scheduled.begin(), d.scheduled.end()));
      if (k != PolicyKind::kRandomized) CHECK(d.scheduled.size() == 2);
    }
  }
}

}

TEST_SUITE("joint_dp") {

TEST_CASE("single sensor DP matches the geometric closed form") {
  const std::vector<Sensor> one{make_abstract_sensor({1.44, 1.0, 0.9})};
  const DpInstance inst = make_dp_instance(one, 1, 25, DpCost::kAoiFunction);
  const DpSolution sol = dp_optimal_policy(inst);
  const double oracle = 1.44 * 0.9 / (1.0 - 1.44 * 0.1);
  CHECK(oracle == Approx(1.51402).epsilon(1e-5));
  CHECK(sol.table.average_cost == Approx(oracle).epsilon(1e-8));
  CHECK(sol.lower <= sol.upper);
}

TEST_CASE("N = M DP is a product of independent geometric chains") {
  const std::vector<Sensor> s{make_abstract_sensor({1.44, 1.0, 0.9}), make_abstract_sensor({1.2, 2.0, 0.7}),
                              make_abstract_sensor({1.6, 0.5, 0.95})};
  const DpInstance inst = make_dp_instance(s, 3, 25, DpCost::kAoiFunction);
  double oracle = 0.0;
  for (const auto& x : s) oracle += x.fn.beta * x.fn.alpha * x.fn.p / (1.0 - x.fn.alpha * (1.0 - x.fn.p));
  CHECK(dp_optimal_policy(inst).table.average_cost == Approx(oracle).epsilon(1e-6));
}

TEST_CASE("DP lower-bounds the lightweight policy, serial and OpenMP kernels agree bitwise") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 3, seed));
    for (DpCost cost : {DpCost::kAoiFunction, DpCost::kTraceOfP}) {
      const DpInstance inst = make_dp_instance(sensors, 1, 15, cost);
      const DpSolution par = dp_optimal_policy(inst);
      const DpSolution ser = dp_optimal_policy_serial(inst);
      CHECK(par.table.average_cost == ser.table.average_cost);
      CHECK(par.table.action == ser.table.action);
      CHECK(par.relative_value == ser.relative_value);
      std::vector<AoiFunction> fns;
      for (const auto& s : sensors) fns.push_back(s.fn);
      const double light = evaluate_policy_table(inst, lightweight_policy_table(inst, fns));
      CHECK(light >= par.table.average_cost * (1 - 1e-8));
      // evaluating the optimal table reproduces its own cost
      CHECK(evaluate_policy_table(inst, par.table.action) == Approx(par.table.average_cost).epsilon(1e-7));
    }
  }
}

TEST_CASE("DP resource budget") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 5, 1));
  const DpInstance inst = make_dp_instance(sensors, 2, 30, DpCost::kAoiFunction);
  DpOptions opt;
  opt.max_states = 1000000;
  CHECK_THROWS_AS(dp_optimal_policy(inst, opt), ResourceError);
}

}
