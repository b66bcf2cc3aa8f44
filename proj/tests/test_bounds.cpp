#include <doctest.h>

#include <cmath>
#include <limits>

#include "aoisched/bounds.hpp"
#include "aoisched/errors.hpp"
#include "fixtures.hpp"

using namespace aoisched;
using doctest::Approx;

namespace {

std::vector<AoiFunction> random_fns(Rng& rng, int N) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<AoiFunction> f;
  for (int i = 0; i < N; ++i) f.push_back({1.1 + 0.6 * u(rng), 0.5 + 3 * u(rng), 0.75 + 0.25 * u(rng)});
  return f;
}

// Exhaustive threshold search without any pruning, over a generous box.
double brute_force_lower(const std::vector<AoiFunction>& fns, int M, int box) {
  const std::size_t N = fns.size();
  std::vector<int> T(N, 1);
  double best = std::numeric_limits<double>::infinity();
  for (;;) {
    double cost = 0.0, rate = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      cost += relaxed_sensor_cost(fns[i], T[i]);
      rate += threshold_transmission_rate(fns[i].p, {T[i]});
    }
    if (rate <= M + 1e-12) best = std::min(best, cost);
    std::size_t k = 0;
    while (k < N && ++T[k] > box) T[k++] = 1;
    if (k == N) break;
  }
  return best;
}

}  // namespace

TEST_SUITE("bounds") {

TEST_CASE("randomized q examples") {
  const std::vector<AoiFunction> twins(2, AoiFunction{1.44, 1.0, 0.9});
  const RandomizedQ a = optimize_randomized_q(twins, 1);
  CHECK(a.q[0] == Approx(0.5).epsilon(1e-9));
  CHECK(a.q[1] == Approx(0.5).epsilon(1e-9));
  const RandomizedQ b = optimize_randomized_q(std::vector<AoiFunction>{{1.44, 1.0, 0.9}}, 1);
  CHECK(b.q[0] == 1.0);
  CHECK_THROWS_AS(optimize_randomized_q(std::vector<AoiFunction>(4, AoiFunction{2.0, 1.0, 0.6}), 1), NoBoundError);
}

TEST_CASE("randomized q matches a grid-search oracle") {
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const auto fns = random_fns(rng, 2);
    if (!upper_bound_exists(fns, 1)) continue;
    const RandomizedQ rq = optimize_randomized_q(fns, 1);
    double best = std::numeric_limits<double>::infinity(), best_q = 0.0;
    for (int s = 1; s < 10000; ++s) {
      const double q0 = s * 1e-4;
      const std::vector<double> q{q0, 1.0 - q0};
      if (!(fns[0].alpha * (1 - fns[0].p * q[0]) < 1) || !(fns[1].alpha * (1 - fns[1].p * q[1]) < 1)) continue;
      const double v = randomized_objective(fns, q);
      if (v < best) {
        best = v;
        best_q = q0;
      }
    }
    CHECK(std::abs(rq.q[0] - best_q) < 1e-3);
    CHECK(rq.objective <= best + 1e-8);
  }
}

TEST_CASE("randomized q satisfies complementary slackness") {
  Rng rng(6);
  for (int k = 0; k < 30; ++k) {
    const auto fns = random_fns(rng, 5);
    if (!upper_bound_exists(fns, 2)) continue;
    const RandomizedQ rq = optimize_randomized_q(fns, 2);
    double sum = 0.0;
    std::vector<double> slopes;
    for (std::size_t i = 0; i < fns.size(); ++i) {
      const auto& f = fns[i];
      sum += rq.q[i];
      CHECK(rq.q[i] > 0.0);
      CHECK(rq.q[i] <= 1.0);
      CHECK(f.alpha * (1 - f.p * rq.q[i]) < 1.0);
      const double den = 1 - f.alpha + f.alpha * f.p * rq.q[i];
      if (rq.q[i] < 1.0) slopes.push_back(f.beta * (f.alpha - 1) * f.alpha * f.p / (den * den));
    }
    CHECK(sum == Approx(2.0).epsilon(1e-9));
    for (double s : slopes) CHECK(s == Approx(slopes.front()).epsilon(1e-6));
  }
}

TEST_CASE("relaxed lower bound examples") {
  const LowerBound lb = lower_bound_J(std::vector<AoiFunction>{{2.0, 1.0, 1.0}}, 1);
  CHECK(lb.thresholds == std::vector<int>{1});
  CHECK(lb.value == Approx(2.0).epsilon(1e-12));
  const std::vector<double> caps = threshold_search_caps(std::vector<AoiFunction>{{1.5, 1.0, 0.7}}, 1);
  CHECK(caps[0] == Approx(2.0).epsilon(1e-12));
  CHECK_THROWS_AS(lower_bound_J(std::vector<AoiFunction>{{2.0, 1.0, 0.4}}, 1), StabilityError);
}

TEST_CASE("per-sensor relaxed cost equals the threshold average cost and increases") {
  Rng rng(7);
  for (int k = 0; k < 50; ++k) {
    const auto f = random_fns(rng, 1)[0];
    for (int T = 1; T < 40; ++T) {
      CHECK(relaxed_sensor_cost(f, T) == Approx(threshold_average_cost(f, {T}, 0.0)).epsilon(1e-10));
      CHECK(relaxed_sensor_cost(f, T + 1) >= relaxed_sensor_cost(f, T));
    }
  }
}

TEST_CASE("branch and bound equals brute force and respects the search caps") {
  Rng rng(8);
  for (int k = 0; k < 15; ++k) {
    const int N = 2 + k % 3;
    const int M = 1 + k % 2;
    const auto fns = random_fns(rng, N);
    const LowerBound lb = lower_bound_J(fns, M);
    CHECK(lb.value == Approx(brute_force_lower(fns, M, 30)).epsilon(1e-12));
    CHECK(lb.dual_value <= lb.value * (1 + 1e-12));
    if (N > M) {
      REQUIRE(lb.search_caps.size() == fns.size());
      for (std::size_t i = 0; i < fns.size(); ++i) CHECK(lb.thresholds[i] <= lb.search_caps[i] + 1e-9);
    }
  }
}

TEST_CASE("dual bound for larger ensembles is feasible and below the thresholds' cost") {
  Rng rng(9);
  const auto fns = random_fns(rng, 9);
  const LowerBound lb = lower_bound_J(fns, 3);
  CHECK_FALSE(lb.exhaustive);
  double cost = 0.0, rate = 0.0;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    cost += relaxed_sensor_cost(fns[i], lb.thresholds[i]);
    rate += threshold_transmission_rate(fns[i].p, {lb.thresholds[i]});
  }
  CHECK(rate <= 3 + 1e-9);
  CHECK(lb.value <= cost);
}

TEST_CASE("upper bound worked example") {
  const std::vector<AoiFunction> one{{1.44, 1.0, 0.9}};
  const std::vector<double> q{1.0};
  const UpperBound ub = upper_bound_J(one, 1, q);
  const auto& t = ub.terms[0];
  CHECK(t.l1 == Approx(0.9 / 0.856).epsilon(1e-12));
  CHECK(t.l1 == Approx(1.05140).epsilon(1e-5));
  CHECK(t.l2 == Approx(-3.32413).epsilon(1e-5));
  CHECK(t.eta == Approx(0.9).epsilon(1e-5));
  CHECK(t.S == Approx(2.99686).epsilon(1e-5));
  CHECK(t.delta_tilde == 4);
  CHECK(ub.C == Approx(0.9 * 4 * std::pow(1.44, 4)).epsilon(1e-12));
  CHECK(ub.value == Approx(20.781).epsilon(1e-4));
  CHECK(ub.value >= lower_bound_J(one, 1).value);
  CHECK_THROWS_AS(upper_bound_J(std::vector<AoiFunction>(4, AoiFunction{2.0, 1.0, 0.6}), 1,
                                std::vector<double>(4, 0.25)),
                  NoBoundError);
}

TEST_CASE("stability verdicts") {
  CHECK(necessary_stability(1.44, 0.5));
  CHECK_FALSE(necessary_stability(1.44, 0.2));
  CHECK(necessary_stability(100.0, 1.0));
  CHECK(sufficient_stability(1.44, 0.9, 0.5));
  CHECK(sufficient_stability(1.44, 0.5, 1.0) == necessary_stability(1.44, 0.5));
  CHECK(sufficient_stability(1.44, 0.2, 1.0) == necessary_stability(1.44, 0.2));
  Rng rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 1000; ++k) {
    const double a = 1 + 2 * u(rng), p = u(rng), q = u(rng);
    if (sufficient_stability(a, p, q)) CHECK(necessary_stability(a, p));
  }
  const PlantModel pm = fixtures::scalar_plant(1.2, 1.0, 1.0, 1.0, 0.5);
  CHECK(necessary_stability(pm));
  CHECK(sufficient_stability(pm, 1.0));
}

TEST_CASE("origin parameters") {
  const PlantModel sc = fixtures::scalar_plant(1.2, 1.0, 1.0, 1.0);
  const SteadyStateFilter ss = steady_state_filter(sc);
  const OriginParams op = origin_params(sc, ss);
  CHECK(op.zeta == Approx(1.0).epsilon(1e-12));
  CHECK(op.alpha_hat == Approx(1.44).epsilon(1e-12));
  CHECK(op.beta_hat == Approx(std::min(1.0, ss.posterior(0, 0))).epsilon(1e-12));
  PlantModel diag;
  diag.A = Matrix::Zero(2, 2);
  diag.A(0, 0) = 1.2;
  diag.A(1, 1) = -0.5;
  diag.C = Matrix::Identity(2, 2);
  diag.Q = Matrix::Identity(2, 2);
  diag.R = Matrix::Identity(2, 2);
  CHECK(origin_params(diag, steady_state_filter(diag)).zeta == Approx(1.0).epsilon(1e-12));
  PlantModel jordan = diag;
  jordan.A << 1.2, 1.0, 0.0, 1.2;
  CHECK_THROWS_AS(origin_params(jordan, steady_state_filter(jordan)), UnsupportedError);
  for (std::uint64_t s = 0; s < 20; ++s) {
    PlantGenSpec g;
    g.n = 2;
    g.m = 2;
    const PlantModel pm = generate_plant(g, s);
    const OriginParams o = origin_params(pm, steady_state_filter(pm));
    CHECK(o.zeta <= 1.0 + 1e-12);
    CHECK(o.zeta > 0.0);
  }
}

TEST_CASE("origin lower bound sits below the Tr(P) of always-transmit for N = M") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 3, 4));
  const OriginLowerBound ob = lower_bound_J_origin(sensors, 3);
  double exact = 0.0;
  for (const auto& s : sensors) {
    // geometric AoI with parameter p under always-transmit
    for (int d = 1; d < 400 && std::isfinite(s.trace_at(d)); ++d) exact += s.fn.p * std::pow(1 - s.fn.p, d - 1) * s.trace_at(d);
  }
  CHECK(ob.value <= exact);
}

TEST_CASE("bounds report") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 4, 12));
  const BoundsReport rep = compute_bounds(sensors, 2);
  REQUIRE(rep.lower_J);
  if (rep.upper_J) CHECK(*rep.lower_J <= *rep.upper_J);
  const auto j = to_json(rep);
  CHECK(j["schema_version"] == 1);
  CHECK(j["sensors"].size() == 4);
  CHECK(summarize(rep).find("lower_J") != std::string::npos);

  const std::vector<Sensor> shaky{make_abstract_sensor({2.0, 1.0, 0.4})};
  const BoundsReport bad = compute_bounds(shaky, 1);
  CHECK_FALSE(bad.necessary_stable[0]);
  CHECK_FALSE(bad.lower_J);
  CHECK_FALSE(bad.notes.empty());
}

}
