#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "aoisched/errors.hpp"
#include "aoisched/report_io.hpp"
#include "aoisched/simulator.hpp"
#include "fixtures.hpp"

using namespace aoisched;
using doctest::Approx;

namespace {

SimConfig quick(long horizon, long runs, Metric metric = Metric::kTraceOfP) {
  SimConfig c;
  c.horizon = horizon;
  c.runs = runs;
  c.metric = metric;
  c.time_decisions = false;
  return c;
}

bool same_report(const SimReport& a, const SimReport& b) {
  if (a.run_means.size() != b.run_means.size()) return false;
  for (std::size_t i = 0; i < a.run_means.size(); ++i)
    if (!(a.run_means[i] == b.run_means[i] || (std::isnan(a.run_means[i]) && std::isnan(b.run_means[i]))))
      return false;
  return a.mean_J == b.mean_J && a.ci95 == b.ci95 && a.diverged_runs == b.diverged_runs &&
         a.per_sensor_attempt_rate == b.per_sensor_attempt_rate &&
         a.per_sensor_success_rate == b.per_sensor_success_rate && a.aoi_histogram == b.aoi_histogram &&
         a.max_scheduled == b.max_scheduled;
}

}  // namespace

TEST_SUITE("simulator") {

TEST_CASE("config validation and metric names") {
  CHECK(effective_warmup(quick(1000, 1)) == 100);
  SimConfig c = quick(10, 1);
  c.warmup = 10;
  CHECK_THROWS_AS(effective_warmup(c), ConfigError);
  CHECK_THROWS_AS(effective_warmup(quick(0, 1)), ConfigError);
  CHECK_THROWS_AS(effective_warmup(quick(10, 0)), ConfigError);
  for (Metric m : {Metric::kAoiFunctionCost, Metric::kTraceOfP, Metric::kEmpiricalSquaredError})
    CHECK(parse_metric(metric_name(m)) == m);
  CHECK_THROWS_AS(parse_metric("mse2"), ConfigError);
}

TEST_CASE("perfect channel keeps the age at one") {
  const std::vector<Sensor> s{make_sensor(fixtures::scalar_plant(1.2, 1.0, 1.0, 1.0, 1.0))};
  const Scheduler pol(PolicySpec{}, s, 1);
  const SimReport r = run_covariance_sim(pol, quick(200, 20));
  CHECK(r.mean_J == Approx(0.952234).epsilon(1e-6));
  CHECK(r.ci95 < 1e-9);
  CHECK(r.aoi_histogram[0][0] == r.aoi_histogram[0].front());
  for (std::size_t d = 1; d < r.aoi_histogram[0].size(); ++d) CHECK(r.aoi_histogram[0][d] == 0);
}

TEST_CASE("single sensor average AoI cost matches the geometric closed form") {
  const std::vector<Sensor> s{make_abstract_sensor({1.44, 1.0, 0.9})};
  const Scheduler pol(PolicySpec{}, s, 1);
  const SimReport r = run_covariance_sim(pol, quick(1000, 400, Metric::kAoiFunctionCost));
  const double exact = 1.44 * 0.9 / (1 - 1.44 * 0.1);
  CHECK(std::abs(r.mean_J - exact) < std::max(3 * r.ci95, 0.01 * exact));
}

TEST_CASE("fixed seed reproduces the report and serial matches parallel") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 6, 21));
  for (PolicyKind k : {PolicyKind::kLightweight, PolicyKind::kRandomized, PolicyKind::kVoiWhittle,
                       PolicyKind::kRoundRobin}) {
    PolicySpec ps;
    ps.kind = k;
    const Scheduler pol(ps, sensors, 3);
    const SimConfig c = quick(300, 40);
    const SimReport a = run_covariance_sim(pol, c);
    const SimReport b = run_covariance_sim(pol, c);
    const SimReport s = run_covariance_sim_serial(pol, c);
    CHECK(same_report(a, b));
    CHECK(same_report(a, s));
    SimConfig other = c;
    other.seed = 2;
    CHECK_FALSE(same_report(a, run_covariance_sim(pol, other)));
  }
}

TEST_CASE("channel faithfulness and budget") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 8, 22));
  for (PolicyKind k : {PolicyKind::kLightweight, PolicyKind::kAoiGreedy, PolicyKind::kRandomized}) {
    PolicySpec ps;
    ps.kind = k;
    const Scheduler pol(ps, sensors, 3);
    const SimConfig c = quick(1000, 50);
    const SimReport r = run_covariance_sim(pol, c);
    CHECK(r.max_scheduled <= 3);
    double total = 0.0;
    const double steps = double(c.horizon - effective_warmup(c)) * c.runs;
    for (std::size_t i = 0; i < sensors.size(); ++i) {
      const double rate = r.per_sensor_attempt_rate[i];
      CHECK(rate <= 1.0);
      total += rate;
      const double n = rate * steps;
      if (n < 100) continue;
      const double p = sensors[i].fn.p;
      const double sigma = std::sqrt(p * (1 - p) / n);
      CHECK(std::abs(r.per_sensor_success_rate[i] - p) <= 3 * sigma + 1e-12);
    }
    CHECK(total <= 3.0 + 1e-9);
  }
}

TEST_CASE("histogram mass equals the number of post-warmup steps") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 3, 23));
  const Scheduler pol(PolicySpec{}, sensors, 1);
  const SimConfig c = quick(500, 10);
  const SimReport r = run_covariance_sim(pol, c);
  for (const auto& h : r.aoi_histogram) {
    std::uint64_t total = 0;
    for (auto v : h) total += v;
    CHECK(total == std::uint64_t((c.horizon - effective_warmup(c)) * c.runs));
  }
}

TEST_CASE("unstable ensembles are flagged as diverged") {
  // each sensor alone is stable, but eight of them cannot share one channel
  const std::vector<Sensor> s(8, make_abstract_sensor({100.0, 1.0, 0.995}));
  const Scheduler pol(PolicySpec{}, s, 1);
  SimConfig c = quick(200, 8, Metric::kAoiFunctionCost);
  const SimReport r = run_covariance_sim(pol, c);
  CHECK(r.diverged_runs == 8);
  CHECK(std::isnan(r.run_means[0]));
}

TEST_CASE("trajectory simulation") {
  SUBCASE("nearly noiseless plant has vanishing error") {
    const PlantModel pm = fixtures::scalar_plant(1.2, 1.0, 1e-10, 1e-10, 1.0);
    const Scheduler pol(PolicySpec{}, std::vector<Sensor>{make_sensor(pm)}, 1);
    const SimReport r = run_trajectory_sim(pol, quick(200, 20, Metric::kEmpiricalSquaredError));
    CHECK(r.mean_J < 1e-8);
  }
  SUBCASE("scalar plant matches the covariance value with process noise") {
    const PlantModel pm = fixtures::scalar_plant(1.2, 1.0, 1.0, 1.0, 1.0);
    const std::vector<Sensor> rec{make_sensor(pm, CovarianceConvention::kRecursion)};
    const std::vector<Sensor> phys{make_sensor(pm, CovarianceConvention::kPhysical)};
    const SimReport emp = run_trajectory_sim(Scheduler(PolicySpec{}, rec, 1), quick(1000, 100, Metric::kEmpiricalSquaredError));
    const SimReport cov = run_covariance_sim(Scheduler(PolicySpec{}, phys, 1), quick(1000, 10));
    CHECK(cov.mean_J == Approx(1.952234).epsilon(1e-6));
    CHECK(emp.mean_J / cov.mean_J == Approx(1.0).epsilon(0.05));
  }
  SUBCASE("trace metric in trajectory mode follows the covariance run") {
    const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 3, 24));
    const Scheduler pol(PolicySpec{}, sensors, 1);
    const SimConfig c = quick(300, 10);
    const SimReport a = run_trajectory_sim(pol, c);
    const SimReport b = run_covariance_sim(pol, c);
    CHECK(a.aoi_histogram == b.aoi_histogram);
    CHECK(a.mean_J == Approx(b.mean_J).epsilon(1e-12));
  }
}

TEST_CASE("decision timing is positive and finite") {
  const auto sensors = make_sensors(generate_ensemble(PlantGenSpec{}, 10, 25));
  const Scheduler pol(PolicySpec{}, sensors, 5);
  const double t = measure_decision_time(pol, 2000, 3, 1);
  CHECK(t > 0.0);
  CHECK(std::isfinite(t));
  const auto rows = measure_decision_times(PlantGenSpec{}, {PolicySpec{}}, {4, 6}, 500, 1);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1].N == 6);
  CHECK(rows[0].policy == "lightweight");
}

TEST_CASE("sweep parsing and plants") {
  const SweepSpec ch = parse_sweep("channel:0.8:1.0:5");
  CHECK(ch.kind == SweepKind::kChannel);
  REQUIRE(ch.values.size() == 5);
  CHECK(ch.values[1] == Approx(0.85));
  CHECK(ch.values[4] == Approx(1.0));
  const SweepSpec sc = parse_sweep("scale:4:12:3");
  CHECK(sc.values == std::vector<double>{4, 8, 12});
  CHECK(sweep_budget(sc, 8) == 4);
  CHECK(sweep_plants(sc, 8, {}).size() == 8);
  CHECK_THROWS_AS(parse_sweep("channel:0.8:1.0"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("bogus:0:1:2"), ConfigError);
  CHECK_THROWS_AS(parse_sweep("channel:0.8:1.0:x"), ConfigError);

  SweepSpec het = parse_sweep("heterogeneity:0:1:3");
  const auto h0 = sweep_plants(het, 0.0, {});
  for (const auto& p : h0) CHECK(p.A == h0[0].A);
  const auto h1 = sweep_plants(het, 1.0, {});
  CHECK_FALSE(h1[1].A == h1[0].A);
  for (const auto& p : sweep_plants(ch, 0.85, {})) CHECK(p.p == 0.85);
}

TEST_CASE("sweep output is reproducible and exports the documented columns") {
  SweepSpec spec = parse_sweep("channel:0.8:1.0:3");
  spec.N = 4;
  spec.M = 2;
  const std::vector<PolicySpec> pols{PolicySpec{}, PolicySpec{PolicyKind::kAoiGreedy}};
  const SimConfig c = quick(200, 20);
  const auto a = run_sweep(spec, pols, c);
  const auto b = run_sweep(spec, pols, c);
  REQUIRE(a.size() == 6);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(same_report(a[i].report, b[i].report));
  const std::string csv = sweep_csv(a);
  CHECK(csv.rfind(std::string(kSweepCsvHeader) + "\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
  const auto j = sweep_json(a, "channel", Metric::kTraceOfP);
  CHECK(j["schema_version"] == 1);
  CHECK(j["rows"].size() == 6);
  CHECK(to_json(a[0].report)["aoi_histogram"].size() == 4);
}

}
