#include <memory>

#include <benchmark/benchmark.h>

#include "aoisched/joint_dp.hpp"
#include "aoisched/simulator.hpp"

using namespace aoisched;

namespace {

std::shared_ptr<const std::vector<Sensor>> ensemble(int N) {
  return std::make_shared<const std::vector<Sensor>>(make_sensors(generate_ensemble(PlantGenSpec{}, N, 11)));
}

SimConfig mc_config() {
  SimConfig cfg;
  cfg.horizon = 500;
  cfg.runs = 200;
  cfg.seed = 3;
  cfg.time_decisions = false;
  return cfg;
}

void BM_CovarianceSimSerial(benchmark::State& state) {
  const Scheduler s(PolicySpec{}, ensemble(static_cast<int>(state.range(0))), static_cast<int>(state.range(0) / 2));
  const SimConfig cfg = mc_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_covariance_sim_serial(s, cfg).mean_J);
}

void BM_CovarianceSimOpenMP(benchmark::State& state) {
  const Scheduler s(PolicySpec{}, ensemble(static_cast<int>(state.range(0))), static_cast<int>(state.range(0) / 2));
  const SimConfig cfg = mc_config();
  for (auto _ : state) benchmark::DoNotOptimize(run_covariance_sim(s, cfg).mean_J);
}

DpInstance dp_instance() {
  const auto sensors = ensemble(3);
  return make_dp_instance(*sensors, 1, 20, DpCost::kAoiFunction);
}

void BM_DpSerial(benchmark::State& state) {
  const DpInstance inst = dp_instance();
  for (auto _ : state) benchmark::DoNotOptimize(dp_optimal_policy_serial(inst).table.average_cost);
}

void BM_DpOpenMP(benchmark::State& state) {
  const DpInstance inst = dp_instance();
  for (auto _ : state) benchmark::DoNotOptimize(dp_optimal_policy(inst).table.average_cost);
}

void BM_Decision(benchmark::State& state, PolicyKind kind, bool cache) {
  const int N = static_cast<int>(state.range(0));
  PolicySpec spec;
  spec.kind = kind;
  spec.voi_cache = cache;
  Scheduler s(spec, ensemble(N), N / 2);
  std::vector<SensorState> st(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) st[static_cast<std::size_t>(i)].delta = 1 + (i * 7) % 13;
  Rng rng(5);
  std::vector<int> out;
  for (auto _ : state) {
    s.decide(st, rng, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_CovarianceSimSerial)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CovarianceSimOpenMP)->Arg(10)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DpOpenMP)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Decision, lightweight, PolicyKind::kLightweight, true)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_Decision, aoi_greedy, PolicyKind::kAoiGreedy, true)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_Decision, voi_greedy, PolicyKind::kVoiGreedy, true)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_Decision, aoi_whittle, PolicyKind::kAoiWhittle, true)->Arg(10)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_Decision, voi_whittle_cached, PolicyKind::kVoiWhittle, true)->Arg(10)->Arg(20);
BENCHMARK_CAPTURE(BM_Decision, voi_whittle_uncached, PolicyKind::kVoiWhittle, false)->Arg(10)->Arg(20);

BENCHMARK_MAIN();
