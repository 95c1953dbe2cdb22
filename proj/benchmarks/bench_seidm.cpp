#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "seidm/dynamics.hpp"
#include "seidm/models.hpp"

namespace {

using namespace seidm;
using models::ModelKind;

std::vector<models::Observation> observations(std::size_t n) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> gap(2.0, 200.0), speed(0.0, 30.0);
  std::vector<models::Observation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(models::Observation::make(gap(rng), speed(rng), speed(rng)));
  }
  return out;
}

void BM_IdmAcceleration(benchmark::State& state) {
  const auto obs = observations(4096);
  const models::ModelParams p;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(models::idm_acceleration(obs[i++ & 4095], p));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IdmAcceleration);

void BM_SeidmAcceleration(benchmark::State& state) {
  const auto obs = observations(4096);
  const models::ModelParams p;
  const models::RiskParams q;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(models::seidm_acceleration(obs[i++ & 4095], p, q));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SeidmAcceleration);

void BM_EquilibriumGap(benchmark::State& state) {
  const models::ParamSet params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        models::equilibrium_gap(ModelKind::kSeidm, kmh_to_mps(95.0), params));
  }
}
BENCHMARK(BM_EquilibriumGap);

void BM_StepLane(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const models::ParamSet params;
  dynamics::StepConfig cfg;
  cfg.t_max = 1e9;
  const double v = kmh_to_mps(95.0);
  const double gap = models::equilibrium_gap(ModelKind::kSeidm, v, params);
  std::vector<dynamics::VehicleState> states(n);
  for (std::size_t i = 0; i < n; ++i) {
    states[i].position = (gap + dynamics::kDefaultVehicleLength) * static_cast<double>(i);
    states[i].speed = v;
  }
  dynamics::Simulation sim({dynamics::make_lane(states, ModelKind::kSeidm, cfg)},
                           params, cfg);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sim.step());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_StepLane)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
