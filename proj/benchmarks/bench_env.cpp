#include <benchmark/benchmark.h>

#include "samra/env.hpp"

using namespace samra;

static void BM_EnvStep(benchmark::State& state) {
  env::EnvConfig cfg;
  cfg.scenario.num_platoons = static_cast<int>(state.range(0));
  env::Environment e(cfg);
  e.reset(1);
  Rng rng(2);
  std::vector<std::vector<double>> raw(e.num_agents(), std::vector<double>(e.action_dim()));
  for (auto _ : state) {
    for (auto& r : raw)
      for (auto& x : r) x = rng.uniform(-1.0, 1.0);
    if (e.step_raw(raw).done) {
      state.PauseTiming();
      e.reset(3);
      state.ResumeTiming();
    }
  }
}
BENCHMARK(BM_EnvStep)->Arg(2)->Arg(4);

static void BM_ChannelAdvance(benchmark::State& state) {
  channel::ScenarioConfig cfg;
  auto topo = channel::build_topology(cfg, 1);
  channel::ChannelModel model(cfg, 2);
  model.reset(topo);
  for (auto _ : state) {
    topo = channel::advance_mobility(topo, cfg.slot_duration_s);
    model.advance(topo);
  }
}
BENCHMARK(BM_ChannelAdvance);
