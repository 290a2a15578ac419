#include <benchmark/benchmark.h>

#include "samra/env.hpp"
#include "samra/oracle.hpp"

using namespace samra;

namespace {

oracle::StaticInstance tiny_instance() {
  env::EnvConfig cfg;
  cfg.scenario.num_platoons = 2;
  cfg.scenario.num_subchannels = 2;
  cfg.scenario.platoon_size = 2;
  env::Environment e(cfg);
  e.reset(4);
  return oracle::freeze_instance(e);
}

}  // namespace

static void BM_OracleEnumerate(benchmark::State& state) {
  const auto inst = tiny_instance();
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::enumerate_optimum(inst, threads));
  state.SetItemsProcessed(state.iterations() * oracle::joint_space_size(inst));
}
BENCHMARK(BM_OracleEnumerate)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_OracleEvaluate(benchmark::State& state) {
  const auto inst = tiny_instance();
  Rng rng(5);
  const auto a = oracle::random_assignment(inst, rng);
  for (auto _ : state) benchmark::DoNotOptimize(oracle::evaluate_objective(inst, a));
}
BENCHMARK(BM_OracleEvaluate);
