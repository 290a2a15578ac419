#include <benchmark/benchmark.h>

#include "samra/mlp.hpp"

using namespace samra;
using namespace samra::marl;

static void BM_MlpForward(benchmark::State& state) {
  Rng rng(1);
  const int width = static_cast<int>(state.range(0));
  Mlp net({24, width, width / 2, 9}, Activation::kRelu, Activation::kTanh, rng);
  const Matrix x = Matrix::Random(24, 64);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(x));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MlpForward)->Arg(64)->Arg(256)->Arg(1024);

static void BM_MlpBackward(benchmark::State& state) {
  Rng rng(2);
  const int width = static_cast<int>(state.range(0));
  Mlp net({24, width, width / 2, 9}, Activation::kRelu, Activation::kTanh, rng);
  const Matrix x = Matrix::Random(24, 64);
  const Matrix up = Matrix::Ones(9, 64);
  Mlp::Trace tr;
  (void)net.forward(x, tr);
  for (auto _ : state) benchmark::DoNotOptimize(net.backward(tr, up));
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MlpBackward)->Arg(64)->Arg(256)->Arg(1024);
