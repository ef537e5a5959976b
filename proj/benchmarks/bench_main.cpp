#include <benchmark/benchmark.h>

#include "widthlab/diagnostics.hpp"
#include "widthlab/loss.hpp"
#include "widthlab/multi_index.hpp"
#include "widthlab/network.hpp"
#include "widthlab/optimizer.hpp"
#include "widthlab/parameterization.hpp"
#include "widthlab/rng.hpp"

using namespace widthlab;

namespace {

Matrix random(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed, streams::kTest);
  return gaussian_matrix(rng, rows, cols, 1.0);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random(64, n, 1);
  const Matrix b = random(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * 64 * n * n));
}
BENCHMARK(BM_Matmul)->Arg(256)->Arg(512)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_MatmulTn(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random(64, n, 1);
  const Matrix b = random(64, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_tn(a, b));
}
BENCHMARK(BM_MatmulTn)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

ParamSpec sp(double eta) {
  PresetSettings s;
  s.preset = {PresetKind::kSP, 0.5};
  s.base_lr = eta;
  return resolve_preset(s);
}

Architecture mlp(std::size_t n) {
  Architecture a;
  a.d_in = 100;
  a.width = n;
  a.d_out = 2;
  return a;
}

void BM_SgdStep(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ParamSpec spec = sp(1e-4);
  Network net = Network::initialize(mlp(n), spec, 0);
  const Dataset batch = gen_multi_index_split(0, 64, 100, 0);
  for (auto _ : state) {
    const ForwardTrace t = forward(net, batch.inputs);
    const LossResult lr = loss_and_chi(LossKind::kCrossEntropy, t.logits, batch.targets);
    benchmark::DoNotOptimize(sgd_step(net, backward(net, t, lr.chi), spec));
  }
}
BENCHMARK(BM_SgdStep)->Arg(256)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_Diagnose(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ParamSpec spec = sp(1e-2);
  Network net = Network::initialize(mlp(n), spec, 0);
  const Dataset batch = gen_multi_index_split(0, 64, 100, 0);
  const ForwardTrace t0 = forward(net, batch.inputs);
  const LossResult lr = loss_and_chi(LossKind::kCrossEntropy, t0.logits, batch.targets);
  sgd_step(net, backward(net, t0, lr.chi), spec);
  const ForwardTrace t1 = forward(net, batch.inputs);
  DiagnosticOptions opts;
  opts.op_norms = state.range(1) != 0;
  for (auto _ : state) {
    InitialOpNormCache cache;
    benchmark::DoNotOptimize(diagnose({1, &net, &t0, &t1}, opts, cache));
  }
}
BENCHMARK(BM_Diagnose)->Args({1024, 0})->Args({1024, 1})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
