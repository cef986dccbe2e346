#include <benchmark/benchmark.h>

#include "meshadv/attack.hpp"
#include "meshadv/synth.hpp"
#include "meshadv/walk.hpp"

using namespace meshadv;

namespace {

Mesh bench_mesh() {
  ShapeSpec spec;
  spec.family = ShapeFamily::Torus;
  spec.seed = 1;
  return generate_shape(spec);
}

ImitatorParams bench_params(int classes = 5) {
  NetSpec spec;
  spec.lift1 = 32;
  spec.hidden = 64;
  spec.rnn_layers = 2;
  spec.classes = classes;
  return init_params(spec, 7);
}

void BM_walk_extraction(benchmark::State& state) {
  const Mesh m = bench_mesh();
  const int length = static_cast<int>(state.range(0));
  Rng rng(3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(extract_walk(m, length, rng));
  }
}
BENCHMARK(BM_walk_extraction)->Arg(64)->Arg(200);

void BM_forward(benchmark::State& state) {
  const Mesh m = bench_mesh();
  const ImitatorParams p = bench_params();
  Rng rng(3);
  const Walk w = extract_walk(m, static_cast<int>(state.range(0)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward(p, w.coords));
  }
}
BENCHMARK(BM_forward)->Arg(64)->Arg(200);

void BM_backward(benchmark::State& state) {
  const Mesh m = bench_mesh();
  const ImitatorParams p = bench_params();
  Rng rng(3);
  const Walk w = extract_walk(m, static_cast<int>(state.range(0)), rng);
  const ForwardTrace trace = forward(p, w.coords);
  const VectorXd ref = one_hot(0, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(backward(p, w.coords, trace, ref));
  }
}
BENCHMARK(BM_backward)->Arg(64)->Arg(200);

void BM_attack_iteration(benchmark::State& state) {
  const Mesh m = bench_mesh();
  const ImitatorParams p = bench_params();
  AttackConfig cfg;
  cfg.max_iterations = 1;
  cfg.stop_k = 1000;
  cfg.walk_length = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(attack(m, 0, p, cfg));
    ++cfg.seed;
  }
}
BENCHMARK(BM_attack_iteration)->Arg(64)->Arg(200);

}  // namespace

BENCHMARK_MAIN();
