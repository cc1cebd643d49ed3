#include "rk/factor.hpp"
#include "rk/problems.hpp"
#include "rk/sketch.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

rk::Vector random_vector(rk::Index n) {
  std::mt19937_64 gen(12345);
  std::normal_distribution<double> dist;
  rk::Vector v(n);
  for (rk::Index i = 0; i < n; ++i) v[i] = dist(gen);
  return v;
}

void bm_fwht(benchmark::State& state) {
  const rk::Index n = state.range(0);
  const rk::Vector x = random_vector(n);
  for (auto _ : state) {
    rk::Vector y = x;
    rk::fwht_normalized(y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(bm_fwht)->Range(1 << 10, 1 << 18);

void bm_sketch_apply(benchmark::State& state, rk::SketchKind kind) {
  const rk::Index n = state.range(0);
  const rk::Index ell = state.range(1);
  const auto theta = rk::SketchOperator::make(kind, n, ell, 7);
  const rk::Vector x = random_vector(n);
  for (auto _ : state) {
    rk::Vector y = theta.apply(x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK_CAPTURE(bm_sketch_apply, gaussian, rk::SketchKind::gaussian)
    ->Args({4096, 256})
    ->Args({65536, 512});
BENCHMARK_CAPTURE(bm_sketch_apply, srht, rk::SketchKind::srht)
    ->Args({4096, 256})
    ->Args({65536, 512});

void bm_rgk_step(benchmark::State& state) {
  const rk::Index side = state.range(0);
  const auto p = rk::make_tomo_problem(side, 2 * side * side, 0.0, 3);
  const rk::Index ell_n = rk::embedding_dim_default(p.op.cols(), 50);
  const rk::Index ell_m = rk::embedding_dim_default(p.op.rows(), 50);
  const auto tn = rk::SketchOperator::srht(p.op.cols(), ell_n, 11);
  const auto tm = rk::SketchOperator::srht(p.op.rows(), ell_m, 12);
  for (auto _ : state) {
    state.PauseTiming();
    rk::GKFactorization f = rk::rgk_init(p.op, p.b, tn, tm, 12);
    state.ResumeTiming();
    for (int j = 0; j < 10 && !f.breakdown; ++j)
      rk::rgk_step(f, p.op, tn, tm);
    benchmark::DoNotOptimize(f.M.data());
  }
}
BENCHMARK(bm_rgk_step)->Arg(32)->Arg(64);

void bm_gkb_step(benchmark::State& state) {
  const rk::Index side = state.range(0);
  const bool reorth = state.range(1) != 0;
  const auto p = rk::make_tomo_problem(side, 2 * side * side, 0.0, 3);
  for (auto _ : state) {
    state.PauseTiming();
    rk::GKBFactorization f = rk::gkb_init(p.op, p.b, 12, reorth);
    state.ResumeTiming();
    for (int j = 0; j < 10 && !f.breakdown; ++j) rk::gkb_step(f, p.op);
    benchmark::DoNotOptimize(f.B.data());
  }
}
BENCHMARK(bm_gkb_step)->Args({32, 0})->Args({32, 1})->Args({64, 0})->Args({64, 1});

} // namespace

BENCHMARK_MAIN();
