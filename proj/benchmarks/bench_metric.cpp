#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "geode/metric.hpp"

using namespace geode;

static void BM_CurveLengthSineRidge(benchmark::State& state) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 2.0);
  MetricConfig cfg;
  cfg.curve_samples = static_cast<int>(state.range(0));
  const Vector a = (Vector(2) << -1.0, 0.5).finished(), b = (Vector(2) << 1.25, -0.75).finished();
  for (auto _ : state) benchmark::DoNotOptimize(curve_length(s, a, b, cfg));
}
BENCHMARK(BM_CurveLengthSineRidge)->Arg(4)->Arg(32)->Arg(256);

static void BM_CurveLengthMlp(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto m = bench::mlp(dim, 5);
  const auto pts = bench::cloud(2, dim, 6);
  MetricConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(curve_length(m, pts[0], pts[1], cfg));
}
BENCHMARK(BM_CurveLengthMlp)->Arg(2)->Arg(5)->Arg(20);

static void BM_StochasticJacobian(benchmark::State& state) {
  const auto p = AnalyticDecoder::parabola(1.0);
  MetricConfig cfg;
  cfg.jacobian_mode = JacobianMode::stochastic;
  cfg.stoch_samples = static_cast<int>(state.range(0));
  const Vector z = (Vector(2) << 1.0, 0.0).finished();
  for (auto _ : state) benchmark::DoNotOptimize(jacobian_stochastic(p, z, cfg));
}
BENCHMARK(BM_StochasticJacobian)->Arg(1000)->Arg(50000);

static void BM_MfGrid(benchmark::State& state) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mf_grid(s, {-2, 2, -2, 2}, static_cast<int>(state.range(0)), MetricConfig{}));
  }
}
BENCHMARK(BM_MfGrid)->Arg(64);
