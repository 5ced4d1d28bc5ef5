#include <benchmark/benchmark.h>

#include <random>

#include "fixtures.hpp"
#include "geode/graph.hpp"
#include "geode/search.hpp"

using namespace geode;

static void BM_BuildGraph(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto m = bench::mlp(dim, 7);
  const auto latent = bench::nodes(1000, dim, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_graph(m, latent, 4, MetricConfig{}, 1));
  }
}
BENCHMARK(BM_BuildGraph)->Arg(2)->Arg(20)->Unit(benchmark::kMillisecond);

static void BM_AStar(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto heuristic = static_cast<HeuristicKind>(state.range(1));
  const auto m = bench::mlp(dim, 9);
  const auto g = build_graph(m, bench::nodes(1000, dim, 10), 4, MetricConfig{}, 1);
  std::mt19937_64 rng(11);
  std::size_t expansions = 0;
  for (auto _ : state) {
    const auto a = static_cast<NodeId>(rng() % 1000), b = static_cast<NodeId>(rng() % 1000);
    const auto r = astar(g, m, a, b, heuristic, g.metric_config());
    expansions += r.expansions;
    benchmark::DoNotOptimize(r);
  }
  state.counters["expansions"] =
      benchmark::Counter(static_cast<double>(expansions), benchmark::Counter::kAvgIterations);
  state.SetLabel(std::string(heuristic_name(heuristic)));
}
BENCHMARK(BM_AStar)
    ->ArgsProduct({{2, 3, 5, 10, 20}, {static_cast<int64_t>(HeuristicKind::zero),
                                       static_cast<int64_t>(HeuristicKind::obs_chord)}})
    ->Unit(benchmark::kMicrosecond);

static void BM_AStarCached(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const auto m = bench::mlp(dim, 9);
  const auto g = build_graph(m, bench::nodes(1000, dim, 10), 4, MetricConfig{}, 1);
  const ObservationCache cache(g, m);
  std::mt19937_64 rng(11);
  for (auto _ : state) {
    const auto a = static_cast<NodeId>(rng() % 1000), b = static_cast<NodeId>(rng() % 1000);
    benchmark::DoNotOptimize(astar(g, cache, a, b));
  }
}
BENCHMARK(BM_AStarCached)->Arg(2)->Arg(3)->Arg(5)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

static void BM_InsertNode(benchmark::State& state) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 2.0);
  const auto base = build_graph(s, bench::nodes(1000, 2, 12), 4, MetricConfig{}, 1);
  const auto queries = bench::cloud(64, 2, 13);
  std::size_t q = 0;
  for (auto _ : state) {
    state.PauseTiming();
    LatentGraph g = base;
    state.ResumeTiming();
    benchmark::DoNotOptimize(insert_node(g, s, queries[q++ % queries.size()], 4, MetricConfig{}));
  }
}
BENCHMARK(BM_InsertNode)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
