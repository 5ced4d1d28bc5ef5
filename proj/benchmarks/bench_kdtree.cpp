#include <benchmark/benchmark.h>

#include "fixtures.hpp"
#include "geode/kdtree.hpp"

using namespace geode;

static void BM_KdTreeBuild(benchmark::State& state) {
  const auto pts = bench::cloud(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)), 1);
  for (auto _ : state) {
    KdTree tree(pts);
    benchmark::DoNotOptimize(tree);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_KdTreeBuild)->ArgsProduct({{1000, 10000}, {2, 5, 20}});

static void BM_KdTreeKnn(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(1));
  const auto pts = bench::cloud(static_cast<std::size_t>(state.range(0)), dim, 2);
  const auto queries = bench::cloud(256, dim, 3);
  const KdTree tree(pts);
  std::size_t q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(tree.knn(queries[q++ % queries.size()], 5));
  }
}
BENCHMARK(BM_KdTreeKnn)->ArgsProduct({{1000, 10000}, {2, 3, 5, 10, 20}});

static void BM_KdTreeInsert(benchmark::State& state) {
  const auto pts = bench::cloud(4096, 3, 4);
  for (auto _ : state) {
    KdTree tree;
    for (const Vector& p : pts) tree.insert(p);
    benchmark::DoNotOptimize(tree.knn(pts.front(), 4));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(pts.size()));
}
BENCHMARK(BM_KdTreeInsert);
