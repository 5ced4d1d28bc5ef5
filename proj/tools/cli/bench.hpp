#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "geode/decoder.hpp"
#include "geode/graph.hpp"
#include "geode/search.hpp"

namespace geode::cli {

struct DescriptiveStats {
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p5 = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

/// Percentiles use linear interpolation between order statistics.
DescriptiveStats describe(std::span<const double> values);
double percentile(std::span<const double> sorted, double p);

struct PairRecord {
  NodeId start;
  NodeId target;
  bool reachable = false;
  double geodesic = 0.0;
  double euclid = 0.0;
  double piecewise = 0.0;
  double d_norm = 0.0;          // geodesic / mean(euclid)
  double euclid_norm = 0.0;     // euclid / mean(euclid)
  double piecewise_norm = 0.0;  // piecewise / mean(euclid)
  std::size_t expansions = 0;
  std::size_t explored = 0;
  double search_s = 0.0;
};

struct BenchSummary {
  std::size_t pairs = 0;
  std::size_t unreachable = 0;
  std::uint64_t seed = 0;
  HeuristicKind heuristic = HeuristicKind::obs_chord;
  std::vector<PairRecord> records;
  DescriptiveStats geodesic, euclid, piecewise;
  DescriptiveStats d_norm, euclid_norm, piecewise_norm;
  double search_mean_s = 0.0;
  double search_stddev_s = 0.0;
  double decode_s = 0.0;  // one-off node decoding for obs_chord
};

struct BenchOptions {
  std::size_t pairs = 100;
  std::uint64_t seed = 0;
  HeuristicKind heuristic = HeuristicKind::obs_chord;
  int workers = 1;
};

/// Draws `count` distinct unordered pairs of distinct ids in [0, n).
std::vector<std::pair<NodeId, NodeId>> sample_pairs(std::size_t n, std::size_t count,
                                                    std::uint64_t seed);

/// Runs the geodesic search and both baselines on seeded random node pairs.
/// Statistics cover reachable pairs only; search_s is wall time around A*.
/// obs_chord searches read node images decoded once up front (decode_s).
BenchSummary run_bench(const LatentGraph& graph, const Decoder& decoder, const BenchOptions& opts);

nlohmann::json bench_to_json(const BenchSummary& summary, bool with_timing);
void print_bench_table(std::ostream& out, const BenchSummary& summary, bool with_timing);

}  // namespace geode::cli
