#include "bench.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <unordered_set>

#include <fmt/format.h>

#include "geode/error.hpp"
#include "geode/parallel.hpp"

namespace geode::cli {

using nlohmann::json;

double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) return 0.0;
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

DescriptiveStats describe(std::span<const double> values) {
  DescriptiveStats s;
  s.count = values.size();
  if (values.empty()) return s;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.median = percentile(sorted, 50.0);
  s.p5 = percentile(sorted, 5.0);
  s.p25 = percentile(sorted, 25.0);
  s.p75 = percentile(sorted, 75.0);
  s.p95 = percentile(sorted, 95.0);
  return s;
}

namespace {

// Unbiased draw in [0, n) independent of the standard library's
// distribution implementations.
std::uint64_t draw_below(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

json stats_json(const DescriptiveStats& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"median", s.median}, {"p5", s.p5},
          {"p25", s.p25},     {"p75", s.p75},   {"p95", s.p95}};
}

}  // namespace

std::vector<std::pair<NodeId, NodeId>> sample_pairs(std::size_t n, std::size_t count,
                                                    std::uint64_t seed) {
  std::vector<std::pair<NodeId, NodeId>> out;
  if (count == 0) return out;
  const std::size_t available = n < 2 ? 0 : n * (n - 1) / 2;
  if (count > available) {
    throw ConfigError(fmt::format("cannot draw {} distinct pairs from {} nodes", count, n));
  }
  std::mt19937_64 rng(seed);
  std::unordered_set<std::uint64_t> seen;
  while (out.size() < count) {
    const auto a = static_cast<NodeId>(draw_below(rng, n));
    const auto b = static_cast<NodeId>(draw_below(rng, n));
    if (a == b) continue;
    if (!seen.insert(edge_stream(a, b)).second) continue;
    out.emplace_back(a, b);
  }
  return out;
}

BenchSummary run_bench(const LatentGraph& graph, const Decoder& decoder, const BenchOptions& opts) {
  BenchSummary summary;
  summary.pairs = opts.pairs;
  summary.seed = opts.seed;
  summary.heuristic = opts.heuristic;
  const auto pairs = sample_pairs(graph.node_count(), opts.pairs, opts.seed);
  const MetricConfig& cfg = graph.metric_config();

  std::optional<ObservationCache> cache;
  if (opts.heuristic == HeuristicKind::obs_chord && !pairs.empty()) {
    cache.emplace(graph, decoder, opts.workers);
    summary.decode_s = cache->build_s();
  }

  summary.records.resize(pairs.size());
  parallel_for(pairs.size(), opts.workers, [&](std::size_t p) {
    PairRecord& rec = summary.records[p];
    rec.start = pairs[p].first;
    rec.target = pairs[p].second;
    const SearchResult geo = cache ? astar(graph, *cache, rec.start, rec.target)
                                   : astar(graph, decoder, rec.start, rec.target, opts.heuristic, cfg);
    rec.search_s = geo.elapsed_s;
    rec.expansions = geo.expansions;
    rec.explored = geo.explored;
    if (!geo.found()) return;
    rec.reachable = true;
    rec.geodesic = geo.path->total_length;
    rec.euclid = euclidean_baseline(decoder, graph.node(rec.start).z, graph.node(rec.target).z, cfg);
    const SearchResult piece = piecewise_euclidean_baseline(graph, decoder, rec.start, rec.target, cfg);
    rec.piecewise = piece.path->total_length;
  });

  std::vector<double> geo, euc, piece, seconds;
  for (const PairRecord& rec : summary.records) {
    if (!rec.reachable) {
      ++summary.unreachable;
      continue;
    }
    geo.push_back(rec.geodesic);
    euc.push_back(rec.euclid);
    piece.push_back(rec.piecewise);
    seconds.push_back(rec.search_s);
  }
  summary.geodesic = describe(geo);
  summary.euclid = describe(euc);
  summary.piecewise = describe(piece);

  const double scale = summary.euclid.mean;
  std::vector<double> dn, en, pn;
  for (PairRecord& rec : summary.records) {
    if (!rec.reachable || !(scale > 0.0)) continue;
    rec.d_norm = rec.geodesic / scale;
    rec.euclid_norm = rec.euclid / scale;
    rec.piecewise_norm = rec.piecewise / scale;
    dn.push_back(rec.d_norm);
    en.push_back(rec.euclid_norm);
    pn.push_back(rec.piecewise_norm);
  }
  summary.d_norm = describe(dn);
  summary.euclid_norm = describe(en);
  summary.piecewise_norm = describe(pn);

  if (!seconds.empty()) {
    const double mean =
        std::accumulate(seconds.begin(), seconds.end(), 0.0) / static_cast<double>(seconds.size());
    double ss = 0.0;
    for (double s : seconds) ss += (s - mean) * (s - mean);
    summary.search_mean_s = mean;
    summary.search_stddev_s = std::sqrt(ss / static_cast<double>(seconds.size()));
  }
  return summary;
}

json bench_to_json(const BenchSummary& summary, bool with_timing) {
  json records = json::array();
  for (const PairRecord& rec : summary.records) {
    json r = {{"start", rec.start},
              {"target", rec.target},
              {"reachable", rec.reachable},
              {"expansions", rec.expansions}};
    if (rec.reachable) {
      r["geodesic"] = rec.geodesic;
      r["euclid"] = rec.euclid;
      r["piecewise"] = rec.piecewise;
      r["d_norm"] = rec.d_norm;
      r["euclid_norm"] = rec.euclid_norm;
      r["piecewise_norm"] = rec.piecewise_norm;
    } else {
      r["explored"] = rec.explored;
    }
    if (with_timing) r["search_s"] = rec.search_s;
    records.push_back(std::move(r));
  }
  json doc = {{"format", "geode-bench-v1"},
              {"pairs", summary.pairs},
              {"reachable", summary.pairs - summary.unreachable},
              {"unreachable", summary.unreachable},
              {"seed", summary.seed},
              {"heuristic", std::string(heuristic_name(summary.heuristic))},
              {"lengths",
               {{"geodesic", stats_json(summary.geodesic)},
                {"euclid", stats_json(summary.euclid)},
                {"piecewise", stats_json(summary.piecewise)}}},
              {"normalized",
               {{"geodesic", stats_json(summary.d_norm)},
                {"euclid", stats_json(summary.euclid_norm)},
                {"piecewise", stats_json(summary.piecewise_norm)}}},
              {"records", std::move(records)}};
  if (with_timing) {
    doc["timing"] = {{"search_mean_s", summary.search_mean_s},
                     {"search_stddev_s", summary.search_stddev_s},
                     {"decode_s", summary.decode_s}};
  }
  return doc;
}

void print_bench_table(std::ostream& out, const BenchSummary& s, bool with_timing) {
  out << fmt::format("pairs {}  reachable {}  unreachable {}  heuristic {}  seed {}\n", s.pairs,
                     s.pairs - s.unreachable, s.unreachable, heuristic_name(s.heuristic), s.seed);
  out << fmt::format("{:<22}{:>12}{:>12}{:>12}{:>12}{:>12}{:>12}\n", "", "p5", "p25", "median",
                     "p75", "p95", "mean");
  const auto row = [&](const char* name, const DescriptiveStats& d) {
    out << fmt::format("{:<22}{:>12.6g}{:>12.6g}{:>12.6g}{:>12.6g}{:>12.6g}{:>12.6g}\n", name, d.p5,
                       d.p25, d.median, d.p75, d.p95, d.mean);
  };
  row("geodesic", s.geodesic);
  row("euclidean", s.euclid);
  row("piecewise euclidean", s.piecewise);
  row("d_norm geodesic", s.d_norm);
  row("d_norm euclidean", s.euclid_norm);
  row("d_norm piecewise", s.piecewise_norm);
  if (with_timing) {
    out << fmt::format("search time: mean {:.6g} s  stddev {:.6g} s  node decoding {:.6g} s\n",
                       s.search_mean_s, s.search_stddev_s, s.decode_s);
  }
}

}  // namespace geode::cli
