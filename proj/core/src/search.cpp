#include "geode/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <queue>

#include <fmt/format.h>

#include "geode/error.hpp"
#include "geode/parallel.hpp"
#include "hash.hpp"

namespace geode {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr NodeId kNoParent = std::numeric_limits<NodeId>::max();

constexpr std::string_view kHeuristicNames[] = {"zero", "obs-chord", "latent-line"};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void check_endpoints(const LatentGraph& graph, NodeId start, NodeId target) {
  if (start >= graph.node_count() || target >= graph.node_count()) {
    throw ConfigError(fmt::format("query ids ({}, {}) out of range for a graph with {} nodes",
                                  start, target, graph.node_count()));
  }
}

struct Labels {
  std::vector<double> g;
  std::vector<NodeId> parent;
  std::size_t explored = 0;
  std::size_t expansions = 0;
  bool reached = false;
};

struct QueueEntry {
  double f;
  double g;
  NodeId id;
};

// Orders the max-heap so the smallest (f, g, id) sits on top.
struct LaterEntry {
  bool operator()(const QueueEntry& a, const QueueEntry& b) const {
    if (a.f != b.f) return a.f > b.f;
    if (a.g != b.g) return a.g > b.g;
    return a.id > b.id;
  }
};

// Best-first search shared by astar and the piecewise baseline. `cost(i, e)`
// is the length of adjacency entry e of node i; `estimate(n)` the heuristic.
template <typename Cost, typename Estimate>
Labels best_first(const LatentGraph& graph, NodeId start, NodeId target, Cost&& cost,
                  Estimate&& estimate) {
  const std::size_t n = graph.node_count();
  Labels out{std::vector<double>(n, kInf), std::vector<NodeId>(n, kNoParent)};
  std::vector<char> closed(n, 0);
  std::vector<double> h(n, std::numeric_limits<double>::quiet_NaN());
  const auto heuristic = [&](NodeId id) {
    if (std::isnan(h[id])) h[id] = estimate(id);
    return h[id];
  };

  std::priority_queue<QueueEntry, std::vector<QueueEntry>, LaterEntry> open;
  out.g[start] = 0.0;
  open.push({heuristic(start), 0.0, start});

  while (!open.empty()) {
    const QueueEntry top = open.top();
    open.pop();
    if (closed[top.id] || top.g != out.g[top.id]) continue;
    closed[top.id] = 1;
    ++out.explored;
    ++out.expansions;
    if (top.id == target) {
      out.reached = true;
      return out;
    }
    for (const Edge& e : graph.neighbors(top.id)) {
      const double tentative = top.g + cost(top.id, e);
      if (tentative < out.g[e.to]) {
        out.g[e.to] = tentative;
        out.parent[e.to] = top.id;
        if (closed[e.to]) {
          closed[e.to] = 0;
          --out.explored;
        }
        open.push({tentative + heuristic(e.to), tentative, e.to});
      }
    }
  }
  return out;
}

GeodesicPath trace(const LatentGraph& graph, const Labels& labels, NodeId start, NodeId target) {
  GeodesicPath path;
  for (NodeId v = target; v != kNoParent; v = labels.parent[v]) {
    path.node_ids.push_back(v);
    if (v == start) break;
  }
  std::reverse(path.node_ids.begin(), path.node_ids.end());
  for (NodeId id : path.node_ids) path.latent_points.push_back(graph.node(id).z);
  for (std::size_t i = 1; i < path.node_ids.size(); ++i) {
    const double w = *graph.edge_weight(path.node_ids[i - 1], path.node_ids[i]);
    path.edge_lengths.push_back(w);
    path.total_length += w;
  }
  path.expansions = labels.expansions;
  return path;
}

SearchResult finish(const LatentGraph& graph, const Labels& labels, NodeId start, NodeId target,
                    Clock::time_point t0) {
  SearchResult result;
  result.explored = labels.explored;
  result.expansions = labels.expansions;
  if (labels.reached) {
    result.path = trace(graph, labels, start, target);
  }
  result.elapsed_s = seconds_since(t0);
  if (result.path) result.path->elapsed_s = result.elapsed_s;
  return result;
}

}  // namespace

std::optional<HeuristicKind> parse_heuristic(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kHeuristicNames); ++i) {
    if (kHeuristicNames[i] == name) return static_cast<HeuristicKind>(i);
  }
  if (name == "obs_chord") return HeuristicKind::obs_chord;
  if (name == "latent_line") return HeuristicKind::latent_line;
  return std::nullopt;
}

std::string_view heuristic_name(HeuristicKind kind) {
  return kHeuristicNames[static_cast<std::size_t>(kind)];
}

SearchResult astar(const LatentGraph& graph, const Decoder& decoder, NodeId start, NodeId target,
                   HeuristicKind heuristic, const MetricConfig& cfg) {
  check_endpoints(graph, start, target);
  if (decoder.input_dim() != graph.dim()) {
    throw DimensionError(fmt::format("decoder expects dimension {}, graph has {}",
                                     decoder.input_dim(), graph.dim()));
  }
  const auto t0 = Clock::now();
  const auto weight = [](NodeId, const Edge& e) { return e.weight; };
  const Vector& z_target = graph.node(target).z;

  Labels labels;
  switch (heuristic) {
    case HeuristicKind::zero:
      labels = best_first(graph, start, target, weight, [](NodeId) { return 0.0; });
      break;
    case HeuristicKind::obs_chord: {
      const Vector x_target = decoder.forward(z_target);
      labels = best_first(graph, start, target, weight, [&](NodeId id) {
        return (decoder.forward(graph.node(id).z) - x_target).norm();
      });
      break;
    }
    case HeuristicKind::latent_line: {
      MetricConfig coarse = cfg;
      coarse.curve_samples = kLatentLineSamples;
      labels = best_first(graph, start, target, weight, [&](NodeId id) {
        return curve_length(decoder, graph.node(id).z, z_target, coarse, edge_stream(id, target));
      });
      break;
    }
  }
  return finish(graph, labels, start, target, t0);
}

ObservationCache::ObservationCache(const LatentGraph& graph, const Decoder& decoder, int workers)
    : fingerprint_(decoder.fingerprint()) {
  if (decoder.input_dim() != graph.dim()) {
    throw DimensionError(fmt::format("decoder expects dimension {}, graph has {}",
                                     decoder.input_dim(), graph.dim()));
  }
  const auto t0 = Clock::now();
  constexpr std::size_t kChunk = 256;
  const std::size_t n = graph.node_count();
  images_.resize(n);
  parallel_for((n + kChunk - 1) / kChunk, workers, [&](std::size_t c) {
    std::vector<Vector> zs;
    for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) zs.push_back(graph.node(i).z);
    auto xs = decoder.forward_batch(zs);
    std::move(xs.begin(), xs.end(), images_.begin() + static_cast<std::ptrdiff_t>(c * kChunk));
  });
  build_s_ = seconds_since(t0);
}

SearchResult astar(const LatentGraph& graph, const ObservationCache& cache, NodeId start, NodeId target) {
  check_endpoints(graph, start, target);
  if (cache.size() != graph.node_count()) {
    throw ConfigError(fmt::format("observation cache holds {} nodes, graph has {}", cache.size(),
                                  graph.node_count()));
  }
  const auto t0 = Clock::now();
  const auto weight = [](NodeId, const Edge& e) { return e.weight; };
  const Vector& x_target = cache.at(target);
  const Labels labels = best_first(graph, start, target, weight,
                                   [&](NodeId id) { return (cache.at(id) - x_target).norm(); });
  return finish(graph, labels, start, target, t0);
}

SearchResult dijkstra(const LatentGraph& graph, NodeId start, NodeId target) {
  check_endpoints(graph, start, target);
  const auto t0 = Clock::now();
  const std::size_t n = graph.node_count();
  Labels labels{std::vector<double>(n, kInf), std::vector<NodeId>(n, kNoParent)};
  std::vector<char> done(n, 0);

  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  labels.g[start] = 0.0;
  queue.emplace(0.0, start);
  while (!queue.empty()) {
    const auto [d, u] = queue.top();
    queue.pop();
    if (done[u]) continue;
    done[u] = 1;
    ++labels.explored;
    ++labels.expansions;
    if (u == target) {
      labels.reached = true;
      break;
    }
    for (const Edge& e : graph.neighbors(u)) {
      if (done[e.to]) continue;
      const double nd = d + e.weight;
      if (nd < labels.g[e.to]) {
        labels.g[e.to] = nd;
        labels.parent[e.to] = u;
        queue.emplace(nd, e.to);
      }
    }
  }
  return finish(graph, labels, start, target, t0);
}

double euclidean_baseline(const Decoder& decoder, const Vector& z_start, const Vector& z_target,
                          const MetricConfig& cfg) {
  if (z_start.size() != z_target.size()) {
    throw DimensionError(fmt::format("endpoints have dimensions {} and {}", z_start.size(),
                                     z_target.size()));
  }
  return curve_length(decoder, z_start, z_target, cfg);
}

SearchResult piecewise_euclidean_baseline(const LatentGraph& graph, const Decoder& decoder,
                                          NodeId start, NodeId target, const MetricConfig&) {
  check_endpoints(graph, start, target);
  if (decoder.input_dim() != graph.dim()) {
    throw DimensionError(fmt::format("decoder expects dimension {}, graph has {}",
                                     decoder.input_dim(), graph.dim()));
  }
  const auto t0 = Clock::now();
  const Vector& z_target = graph.node(target).z;
  const auto latent = [&](NodeId i, const Edge& e) {
    return (graph.node(i).z - graph.node(e.to).z).norm();
  };
  const Labels labels = best_first(graph, start, target, latent, [&](NodeId id) {
    return (graph.node(id).z - z_target).norm();
  });
  // trace() re-scores each hop with the stored Riemannian edge weight, which
  // is the curve length of that straight latent edge.
  return finish(graph, labels, start, target, t0);
}

std::vector<InterpolationPoint> interpolate_path(const Decoder& decoder, const GeodesicPath& path,
                                                 int points_per_edge, const MetricConfig& cfg) {
  if (points_per_edge < 1) throw ConfigError("points per edge must be >= 1");
  const auto& pts = path.latent_points;
  if (pts.empty()) throw ConfigError("cannot interpolate an empty path");

  std::vector<InterpolationPoint> out;
  if (pts.size() == 1) {
    out.push_back({0, 0.0, pts[0], decoder.forward(pts[0]), 0.0});
    return out;
  }
  for (std::size_t e = 0; e + 1 < pts.size(); ++e) {
    const Vector dz = pts[e + 1] - pts[e];
    for (int j = (e == 0 ? 0 : 1); j <= points_per_edge; ++j) {
      const double t = static_cast<double>(j) / points_per_edge;
      Vector z = j == points_per_edge ? pts[e + 1] : Vector(pts[e] + t * dz);
      const std::uint64_t stream = detail::splitmix64(e) ^ static_cast<std::uint64_t>(j);
      const double phi = velocity(decoder, z, dz, cfg, stream);
      out.push_back({e, t, std::move(z), Vector(), phi});
    }
  }
  Matrix cols(decoder.input_dim(), static_cast<Eigen::Index>(out.size()));
  for (std::size_t i = 0; i < out.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = out[i].z;
  const Matrix xs = decoder.forward_columns(cols);
  for (std::size_t i = 0; i < out.size(); ++i) out[i].x = xs.col(static_cast<Eigen::Index>(i));
  return out;
}

json path_to_json(const GeodesicPath& path) {
  json latent = json::array();
  for (const Vector& z : path.latent_points) {
    latent.push_back(std::vector<double>(z.data(), z.data() + z.size()));
  }
  return {{"format", "geode-path-v1"},
          {"node_ids", path.node_ids},
          {"latent", std::move(latent)},
          {"edge_lengths", path.edge_lengths},
          {"total_length", path.total_length},
          {"expansions", path.expansions},
          {"elapsed_s", path.elapsed_s}};
}

GeodesicPath path_from_json(const json& doc) {
  if (!doc.is_object() || doc.value("format", "") != "geode-path-v1") {
    throw SchemaError("path file: 'format' must be \"geode-path-v1\"");
  }
  GeodesicPath path;
  try {
    path.node_ids = doc.at("node_ids").get<std::vector<NodeId>>();
    for (const json& z : doc.at("latent")) {
      const auto v = z.get<std::vector<double>>();
      path.latent_points.emplace_back(Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())));
    }
    path.edge_lengths = doc.at("edge_lengths").get<std::vector<double>>();
    path.total_length = doc.at("total_length").get<double>();
    path.expansions = doc.at("expansions").get<std::size_t>();
    path.elapsed_s = doc.at("elapsed_s").get<double>();
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("path file: {}", e.what()));
  }
  if (path.latent_points.size() != path.node_ids.size() ||
      (!path.node_ids.empty() && path.edge_lengths.size() + 1 != path.node_ids.size())) {
    throw SchemaError("path file: node_ids, latent and edge_lengths disagree in length");
  }
  return path;
}

}  // namespace geode
