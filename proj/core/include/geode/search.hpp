#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "geode/decoder.hpp"
#include "geode/graph.hpp"
#include "geode/metric.hpp"

namespace geode {

enum class HeuristicKind {
  zero,        // h = 0, plain Dijkstra ordering
  obs_chord,   // ‖f(z_n) - f(z_target)‖, admissible by the chord bound
  latent_line  // Riemannian length of the straight latent line to the target; not admissible
};

std::optional<HeuristicKind> parse_heuristic(std::string_view name);
std::string_view heuristic_name(HeuristicKind kind);

/// Sampling points used by the latent_line heuristic.
inline constexpr int kLatentLineSamples = 4;

struct GeodesicPath {
  std::vector<NodeId> node_ids;
  std::vector<Vector> latent_points;
  std::vector<double> edge_lengths;
  double total_length = 0.0;
  std::size_t expansions = 0;
  double elapsed_s = 0.0;
};

/// A search either finds a path or reports the size of the component it
/// exhausted. Unreachable targets are a normal outcome on sparse graphs.
struct SearchResult {
  std::optional<GeodesicPath> path;
  std::size_t explored = 0;
  std::size_t expansions = 0;
  double elapsed_s = 0.0;

  bool found() const { return path.has_value(); }
};

/// A* over the graph's Riemannian edge weights. Ties on f pop the lower g
/// first, then the lower node id. Closed nodes are reopened if a cheaper route
/// turns up, so an admissible heuristic always yields a minimum-weight path.
SearchResult astar(const LatentGraph& graph, const Decoder& decoder, NodeId start, NodeId target,
                   HeuristicKind heuristic, const MetricConfig& cfg);

/// Decoded image f(z) of every node of one graph, for many obs_chord queries
/// against the same graph and decoder. Entries are bit-identical to
/// decoder.forward, so cached and uncached searches agree exactly.
class ObservationCache {
 public:
  ObservationCache(const LatentGraph& graph, const Decoder& decoder, int workers = 1);

  std::size_t size() const { return images_.size(); }
  const Vector& at(NodeId id) const { return images_[id]; }
  const std::string& decoder_fingerprint() const { return fingerprint_; }
  /// Wall time spent decoding the nodes.
  double build_s() const { return build_s_; }

 private:
  std::vector<Vector> images_;
  std::string fingerprint_;
  double build_s_ = 0.0;
};

/// obs_chord A* reading node images from the cache instead of the decoder.
SearchResult astar(const LatentGraph& graph, const ObservationCache& cache, NodeId start, NodeId target);

/// Textbook Dijkstra, kept separate from astar as its optimality oracle.
SearchResult dijkstra(const LatentGraph& graph, NodeId start, NodeId target);

/// Riemannian length of the straight latent segment between the endpoints.
double euclidean_baseline(const Decoder& decoder, const Vector& z_start, const Vector& z_target,
                          const MetricConfig& cfg);

/// Shortest path under latent Euclidean edge lengths, re-scored edge by edge
/// with the graph's Riemannian weights.
SearchResult piecewise_euclidean_baseline(const LatentGraph& graph, const Decoder& decoder,
                                          NodeId start, NodeId target, const MetricConfig& cfg);

struct InterpolationPoint {
  std::size_t edge;
  double t;
  Vector z;
  Vector x;
  double phi;
};

/// Decodes points_per_edge + 1 equidistant latent points per edge, sharing
/// the endpoints between consecutive edges. phi is the Riemannian speed along
/// the edge's unit-time parametrization.
std::vector<InterpolationPoint> interpolate_path(const Decoder& decoder, const GeodesicPath& path,
                                                 int points_per_edge, const MetricConfig& cfg);

nlohmann::json path_to_json(const GeodesicPath& path);
GeodesicPath path_from_json(const nlohmann::json& doc);

}  // namespace geode
