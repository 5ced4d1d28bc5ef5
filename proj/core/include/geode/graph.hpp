#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geode/decoder.hpp"
#include "geode/kdtree.hpp"
#include "geode/metric.hpp"

namespace geode {

struct LatentNode {
  NodeId id = 0;
  Vector z;
  std::optional<std::string> tag;
};

struct Edge {
  NodeId to;
  double weight;
};

/// Undirected weighted k-NN graph over latent nodes. Each undirected edge is
/// stored once per endpoint with the same weight; adjacency lists are kept
/// sorted by neighbour id.
class LatentGraph {
 public:
  LatentGraph(int dim, int k, MetricConfig cfg, std::string digest);

  int dim() const { return dim_; }
  int k() const { return k_; }
  const MetricConfig& metric_config() const { return cfg_; }
  const std::string& metric_digest() const { return digest_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  const std::vector<LatentNode>& nodes() const { return nodes_; }
  const LatentNode& node(NodeId id) const { return nodes_.at(id); }
  std::span<const Edge> neighbors(NodeId id) const { return adjacency_.at(id); }
  std::optional<double> edge_weight(NodeId i, NodeId j) const;
  bool has_edge(NodeId i, NodeId j) const { return edge_weight(i, j).has_value(); }
  const KdTree& tree() const { return tree_; }

  NodeId add_node(Vector z, std::optional<std::string> tag = std::nullopt);
  /// Throws SchemaError on self-loops, duplicates and negative or non-finite weights.
  void add_edge(NodeId i, NodeId j, double weight);

  /// Throws SchemaError describing the first violated graph invariant
  /// (symmetry, self-loops, weights, degree >= k).
  void check_invariants() const;

  /// Same nodes, edges and weights (bit-exact) and the same header fields.
  bool operator==(const LatentGraph& other) const;

 private:
  int dim_;
  int k_;
  MetricConfig cfg_;
  std::string digest_;
  std::vector<LatentNode> nodes_;
  std::vector<std::vector<Edge>> adjacency_;
  std::size_t edge_count_ = 0;
  KdTree tree_;
};

/// Connects every node to its k latent-Euclidean nearest neighbours, weighting
/// each new undirected edge by curve_length under cfg. Edge weights are
/// computed on `workers` threads; the result does not depend on the count.
LatentGraph build_graph(const Decoder& decoder, std::vector<LatentNode> nodes, int k,
                        const MetricConfig& cfg, int workers = 0);

/// Adds z to the graph (unless a node already sits at exactly z) and wires it
/// to its k nearest existing nodes. Returns the node id.
NodeId insert_node(LatentGraph& graph, const Decoder& decoder, const Vector& z, int k,
                   const MetricConfig& cfg);

/// Stream id used to seed the stochastic Jacobian for edge (i, j).
std::uint64_t edge_stream(NodeId i, NodeId j);

nlohmann::json graph_to_json(const LatentGraph& graph);
LatentGraph graph_from_json(const nlohmann::json& doc);
std::string dump_graph(const LatentGraph& graph);
void save_graph(const LatentGraph& graph, const std::filesystem::path& path);
LatentGraph load_graph(const std::filesystem::path& path);

struct LatentsCsvOptions {
  bool header = true;
};

/// Reads `id,z1,...,zN[,tag]` rows. Ids must be a permutation of 0..N-1;
/// nodes come back sorted by id.
std::vector<LatentNode> read_latents_csv(std::istream& in, const LatentsCsvOptions& opts = {});
std::vector<LatentNode> load_latents_csv(const std::filesystem::path& path,
                                         const LatentsCsvOptions& opts = {});
void write_latents_csv(std::ostream& out, std::span<const LatentNode> nodes);

}  // namespace geode
