#include "geode/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "geode/error.hpp"
#include "geode/parallel.hpp"
#include "hash.hpp"

namespace geode {

using nlohmann::json;

LatentGraph::LatentGraph(int dim, int k, MetricConfig cfg, std::string digest)
    : dim_(dim), k_(k), cfg_(cfg), digest_(std::move(digest)) {
  if (dim_ <= 0) throw DimensionError("graph dimension must be positive");
  if (k_ < 1) throw ConfigError("neighbour count k must be >= 1");
}

std::optional<double> LatentGraph::edge_weight(NodeId i, NodeId j) const {
  if (i >= nodes_.size() || j >= nodes_.size()) return std::nullopt;
  const auto& adj = adjacency_[i];
  const auto it = std::lower_bound(adj.begin(), adj.end(), j,
                                   [](const Edge& e, NodeId id) { return e.to < id; });
  if (it == adj.end() || it->to != j) return std::nullopt;
  return it->weight;
}

NodeId LatentGraph::add_node(Vector z, std::optional<std::string> tag) {
  if (z.size() != dim_) {
    throw DimensionError(fmt::format("node has dimension {}, graph dimension is {}", z.size(), dim_));
  }
  if (!z.allFinite()) throw SchemaError(fmt::format("node {} has non-finite coordinates", nodes_.size()));
  const auto id = static_cast<NodeId>(nodes_.size());
  tree_.insert(z);
  nodes_.push_back({id, std::move(z), std::move(tag)});
  adjacency_.emplace_back();
  return id;
}

void LatentGraph::add_edge(NodeId i, NodeId j, double weight) {
  if (i >= nodes_.size() || j >= nodes_.size()) {
    throw SchemaError(fmt::format("edge ({}, {}) references a missing node", i, j));
  }
  if (i == j) throw SchemaError(fmt::format("self-loop on node {}", i));
  if (!std::isfinite(weight) || weight < 0.0) {
    throw SchemaError(fmt::format("edge ({}, {}) has invalid weight {}", i, j, weight));
  }
  if (has_edge(i, j)) throw SchemaError(fmt::format("duplicate edge ({}, {})", i, j));
  const auto place = [](std::vector<Edge>& adj, Edge e) {
    adj.insert(std::lower_bound(adj.begin(), adj.end(), e,
                                [](const Edge& a, const Edge& b) { return a.to < b.to; }),
               e);
  };
  place(adjacency_[i], {j, weight});
  place(adjacency_[j], {i, weight});
  ++edge_count_;
}

void LatentGraph::check_invariants() const {
  for (NodeId i = 0; i < nodes_.size(); ++i) {
    const auto& adj = adjacency_[i];
    for (std::size_t e = 0; e < adj.size(); ++e) {
      const Edge& edge = adj[e];
      if (edge.to == i) throw SchemaError(fmt::format("self-loop on node {}", i));
      if (edge.to >= nodes_.size()) {
        throw SchemaError(fmt::format("node {} links to missing node {}", i, edge.to));
      }
      if (!std::isfinite(edge.weight) || edge.weight < 0.0) {
        throw SchemaError(fmt::format("edge ({}, {}) has invalid weight", i, edge.to));
      }
      if (e > 0 && adj[e - 1].to >= edge.to) {
        throw SchemaError(fmt::format("node {} has duplicate or unsorted neighbours", i));
      }
      const auto back = edge_weight(edge.to, i);
      if (!back || *back != edge.weight) {
        throw SchemaError(fmt::format("symmetry violation on edge ({}, {})", i, edge.to));
      }
    }
    if (nodes_.size() > static_cast<std::size_t>(k_) && adj.size() < static_cast<std::size_t>(k_)) {
      throw SchemaError(fmt::format("node {} has degree {} < k = {}", i, adj.size(), k_));
    }
  }
}

bool LatentGraph::operator==(const LatentGraph& other) const {
  if (dim_ != other.dim_ || k_ != other.k_ || !(cfg_ == other.cfg_) || digest_ != other.digest_ ||
      nodes_.size() != other.nodes_.size() || edge_count_ != other.edge_count_) {
    return false;
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const LatentNode& a = nodes_[i];
    const LatentNode& b = other.nodes_[i];
    if (a.id != b.id || a.tag != b.tag || a.z != b.z) return false;
    const auto& ea = adjacency_[i];
    const auto& eb = other.adjacency_[i];
    if (ea.size() != eb.size()) return false;
    for (std::size_t e = 0; e < ea.size(); ++e) {
      if (ea[e].to != eb[e].to || ea[e].weight != eb[e].weight) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

std::uint64_t edge_stream(NodeId i, NodeId j) {
  const auto lo = static_cast<std::uint64_t>(std::min(i, j));
  const auto hi = static_cast<std::uint64_t>(std::max(i, j));
  return (lo << 32) | hi;
}

namespace {

template <typename Fn>
auto with_edge_context(NodeId i, NodeId j, Fn&& fn) {
  const auto where = [&](const std::exception& e) {
    return fmt::format("edge ({}, {}): {}", i, j, e.what());
  };
  try {
    return fn();
  } catch (const DimensionError& e) {
    throw DimensionError(where(e));
  } catch (const ConfigError& e) {
    throw ConfigError(where(e));
  } catch (const SchemaError& e) {
    throw SchemaError(where(e));
  } catch (const Error& e) {
    throw Error(where(e));
  }
}

void check_decoder_dim(const Decoder& decoder, int dim) {
  if (decoder.input_dim() != dim) {
    throw DimensionError(fmt::format("latent nodes have dimension {}, decoder expects {}", dim,
                                     decoder.input_dim()));
  }
}

}  // namespace

LatentGraph build_graph(const Decoder& decoder, std::vector<LatentNode> nodes, int k,
                        const MetricConfig& cfg, int workers) {
  if (nodes.empty()) throw ConfigError("cannot build a graph without nodes");
  const int dim = static_cast<int>(nodes.front().z.size());
  check_decoder_dim(decoder, dim);
  cfg.validate(dim);
  if (k < 1 || static_cast<std::size_t>(k) >= nodes.size()) {
    throw ConfigError(
        fmt::format("neighbour count k={} must satisfy 1 <= k < node count {}", k, nodes.size()));
  }

  LatentGraph graph(dim, k, cfg, metric_digest(decoder, cfg));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != i) {
      throw SchemaError(fmt::format("node ids must be 0..{} in order; position {} holds id {}",
                                    nodes.size() - 1, i, nodes[i].id));
    }
    if (nodes[i].z.size() != dim) {
      throw DimensionError(fmt::format("node {} has dimension {}, expected {}", i,
                                       nodes[i].z.size(), dim));
    }
    graph.add_node(std::move(nodes[i].z), std::move(nodes[i].tag));
  }

  // Neighbour lists in node order, self excluded.
  const std::size_t n = graph.node_count();
  std::vector<std::vector<NodeId>> neighbours(n);
  parallel_for(n, workers, [&](std::size_t i) {
    const auto hits = graph.tree().knn(graph.node(static_cast<NodeId>(i)).z, k + 1);
    auto& out = neighbours[i];
    for (const Neighbor& hit : hits) {
      if (hit.id != i && out.size() < static_cast<std::size_t>(k)) out.push_back(hit.id);
    }
  });

  // An undirected edge is weighted once, by the first node that lists it.
  std::vector<std::pair<NodeId, NodeId>> pairs;
  std::unordered_set<std::uint64_t> seen;
  for (NodeId i = 0; i < n; ++i) {
    for (NodeId j : neighbours[i]) {
      if (seen.insert(edge_stream(i, j)).second) pairs.emplace_back(i, j);
    }
  }

  std::vector<double> weights(pairs.size());
  parallel_for(pairs.size(), workers, [&](std::size_t e) {
    const auto [i, j] = pairs[e];
    weights[e] = with_edge_context(i, j, [&] {
      return curve_length(decoder, graph.node(i).z, graph.node(j).z, cfg, edge_stream(i, j));
    });
  });

  for (std::size_t e = 0; e < pairs.size(); ++e) {
    graph.add_edge(pairs[e].first, pairs[e].second, weights[e]);
  }
  return graph;
}

NodeId insert_node(LatentGraph& graph, const Decoder& decoder, const Vector& z, int k,
                   const MetricConfig& cfg) {
  if (z.size() != graph.dim()) {
    throw DimensionError(
        fmt::format("query point has dimension {}, graph dimension is {}", z.size(), graph.dim()));
  }
  check_decoder_dim(decoder, graph.dim());
  if (!z.allFinite()) throw DimensionError("query point has non-finite coordinates");
  if (k < 1) throw ConfigError("neighbour count k must be >= 1");
  cfg.validate(graph.dim());

  if (graph.node_count() > 0) {
    const auto same = graph.tree().find_exact(z);
    if (!same.empty()) return same.front();
  }

  const auto hits =
      graph.node_count() > 0
          ? graph.tree().knn(z, std::min<std::size_t>(static_cast<std::size_t>(k), graph.node_count()))
          : std::vector<Neighbor>{};
  const NodeId id = graph.add_node(z);
  for (const Neighbor& hit : hits) {
    const double w = with_edge_context(id, hit.id, [&] {
      return curve_length(decoder, z, graph.node(hit.id).z, cfg, edge_stream(id, hit.id));
    });
    graph.add_edge(id, hit.id, w);
  }
  return id;
}

// ---------------------------------------------------------------------------
// geode-graph-v1

json graph_to_json(const LatentGraph& graph) {
  json nodes = json::array();
  for (const LatentNode& node : graph.nodes()) {
    nodes.push_back({{"id", node.id},
                     {"z", std::vector<double>(node.z.data(), node.z.data() + node.z.size())},
                     {"tag", node.tag ? json(*node.tag) : json(nullptr)}});
  }
  json edges = json::array();
  for (NodeId i = 0; i < graph.node_count(); ++i) {
    for (const Edge& e : graph.neighbors(i)) {
      if (i < e.to) edges.push_back({{"i", i}, {"j", e.to}, {"w", e.weight}});
    }
  }
  return {{"format", "geode-graph-v1"},
          {"dim", graph.dim()},
          {"k", graph.k()},
          {"metric_cfg", metric_config_to_json(graph.metric_config())},
          {"metric_digest", graph.metric_digest()},
          {"nodes", std::move(nodes)},
          {"edges", std::move(edges)}};
}

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(fmt::format("{}missing field '{}'", where, key));
  return *it;
}

NodeId read_id(const json& v, const std::string& where) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw SchemaError(where + "expected a non-negative integer id");
  }
  return v.get<NodeId>();
}

}  // namespace

LatentGraph graph_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("graph file is not a JSON object");
  const json& format = require(doc, "format", "");
  if (!format.is_string() || format != "geode-graph-v1") {
    throw SchemaError("graph file: 'format' must be \"geode-graph-v1\"");
  }
  const json& dim_v = require(doc, "dim", "");
  const json& k_v = require(doc, "k", "");
  if (!dim_v.is_number_integer() || !k_v.is_number_integer()) {
    throw SchemaError("graph file: 'dim' and 'k' must be integers");
  }
  const MetricConfig cfg = metric_config_from_json(require(doc, "metric_cfg", ""));
  std::string digest;
  if (const auto it = doc.find("metric_digest"); it != doc.end() && it->is_string()) {
    digest = it->get<std::string>();
  }

  LatentGraph graph(dim_v.get<int>(), k_v.get<int>(), cfg, digest);
  const json& nodes = require(doc, "nodes", "");
  if (!nodes.is_array()) throw SchemaError("graph file: 'nodes' must be an array");
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const std::string where = fmt::format("nodes[{}]: ", n);
    const json& node = nodes[n];
    if (!node.is_object()) throw SchemaError(where + "not an object");
    if (read_id(require(node, "id", where), where) != n) {
      throw SchemaError(where + "ids must be 0..N-1 in order");
    }
    const json& z = require(node, "z", where);
    if (!z.is_array() || z.size() != static_cast<std::size_t>(graph.dim())) {
      throw SchemaError(fmt::format("{}'z' must hold {} numbers", where, graph.dim()));
    }
    Vector coords(graph.dim());
    for (int d = 0; d < graph.dim(); ++d) {
      if (!z[d].is_number()) throw SchemaError(where + "'z' holds a non-number");
      coords[d] = z[d].get<double>();
    }
    std::optional<std::string> tag;
    if (const auto it = node.find("tag"); it != node.end() && !it->is_null()) {
      if (!it->is_string()) throw SchemaError(where + "'tag' must be a string or null");
      tag = it->get<std::string>();
    }
    graph.add_node(std::move(coords), std::move(tag));
  }

  const json& edges = require(doc, "edges", "");
  if (!edges.is_array()) throw SchemaError("graph file: 'edges' must be an array");
  struct Entry {
    NodeId i, j;
    double w;
    std::size_t index;
  };
  std::vector<Entry> forward;
  std::vector<Entry> reverse;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::string where = fmt::format("edges[{}]: ", e);
    const json& edge = edges[e];
    if (!edge.is_object()) throw SchemaError(where + "not an object");
    const NodeId i = read_id(require(edge, "i", where), where);
    const NodeId j = read_id(require(edge, "j", where), where);
    const json& w = require(edge, "w", where);
    if (!w.is_number()) throw SchemaError(where + "'w' must be a number");
    if (i >= graph.node_count() || j >= graph.node_count()) {
      throw SchemaError(fmt::format("{}references missing node", where));
    }
    if (i == j) throw SchemaError(fmt::format("{}self-loop on node {}", where, i));
    (i < j ? forward : reverse).push_back({i, j, w.get<double>(), e});
  }
  for (const Entry& e : forward) {
    if (graph.has_edge(e.i, e.j)) {
      throw SchemaError(fmt::format("edges[{}]: duplicate edge ({}, {})", e.index, e.i, e.j));
    }
    try {
      graph.add_edge(e.i, e.j, e.w);
    } catch (const SchemaError& err) {
      throw SchemaError(fmt::format("edges[{}]: {}", e.index, err.what()));
    }
  }
  // Mirrored entries are tolerated only when they repeat a canonical edge exactly.
  for (const Entry& e : reverse) {
    const auto w = graph.edge_weight(e.j, e.i);
    if (!w || *w != e.w) {
      throw SchemaError(fmt::format("edges[{}]: symmetry violation, ({}, {}) with w={} has no "
                                    "matching ({}, {}) entry",
                                    e.index, e.i, e.j, e.w, e.j, e.i));
    }
  }
  graph.check_invariants();
  return graph;
}

std::string dump_graph(const LatentGraph& graph) { return graph_to_json(graph).dump() + "\n"; }

void save_graph(const LatentGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(fmt::format("cannot write graph file '{}'", path.string()));
  out << dump_graph(graph);
  if (!out) throw IoError(fmt::format("failed writing graph file '{}'", path.string()));
}

LatentGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open graph file '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  try {
    return graph_from_json(doc);
  } catch (const SchemaError& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const DimensionError& e) {
    throw DimensionError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

// ---------------------------------------------------------------------------
// Latent-node CSV

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    std::string_view field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
      field.remove_suffix(1);
    }
    out.push_back(field);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::optional<double> parse_real(std::string_view s) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

}  // namespace

std::vector<LatentNode> read_latents_csv(std::istream& in, const LatentsCsvOptions& opts) {
  std::vector<LatentNode> nodes;
  std::string line;
  std::size_t line_no = 0;
  int dim = -1;
  bool has_tag_column = false;

  if (opts.header) {
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line != "\r") break;
    }
    const auto cols = split_fields(line);
    if (cols.size() < 2 || cols.front() != "id") {
      throw SchemaError(fmt::format("line {}: header must start with 'id' followed by z columns",
                                    line_no));
    }
    has_tag_column = cols.back() == "tag";
    dim = static_cast<int>(cols.size()) - 1 - (has_tag_column ? 1 : 0);
    if (dim < 1) throw SchemaError(fmt::format("line {}: header names no latent columns", line_no));
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_fields(line);
    const auto id = parse_real(fields.front());
    if (!id || *id < 0 || *id != std::floor(*id)) {
      throw SchemaError(fmt::format("line {}: invalid node id '{}'", line_no, fields.front()));
    }
    std::size_t value_count = fields.size() - 1;
    std::optional<std::string> tag;
    if (opts.header) {
      if (has_tag_column && value_count > 0) {
        --value_count;
        if (!fields.back().empty()) tag = std::string(fields.back());
      }
    } else if (value_count > 0 && !parse_real(fields.back())) {
      --value_count;
      tag = std::string(fields.back());
    }
    if (dim < 0) dim = static_cast<int>(value_count);
    if (value_count != static_cast<std::size_t>(dim) || dim < 1) {
      throw DimensionError(fmt::format("line {}: expected {} latent values, found {}", line_no,
                                       dim, value_count));
    }
    Vector z(dim);
    for (int d = 0; d < dim; ++d) {
      const auto v = parse_real(fields[1 + d]);
      if (!v || !std::isfinite(*v)) {
        throw SchemaError(fmt::format("line {}: column {} is not a finite number", line_no, d + 2));
      }
      z[d] = *v;
    }
    nodes.push_back({static_cast<NodeId>(*id), std::move(z), std::move(tag)});
  }

  std::sort(nodes.begin(), nodes.end(),
            [](const LatentNode& a, const LatentNode& b) { return a.id < b.id; });
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].id != i) {
      throw SchemaError(fmt::format("node ids must be unique and contiguous from 0; id {} is {}",
                                    i, i < nodes[i].id ? "missing" : "repeated"));
    }
  }
  return nodes;
}

std::vector<LatentNode> load_latents_csv(const std::filesystem::path& path,
                                         const LatentsCsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open latents file '{}'", path.string()));
  try {
    return read_latents_csv(in, opts);
  } catch (const SchemaError& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  } catch (const DimensionError& e) {
    throw DimensionError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_latents_csv(std::ostream& out, std::span<const LatentNode> nodes) {
  if (nodes.empty()) return;
  const auto dim = nodes.front().z.size();
  bool tags = false;
  for (const auto& n : nodes) tags = tags || n.tag.has_value();
  out << "id";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",z" << d + 1;
  out << (tags ? ",tag\n" : "\n");
  for (const auto& n : nodes) {
    out << n.id;
    for (Eigen::Index d = 0; d < dim; ++d) out << fmt::format(",{:.17g}", n.z[d]);
    if (tags) out << ',' << n.tag.value_or("");
    out << '\n';
  }
}

}  // namespace geode
