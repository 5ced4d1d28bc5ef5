#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "geode/decoder.hpp"
#include "geode/graph.hpp"
#include "geode/kdtree.hpp"

namespace geode::oracle {

/// Uniform points in [lo, hi]^dim from a seeded generator.
std::vector<Vector> uniform_cloud(std::size_t n, int dim, double lo, double hi, std::uint64_t seed);
std::vector<LatentNode> as_nodes(const std::vector<Vector>& points);

/// Brute-force k nearest, ascending by (squared distance, id).
std::vector<Neighbor> brute_knn(const std::vector<Vector>& points, const Vector& q, std::size_t k);

/// Central differences with the textbook 2h denominator.
Matrix central_jacobian(const Decoder& decoder, const Vector& z, double h);

/// Midpoint-rule length of the straight segment a -> b built directly from
/// the analytic Jacobian, with `n` sampling points.
double analytic_length(const Decoder& decoder, const Vector& a, const Vector& b, long n);

/// ∫_{-1}^{1} √(1 + 4 a² u²) du in closed form (parabola arc over z1 in [-1, 1]).
double parabola_arc(double a);

/// Single-source shortest distances on the graph (∞ if unreachable).
std::vector<double> all_distances(const LatentGraph& graph, NodeId source);

/// Every simple path between two nodes with its weight sum.
struct SimplePath {
  std::vector<NodeId> nodes;
  double length;
};
std::vector<SimplePath> enumerate_paths(const LatentGraph& graph, NodeId from, NodeId to);

/// Random geode-decoder-v1 MLP with the given widths (tanh hidden, identity out).
DecoderModel random_mlp(const std::vector<int>& widths, std::uint64_t seed,
                        Activation hidden = Activation::tanh);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& stem);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace geode::oracle
