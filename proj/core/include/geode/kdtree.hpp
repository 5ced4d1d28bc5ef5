#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "geode/decoder.hpp"

namespace geode {

using NodeId = std::uint32_t;

struct Neighbor {
  NodeId id;
  double distance;  // latent Euclidean

  bool operator==(const Neighbor&) const = default;
};

/// Exact k-nearest-neighbour index over latent points. Point ids are their
/// insertion order. The tree is balanced (median splits, axes cycling through
/// the dimensions); points added after the last rebuild live in a side buffer
/// that is scanned linearly until it grows large enough to trigger a rebuild.
class KdTree {
 public:
  KdTree() = default;

  /// Throws DimensionError if the points disagree in dimension.
  explicit KdTree(std::span<const Vector> points);

  int dim() const { return dim_; }
  std::size_t size() const { return count_; }

  /// Appends a point with id size() and returns that id.
  NodeId insert(const Vector& z);

  /// Exact k nearest points, ascending by (distance, id). A query equal to a
  /// stored point returns that point at distance 0.
  std::vector<Neighbor> knn(const Vector& z, std::size_t k) const;

  /// Ids of stored points bit-equal to z, ascending.
  std::vector<NodeId> find_exact(const Vector& z) const;

  std::size_t buffered() const { return count_ - indexed_; }

 private:
  struct Candidate {
    double dist2;
    NodeId id;
    bool operator<(const Candidate& o) const {
      return dist2 < o.dist2 || (dist2 == o.dist2 && id < o.id);
    }
  };

  const double* point(NodeId id) const { return coords_.data() + static_cast<std::size_t>(id) * dim_; }
  double dist2(const double* q, NodeId id) const;
  void rebuild();
  void build_range(std::size_t lo, std::size_t hi, int depth);
  void search(const double* q, std::size_t lo, std::size_t hi, int depth, std::size_t k,
              std::vector<Candidate>& heap) const;
  static void offer(std::vector<Candidate>& heap, std::size_t k, Candidate c);

  int dim_ = 0;
  std::size_t count_ = 0;
  std::size_t indexed_ = 0;      // order_[0, indexed_) forms the balanced tree
  std::vector<double> coords_;   // count_ x dim_, row-major
  std::vector<NodeId> order_;    // implicit tree layout; the median of a range is its root
};

}  // namespace geode
