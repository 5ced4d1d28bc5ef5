#include "geode/kdtree.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "geode/error.hpp"

namespace geode {

namespace {

constexpr std::size_t kLeafSize = 8;
constexpr std::size_t kMinBuffer = 32;

}  // namespace

KdTree::KdTree(std::span<const Vector> points) {
  if (points.empty()) return;
  dim_ = static_cast<int>(points.front().size());
  if (dim_ == 0) throw DimensionError("k-d tree points must have dimension >= 1");
  coords_.reserve(points.size() * dim_);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != dim_) {
      throw DimensionError(fmt::format("point {} has dimension {}, expected {}", i,
                                       points[i].size(), dim_));
    }
    coords_.insert(coords_.end(), points[i].data(), points[i].data() + dim_);
  }
  count_ = points.size();
  rebuild();
}

NodeId KdTree::insert(const Vector& z) {
  if (count_ == 0 && dim_ == 0) dim_ = static_cast<int>(z.size());
  if (z.size() != dim_) {
    throw DimensionError(fmt::format("inserted point has dimension {}, expected {}", z.size(), dim_));
  }
  coords_.insert(coords_.end(), z.data(), z.data() + dim_);
  const auto id = static_cast<NodeId>(count_++);
  const auto threshold = std::max<std::size_t>(
      kMinBuffer, static_cast<std::size_t>(std::sqrt(static_cast<double>(count_))));
  if (buffered() > threshold) rebuild();
  return id;
}

double KdTree::dist2(const double* q, NodeId id) const {
  const double* p = point(id);
  double acc = 0.0;
  for (int d = 0; d < dim_; ++d) {
    const double diff = q[d] - p[d];
    acc += diff * diff;
  }
  return acc;
}

void KdTree::rebuild() {
  order_.resize(count_);
  for (std::size_t i = 0; i < count_; ++i) order_[i] = static_cast<NodeId>(i);
  indexed_ = count_;
  build_range(0, indexed_, 0);
}

void KdTree::build_range(std::size_t lo, std::size_t hi, int depth) {
  if (hi - lo <= kLeafSize) return;
  const int axis = depth % dim_;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                   [&](NodeId a, NodeId b) {
                     const double va = point(a)[axis];
                     const double vb = point(b)[axis];
                     return va < vb || (va == vb && a < b);
                   });
  build_range(lo, mid, depth + 1);
  build_range(mid + 1, hi, depth + 1);
}

void KdTree::offer(std::vector<Candidate>& heap, std::size_t k, Candidate c) {
  if (heap.size() < k) {
    heap.push_back(c);
    std::push_heap(heap.begin(), heap.end());
  } else if (c < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = c;
    std::push_heap(heap.begin(), heap.end());
  }
}

void KdTree::search(const double* q, std::size_t lo, std::size_t hi, int depth, std::size_t k,
                    std::vector<Candidate>& heap) const {
  if (hi - lo <= kLeafSize) {
    for (std::size_t i = lo; i < hi; ++i) offer(heap, k, {dist2(q, order_[i]), order_[i]});
    return;
  }
  const int axis = depth % dim_;
  const std::size_t mid = lo + (hi - lo) / 2;
  const NodeId root = order_[mid];
  offer(heap, k, {dist2(q, root), root});

  // Left range holds coordinates <= split, right range >= split.
  const double diff = q[axis] - point(root)[axis];
  const bool go_left = diff <= 0.0;
  if (go_left) {
    search(q, lo, mid, depth + 1, k, heap);
  } else {
    search(q, mid + 1, hi, depth + 1, k, heap);
  }
  // A point across the plane is at least diff^2 away; equal distance can
  // still win on the id tie-break, so only strictly farther planes prune.
  if (heap.size() < k || diff * diff <= heap.front().dist2) {
    if (go_left) {
      search(q, mid + 1, hi, depth + 1, k, heap);
    } else {
      search(q, lo, mid, depth + 1, k, heap);
    }
  }
}

std::vector<Neighbor> KdTree::knn(const Vector& z, std::size_t k) const {
  if (z.size() != dim_) {
    throw DimensionError(fmt::format("query has dimension {}, expected {}", z.size(), dim_));
  }
  if (k > count_) {
    throw ConfigError(fmt::format("requested {} neighbours but only {} points are stored", k,
                                  count_));
  }
  std::vector<Candidate> heap;
  heap.reserve(k + 1);
  if (k > 0) {
    search(z.data(), 0, indexed_, 0, k, heap);
    for (std::size_t i = indexed_; i < count_; ++i) {
      const auto id = static_cast<NodeId>(i);
      offer(heap, k, {dist2(z.data(), id), id});
    }
  }
  std::sort_heap(heap.begin(), heap.end());
  std::vector<Neighbor> out;
  out.reserve(heap.size());
  for (const Candidate& c : heap) out.push_back({c.id, std::sqrt(c.dist2)});
  return out;
}

std::vector<NodeId> KdTree::find_exact(const Vector& z) const {
  std::vector<NodeId> out;
  if (count_ == 0) return out;
  // Every exact match is at distance 0, so widen the query until the last
  // returned neighbour is strictly farther.
  for (std::size_t k = 1;; k = std::min(count_, 2 * k)) {
    const auto hits = knn(z, k);
    out.clear();
    for (const Neighbor& n : hits) {
      if (n.distance != 0.0) break;
      if (std::equal(z.data(), z.data() + dim_, point(n.id))) out.push_back(n.id);
    }
    if (hits.back().distance != 0.0 || k == count_) break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace geode
