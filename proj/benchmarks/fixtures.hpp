#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "geode/decoder.hpp"
#include "geode/graph.hpp"

namespace geode::bench {

inline std::vector<Vector> cloud(std::size_t n, int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Vector> out(n, Vector(dim));
  for (Vector& v : out) {
    for (int d = 0; d < dim; ++d) v[d] = u(rng);
  }
  return out;
}

inline std::vector<LatentNode> nodes(std::size_t n, int dim, std::uint64_t seed) {
  std::vector<LatentNode> out;
  const auto pts = cloud(n, dim, seed);
  for (std::size_t i = 0; i < n; ++i) out.push_back({static_cast<NodeId>(i), pts[i], std::nullopt});
  return out;
}

// tanh MLP dim -> 32 -> 32 -> 16 with seeded Gaussian weights.
inline DecoderModel mlp(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int widths[] = {dim, 32, 32, 16};
  std::vector<DenseLayer> layers;
  for (int l = 0; l < 3; ++l) {
    DenseLayer layer;
    layer.cols = widths[l];
    layer.rows = widths[l + 1];
    std::normal_distribution<double> w(0.0, 1.0 / std::sqrt(static_cast<double>(layer.cols)));
    layer.weights = RowMajorMatrix(layer.rows, layer.cols);
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) layer.weights.data()[i] = w(rng);
    layer.bias = Vector::Zero(layer.rows);
    layer.activation = l == 2 ? Activation::identity : Activation::tanh;
    layers.push_back(std::move(layer));
  }
  return DecoderModel(dim, 16, std::move(layers));
}

}  // namespace geode::bench
