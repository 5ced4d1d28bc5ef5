#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "geode/decoder.hpp"

namespace geode {

enum class JacobianMode { finite_difference, stochastic };

struct MetricConfig {
  JacobianMode jacobian_mode = JacobianMode::finite_difference;
  double fd_step = 1e-5;       // central-difference step
  double stoch_sigma = 1e-3;   // perturbation scale of the stochastic estimator
  int stoch_samples = 1000;    // Monte-Carlo draws per Jacobian
  int curve_samples = 32;      // sampling points per straight segment
  std::uint64_t rng_seed = 0;

  /// Throws ConfigError when a field is out of range for a decoder with
  /// `input_dim` latent dimensions.
  void validate(int input_dim) const;

  bool operator==(const MetricConfig&) const = default;
};

nlohmann::json metric_config_to_json(const MetricConfig& cfg);
MetricConfig metric_config_from_json(const nlohmann::json& doc);

/// Digest binding a graph's edge weights to the decoder and metric settings
/// that produced them.
std::string metric_digest(const Decoder& decoder, const MetricConfig& cfg);

/// Central differences, column j = (f(z + h e_j) - f(z - h e_j)) / step_j,
/// where step_j is the representable distance between the two probes.
Matrix jacobian_fd(const Decoder& decoder, const Vector& z, double h);

/// Ĵ = 1/(m σ²) Σ_k (f(z + ε_k) - f(z)) ε_kᵀ, ε_k ~ N(0, σ² I). The draws are
/// a pure function of (cfg.rng_seed, stream).
Matrix jacobian_stochastic(const Decoder& decoder, const Vector& z, const MetricConfig& cfg,
                           std::uint64_t stream = 0);

/// Dispatches on cfg.jacobian_mode.
Matrix jacobian(const Decoder& decoder, const Vector& z, const MetricConfig& cfg,
                std::uint64_t stream = 0);

struct MetricTensor {
  Matrix g;

  bool is_symmetric(double tol = 1e-12) const;
  double min_eigenvalue() const;
};

/// G = JᵀJ, symmetrized.
MetricTensor metric_tensor(const Matrix& j);

/// Riemannian speed √(dzᵀ G(z) dz).
double velocity(const Decoder& decoder, const Vector& z, const Vector& dz,
                const MetricConfig& cfg, std::uint64_t stream = 0);

struct CurveSegment {
  Vector a;
  Vector b;
  int samples = 1;
};

/// Midpoint-rule length of the straight latent segment a -> b:
/// (1/n) Σ_i φ(t_i), t_i = (i - 1/2)/n, with γ̇ = b - a.
double curve_length(const Decoder& decoder, const CurveSegment& seg, const MetricConfig& cfg,
                    std::uint64_t stream = 0);
double curve_length(const Decoder& decoder, const Vector& a, const Vector& b,
                    const MetricConfig& cfg, std::uint64_t stream = 0);

inline constexpr int kMaxDeterminantDim = 64;

/// √det G(z), negative determinants from round-off clamp to zero.
double magnification_factor(const Decoder& decoder, const Vector& z, const MetricConfig& cfg,
                            std::uint64_t stream = 0);

struct GridBounds {
  double xmin = -1.0;
  double xmax = 1.0;
  double ymin = -1.0;
  double ymax = 1.0;
};

struct MfGrid {
  GridBounds bounds;
  int resolution = 0;
  std::vector<double> values;  // row-major, row = z2 index, column = z1 index

  double x_center(int col) const;
  double y_center(int row) const;
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * resolution + col]; }
};

/// Magnification factor at the cell centers of a resolution x resolution grid
/// over a two-dimensional latent box.
MfGrid mf_grid(const Decoder& decoder, const GridBounds& bounds, int resolution,
               const MetricConfig& cfg, int workers = 1);

/// CSV with header `z1,z2,mf`, 17 significant digits.
void write_mf_csv(std::ostream& out, const MfGrid& grid);

}  // namespace geode
