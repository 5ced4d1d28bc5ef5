#include "geode/metric.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <fmt/format.h>

#include "geode/error.hpp"
#include "geode/parallel.hpp"
#include "hash.hpp"

namespace geode {

using nlohmann::json;

void MetricConfig::validate(int input_dim) const {
  if (!(fd_step > 0.0 && fd_step < 1.0)) {
    throw ConfigError(fmt::format("fd_step must lie in (0, 1), got {}", fd_step));
  }
  if (!(stoch_sigma > 0.0 && stoch_sigma < 1.0)) {
    throw ConfigError(fmt::format("stoch_sigma must lie in (0, 1), got {}", stoch_sigma));
  }
  if (curve_samples < 1) {
    throw ConfigError(fmt::format("curve_samples must be >= 1, got {}", curve_samples));
  }
  if (stoch_samples < 1) {
    throw ConfigError(fmt::format("stoch_samples must be >= 1, got {}", stoch_samples));
  }
  if (jacobian_mode == JacobianMode::stochastic && stoch_samples < input_dim) {
    throw ConfigError(fmt::format(
        "stochastic Jacobian needs at least {} samples (latent dimension), got {}", input_dim,
        stoch_samples));
  }
}

json metric_config_to_json(const MetricConfig& cfg) {
  return {{"jacobian_mode",
           cfg.jacobian_mode == JacobianMode::stochastic ? "stochastic" : "finite_difference"},
          {"fd_step", cfg.fd_step},
          {"stoch_sigma", cfg.stoch_sigma},
          {"stoch_samples", cfg.stoch_samples},
          {"curve_samples", cfg.curve_samples},
          {"rng_seed", cfg.rng_seed}};
}

MetricConfig metric_config_from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("metric_cfg must be an object");
  MetricConfig cfg;
  try {
    const std::string mode = doc.at("jacobian_mode").get<std::string>();
    if (mode == "finite_difference") {
      cfg.jacobian_mode = JacobianMode::finite_difference;
    } else if (mode == "stochastic") {
      cfg.jacobian_mode = JacobianMode::stochastic;
    } else {
      throw SchemaError(fmt::format("metric_cfg: unknown jacobian_mode '{}'", mode));
    }
    cfg.fd_step = doc.at("fd_step").get<double>();
    cfg.stoch_sigma = doc.at("stoch_sigma").get<double>();
    cfg.stoch_samples = doc.at("stoch_samples").get<int>();
    cfg.curve_samples = doc.at("curve_samples").get<int>();
    cfg.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw SchemaError(fmt::format("metric_cfg: {}", e.what()));
  }
  return cfg;
}

std::string metric_digest(const Decoder& decoder, const MetricConfig& cfg) {
  detail::Fnv1a h;
  h.text(decoder.fingerprint());
  h.text("|");
  h.text(metric_config_to_json(cfg).dump());
  return fmt::format("{:016x}", h.value());
}

// ---------------------------------------------------------------------------

namespace {

void check_latent(const Decoder& decoder, const Vector& z) {
  if (z.size() != decoder.input_dim()) {
    throw DimensionError(fmt::format("latent vector has dimension {}, decoder expects {}",
                                     z.size(), decoder.input_dim()));
  }
}

// Writes the 2*dim central-difference probes of z into cols [offset, offset + 2*dim).
void fill_fd_probes(const Vector& z, double h, Matrix& probes, Eigen::Index offset,
                    Vector& steps) {
  const Eigen::Index dim = z.size();
  for (Eigen::Index j = 0; j < dim; ++j) {
    auto plus = probes.col(offset + 2 * j);
    auto minus = probes.col(offset + 2 * j + 1);
    plus = z;
    minus = z;
    plus[j] += h;
    minus[j] -= h;
    steps[j] = plus[j] - minus[j];
  }
}

Matrix fd_from_outputs(const Matrix& out, Eigen::Index offset, const Vector& steps) {
  const Eigen::Index dim = steps.size();
  Matrix j(out.rows(), dim);
  for (Eigen::Index c = 0; c < dim; ++c) {
    j.col(c) = (out.col(offset + 2 * c) - out.col(offset + 2 * c + 1)) / steps[c];
  }
  return j;
}

double speed(const Matrix& j, const Vector& dz) {
  const Matrix g = metric_tensor(j).g;
  const double q = dz.dot(g * dz);
  return q < 0.0 ? 0.0 : std::sqrt(q);
}

}  // namespace

Matrix jacobian_fd(const Decoder& decoder, const Vector& z, double h) {
  check_latent(decoder, z);
  if (!(h > 0.0)) throw ConfigError(fmt::format("finite-difference step must be > 0, got {}", h));
  Matrix probes(z.size(), 2 * z.size());
  Vector steps(z.size());
  fill_fd_probes(z, h, probes, 0, steps);
  return fd_from_outputs(decoder.forward_columns(probes), 0, steps);
}

Matrix jacobian_stochastic(const Decoder& decoder, const Vector& z, const MetricConfig& cfg,
                           std::uint64_t stream) {
  check_latent(decoder, z);
  const int dim = decoder.input_dim();
  if (cfg.stoch_samples < dim) {
    throw ConfigError(fmt::format(
        "stochastic Jacobian needs at least {} samples (latent dimension), got {}", dim,
        cfg.stoch_samples));
  }
  if (!(cfg.stoch_sigma > 0.0)) throw ConfigError("stoch_sigma must be > 0");

  std::mt19937_64 rng(detail::splitmix64(cfg.rng_seed ^ detail::splitmix64(stream)));
  std::normal_distribution<double> normal(0.0, cfg.stoch_sigma);

  const Vector base = decoder.forward(z);
  Matrix acc = Matrix::Zero(decoder.output_dim(), dim);

  constexpr int kChunk = 1024;
  Matrix eps(dim, kChunk);
  Matrix probes(dim, kChunk);
  for (int done = 0; done < cfg.stoch_samples; done += kChunk) {
    const int count = std::min(kChunk, cfg.stoch_samples - done);
    for (int k = 0; k < count; ++k) {
      for (int d = 0; d < dim; ++d) eps(d, k) = normal(rng);
      probes.col(k) = z + eps.col(k);
    }
    Matrix out = decoder.forward_columns(probes.leftCols(count));
    out.colwise() -= base;
    acc.noalias() += out * eps.leftCols(count).transpose();
  }
  return acc / (static_cast<double>(cfg.stoch_samples) * cfg.stoch_sigma * cfg.stoch_sigma);
}

Matrix jacobian(const Decoder& decoder, const Vector& z, const MetricConfig& cfg,
                std::uint64_t stream) {
  if (cfg.jacobian_mode == JacobianMode::stochastic) {
    return jacobian_stochastic(decoder, z, cfg, stream);
  }
  return jacobian_fd(decoder, z, cfg.fd_step);
}

bool MetricTensor::is_symmetric(double tol) const {
  return g.rows() == g.cols() && ((g - g.transpose()).cwiseAbs().maxCoeff() <= tol);
}

double MetricTensor::min_eigenvalue() const {
  const Matrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

MetricTensor metric_tensor(const Matrix& j) {
  const Matrix g = j.transpose() * j;
  return {0.5 * (g + g.transpose())};
}

double velocity(const Decoder& decoder, const Vector& z, const Vector& dz,
                const MetricConfig& cfg, std::uint64_t stream) {
  check_latent(decoder, z);
  check_latent(decoder, dz);
  if (dz.isZero(0.0)) return 0.0;
  return speed(jacobian(decoder, z, cfg, stream), dz);
}

double curve_length(const Decoder& decoder, const CurveSegment& seg, const MetricConfig& cfg,
                    std::uint64_t stream) {
  check_latent(decoder, seg.a);
  check_latent(decoder, seg.b);
  if (seg.samples < 1) throw ConfigError("curve segment needs at least one sampling point");
  const Vector dz = seg.b - seg.a;
  if (dz.isZero(0.0)) return 0.0;

  const int n = seg.samples;
  const auto point = [&](int i) -> Vector {
    const double t = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    return seg.a + t * dz;
  };

  // Neumaier summation keeps long sums of near-equal speeds accurate.
  double sum = 0.0, carry = 0.0;
  const auto add = [&](double v) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  };
  if (cfg.jacobian_mode == JacobianMode::stochastic) {
    for (int i = 0; i < n; ++i) {
      const std::uint64_t sub = detail::splitmix64(stream) ^ static_cast<std::uint64_t>(i);
      add(speed(jacobian_stochastic(decoder, point(i), cfg, sub), dz));
    }
    return (sum + carry) / static_cast<double>(n);
  }

  // All probes of a chunk of sampling points go through one batched call.
  const Eigen::Index dim = seg.a.size();
  constexpr int kChunk = 256;
  Matrix probes(dim, 2 * dim * std::min(n, kChunk));
  std::vector<Vector> chunk_steps(std::min(n, kChunk), Vector(dim));
  for (int first = 0; first < n; first += kChunk) {
    const int count = std::min(kChunk, n - first);
    for (int p = 0; p < count; ++p) {
      fill_fd_probes(point(first + p), cfg.fd_step, probes, 2 * dim * p, chunk_steps[p]);
    }
    const Matrix out = decoder.forward_columns(probes.leftCols(2 * dim * count));
    for (int p = 0; p < count; ++p) {
      add(speed(fd_from_outputs(out, 2 * dim * p, chunk_steps[p]), dz));
    }
  }
  return (sum + carry) / static_cast<double>(n);
}

double curve_length(const Decoder& decoder, const Vector& a, const Vector& b,
                    const MetricConfig& cfg, std::uint64_t stream) {
  return curve_length(decoder, CurveSegment{a, b, cfg.curve_samples}, cfg, stream);
}

double magnification_factor(const Decoder& decoder, const Vector& z, const MetricConfig& cfg,
                            std::uint64_t stream) {
  if (decoder.input_dim() > kMaxDeterminantDim) {
    throw DimensionError(fmt::format("magnification factor supports latent dimension <= {}, got {}",
                                     kMaxDeterminantDim, decoder.input_dim()));
  }
  const Matrix g = metric_tensor(jacobian(decoder, z, cfg, stream)).g;
  const double det = g.determinant();
  return det < 0.0 ? 0.0 : std::sqrt(det);
}

// ---------------------------------------------------------------------------

double MfGrid::x_center(int col) const {
  return bounds.xmin + (col + 0.5) * (bounds.xmax - bounds.xmin) / resolution;
}

double MfGrid::y_center(int row) const {
  return bounds.ymin + (row + 0.5) * (bounds.ymax - bounds.ymin) / resolution;
}

MfGrid mf_grid(const Decoder& decoder, const GridBounds& bounds, int resolution,
               const MetricConfig& cfg, int workers) {
  if (decoder.input_dim() != 2) {
    throw DimensionError(fmt::format(
        "magnification grid needs a two-dimensional latent space, decoder has {}",
        decoder.input_dim()));
  }
  if (resolution < 1) throw ConfigError("grid resolution must be >= 1");
  if (!(bounds.xmax > bounds.xmin) || !(bounds.ymax > bounds.ymin)) {
    throw ConfigError("grid bounds must satisfy xmin < xmax and ymin < ymax");
  }
  MfGrid grid{bounds, resolution, {}};
  grid.values.resize(static_cast<std::size_t>(resolution) * resolution);
  parallel_for(grid.values.size(), workers, [&](std::size_t cell) {
    const int row = static_cast<int>(cell / resolution);
    const int col = static_cast<int>(cell % resolution);
    const Vector z = (Vector(2) << grid.x_center(col), grid.y_center(row)).finished();
    grid.values[cell] = magnification_factor(decoder, z, cfg, cell);
  });
  return grid;
}

void write_mf_csv(std::ostream& out, const MfGrid& grid) {
  out << "z1,z2,mf\n";
  for (int row = 0; row < grid.resolution; ++row) {
    for (int col = 0; col < grid.resolution; ++col) {
      out << fmt::format("{:.17g},{:.17g},{:.17g}\n", grid.x_center(col), grid.y_center(row),
                         grid.at(row, col));
    }
  }
}

}  // namespace geode
