#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace geode {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A deterministic map f from latent space R^input_dim to observation
/// space R^output_dim. Implementations are immutable and safe to evaluate
/// from many threads at once.
class Decoder {
 public:
  virtual ~Decoder() = default;

  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;

  /// Evaluates f on every column of `latents` (input_dim x B) and returns the
  /// observations as columns (output_dim x B). Column b of the result is
  /// bit-identical to forward(latents.col(b)).
  virtual Matrix forward_columns(const Matrix& latents) const = 0;

  /// Exact Jacobian when the decoder has one in closed form.
  virtual std::optional<Matrix> analytic_jacobian(const Vector& z) const;

  /// Stable identity string covering every parameter that affects f.
  virtual std::string fingerprint() const = 0;

  Vector forward(const Vector& z) const;

  /// List form of forward_columns; a length mismatch is reported with the
  /// offending row index.
  std::vector<Vector> forward_batch(std::span<const Vector> latents) const;

 protected:
  void check_input(const Matrix& latents) const;
};

enum class Activation { identity, relu, tanh, sigmoid, softplus };

std::optional<Activation> parse_activation(std::string_view name);
std::string_view activation_name(Activation act);

struct DenseLayer {
  int rows = 0;
  int cols = 0;
  RowMajorMatrix weights;
  Vector bias;
  Activation activation = Activation::identity;
};

/// Feed-forward decoder read from a geode-decoder-v1 weight file.
class DecoderModel final : public Decoder {
 public:
  /// Validates layer chaining and finiteness; throws SchemaError naming the
  /// first offending layer.
  DecoderModel(int input_dim, int output_dim, std::vector<DenseLayer> layers);

  int input_dim() const override { return input_dim_; }
  int output_dim() const override { return output_dim_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }

  Matrix forward_columns(const Matrix& latents) const override;
  std::string fingerprint() const override;

 private:
  int input_dim_;
  int output_dim_;
  std::vector<DenseLayer> layers_;
  std::size_t widest_;
};

DecoderModel parse_decoder(const nlohmann::json& doc);
DecoderModel load_decoder(const std::filesystem::path& path);
nlohmann::json decoder_to_json(const DecoderModel& model);
void save_decoder(const DecoderModel& model, const std::filesystem::path& path);

/// Closed-form test decoders with exact Jacobians.
class AnalyticDecoder final : public Decoder {
 public:
  enum class Kind { linear, parabola, sine_ridge };

  static AnalyticDecoder linear(Matrix w);
  static AnalyticDecoder identity(int dim);
  /// f(z1, z2) = (z1, z2, a * z1^2)
  static AnalyticDecoder parabola(double a);
  /// f(z1, z2) = (z1, z2, amplitude * sin(frequency * z1))
  static AnalyticDecoder sine_ridge(double amplitude, double frequency);

  Kind kind() const { return kind_; }
  int input_dim() const override;
  int output_dim() const override;

  Matrix forward_columns(const Matrix& latents) const override;
  std::optional<Matrix> analytic_jacobian(const Vector& z) const override;
  std::string fingerprint() const override;

 private:
  AnalyticDecoder(Kind kind, Matrix w, double p0, double p1);

  Kind kind_;
  Matrix w_;
  double p0_;
  double p1_;
};

}  // namespace geode
