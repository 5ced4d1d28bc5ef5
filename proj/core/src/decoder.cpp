#include "geode/decoder.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "geode/error.hpp"
#include "hash.hpp"

namespace geode {

using nlohmann::json;

std::optional<Matrix> Decoder::analytic_jacobian(const Vector&) const { return std::nullopt; }

void Decoder::check_input(const Matrix& latents) const {
  if (latents.rows() != input_dim()) {
    throw DimensionError(fmt::format("decoder expects latent dimension {}, got {}", input_dim(),
                                     latents.rows()));
  }
}

Vector Decoder::forward(const Vector& z) const {
  if (z.size() != input_dim()) {
    throw DimensionError(
        fmt::format("decoder expects latent dimension {}, got {}", input_dim(), z.size()));
  }
  return forward_columns(z);
}

std::vector<Vector> Decoder::forward_batch(std::span<const Vector> latents) const {
  Matrix cols(input_dim(), static_cast<Eigen::Index>(latents.size()));
  for (std::size_t r = 0; r < latents.size(); ++r) {
    if (latents[r].size() != input_dim()) {
      throw DimensionError(fmt::format("row {}: decoder expects latent dimension {}, got {}", r,
                                       input_dim(), latents[r].size()));
    }
    cols.col(static_cast<Eigen::Index>(r)) = latents[r];
  }
  const Matrix out = forward_columns(cols);
  std::vector<Vector> result;
  result.reserve(latents.size());
  for (Eigen::Index c = 0; c < out.cols(); ++c) result.emplace_back(out.col(c));
  return result;
}

// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kActivationNames[] = {"identity", "relu", "tanh", "sigmoid",
                                                 "softplus"};

double activate(Activation act, double v) {
  switch (act) {
    case Activation::identity:
      return v;
    case Activation::relu:
      return v > 0.0 ? v : 0.0;
    case Activation::tanh:
      return std::tanh(v);
    case Activation::sigmoid:
      return 1.0 / (1.0 + std::exp(-v));
    case Activation::softplus:
      return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
  return v;
}

}  // namespace

std::optional<Activation> parse_activation(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kActivationNames); ++i) {
    if (kActivationNames[i] == name) return static_cast<Activation>(i);
  }
  return std::nullopt;
}

std::string_view activation_name(Activation act) {
  return kActivationNames[static_cast<std::size_t>(act)];
}

DecoderModel::DecoderModel(int input_dim, int output_dim, std::vector<DenseLayer> layers)
    : input_dim_(input_dim), output_dim_(output_dim), layers_(std::move(layers)), widest_(0) {
  if (input_dim_ <= 0 || output_dim_ <= 0) {
    throw SchemaError(fmt::format("input_dim and output_dim must be positive (got {} and {})",
                                  input_dim_, output_dim_));
  }
  if (layers_.empty()) throw SchemaError("decoder has no layers");

  int expected_cols = input_dim_;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& layer = layers_[i];
    if (layer.rows <= 0 || layer.cols <= 0) {
      throw SchemaError(fmt::format("layer {}: rows and cols must be positive", i));
    }
    if (layer.cols != expected_cols) {
      throw SchemaError(fmt::format("layer {}: dimension mismatch, cols={} but {} is {}", i,
                                    layer.cols, i == 0 ? "input_dim" : "previous layer rows",
                                    expected_cols));
    }
    if (layer.weights.rows() != layer.rows || layer.weights.cols() != layer.cols) {
      throw SchemaError(fmt::format("layer {}: weights are not {}x{}", i, layer.rows, layer.cols));
    }
    if (layer.bias.size() != layer.rows) {
      throw SchemaError(fmt::format("layer {}: bias length {} != rows {}", i, layer.bias.size(),
                                    layer.rows));
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw SchemaError(fmt::format("layer {}: non-finite parameter", i));
    }
    expected_cols = layer.rows;
    widest_ = std::max(widest_, static_cast<std::size_t>(layer.rows));
  }
  if (expected_cols != output_dim_) {
    throw SchemaError(fmt::format("layer {}: dimension mismatch, rows={} but output_dim is {}",
                                  layers_.size() - 1, expected_cols, output_dim_));
  }
}

Matrix DecoderModel::forward_columns(const Matrix& latents) const {
  check_input(latents);
  const Eigen::Index batch = latents.cols();
  Matrix out(output_dim_, batch);

  // Plain loops with a fixed summation order keep scalar and batched
  // evaluation bit-identical.
  std::vector<double> cur(widest_ > static_cast<std::size_t>(input_dim_) ? widest_ : input_dim_);
  std::vector<double> next(cur.size());
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (int j = 0; j < input_dim_; ++j) cur[j] = latents(j, b);
    for (const DenseLayer& layer : layers_) {
      const double* w = layer.weights.data();
      for (int r = 0; r < layer.rows; ++r) {
        double acc = 0.0;
        const double* row = w + static_cast<std::ptrdiff_t>(r) * layer.cols;
        for (int c = 0; c < layer.cols; ++c) acc += row[c] * cur[c];
        next[r] = activate(layer.activation, acc + layer.bias[r]);
      }
      std::swap(cur, next);
    }
    for (int r = 0; r < output_dim_; ++r) out(r, b) = cur[r];
  }
  return out;
}

std::string DecoderModel::fingerprint() const {
  detail::Fnv1a h;
  h.text("geode-decoder-v1");
  h.integer(static_cast<std::uint64_t>(input_dim_));
  h.integer(static_cast<std::uint64_t>(output_dim_));
  for (const DenseLayer& layer : layers_) {
    h.integer(static_cast<std::uint64_t>(layer.rows));
    h.integer(static_cast<std::uint64_t>(layer.cols));
    h.integer(static_cast<std::uint64_t>(layer.activation));
    for (Eigen::Index i = 0; i < layer.weights.size(); ++i) h.real(layer.weights.data()[i]);
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) h.real(layer.bias[i]);
  }
  return fmt::format("mlp:{:016x}", h.value());
}

// ---------------------------------------------------------------------------
// geode-decoder-v1

namespace {

int read_dim(const json& doc, const char* key, const std::string& where) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw SchemaError(fmt::format("{}missing field '{}'", where, key));
  if (!it->is_number_integer()) {
    throw SchemaError(fmt::format("{}field '{}' must be an integer", where, key));
  }
  return it->get<int>();
}

std::vector<double> read_reals(const json& layer, const char* key, const std::string& where) {
  const auto it = layer.find(key);
  if (it == layer.end()) throw SchemaError(fmt::format("{}missing field '{}'", where, key));
  if (!it->is_array()) throw SchemaError(fmt::format("{}field '{}' must be an array", where, key));
  std::vector<double> out;
  out.reserve(it->size());
  for (const json& v : *it) {
    if (!v.is_number()) {
      throw SchemaError(fmt::format("{}field '{}' holds a non-number", where, key));
    }
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

DecoderModel parse_decoder(const json& doc) {
  if (!doc.is_object()) throw SchemaError("decoder file is not a JSON object");
  const auto fmt_it = doc.find("format");
  if (fmt_it == doc.end() || !fmt_it->is_string() || *fmt_it != "geode-decoder-v1") {
    throw SchemaError("decoder file: 'format' must be \"geode-decoder-v1\"");
  }
  const int input_dim = read_dim(doc, "input_dim", "");
  const int output_dim = read_dim(doc, "output_dim", "");
  const auto layers_it = doc.find("layers");
  if (layers_it == doc.end() || !layers_it->is_array()) {
    throw SchemaError("decoder file: 'layers' must be an array");
  }
  if (layers_it->empty()) throw SchemaError("decoder has no layers");

  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < layers_it->size(); ++i) {
    const json& node = (*layers_it)[i];
    const std::string where = fmt::format("layer {}: ", i);
    if (!node.is_object()) throw SchemaError(where + "not an object");
    for (const auto& [key, _] : node.items()) {
      if (key != "rows" && key != "cols" && key != "weights" && key != "bias" &&
          key != "activation") {
        throw SchemaError(fmt::format("{}unknown key '{}'", where, key));
      }
    }
    DenseLayer layer;
    layer.rows = read_dim(node, "rows", where);
    layer.cols = read_dim(node, "cols", where);
    if (layer.rows <= 0 || layer.cols <= 0) {
      throw SchemaError(where + "rows and cols must be positive");
    }
    const std::vector<double> w = read_reals(node, "weights", where);
    const std::vector<double> b = read_reals(node, "bias", where);
    if (w.size() != static_cast<std::size_t>(layer.rows) * layer.cols) {
      throw SchemaError(fmt::format("{}weights length {} != rows*cols = {}", where, w.size(),
                                    static_cast<std::size_t>(layer.rows) * layer.cols));
    }
    if (b.size() != static_cast<std::size_t>(layer.rows)) {
      throw SchemaError(fmt::format("{}bias length {} != rows {}", where, b.size(), layer.rows));
    }
    const auto act_it = node.find("activation");
    if (act_it == node.end() || !act_it->is_string()) {
      throw SchemaError(where + "missing field 'activation'");
    }
    const auto act = parse_activation(act_it->get<std::string>());
    if (!act) {
      throw SchemaError(
          fmt::format("{}unknown activation '{}'", where, act_it->get<std::string>()));
    }
    layer.activation = *act;
    layer.weights = Eigen::Map<const RowMajorMatrix>(w.data(), layer.rows, layer.cols);
    layer.bias = Eigen::Map<const Vector>(b.data(), layer.rows);
    layers.push_back(std::move(layer));
  }
  return DecoderModel(input_dim, output_dim, std::move(layers));
}

DecoderModel load_decoder(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open decoder file '{}'", path.string()));
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  try {
    return parse_decoder(doc);
  } catch (const SchemaError& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json decoder_to_json(const DecoderModel& model) {
  json layers = json::array();
  for (const DenseLayer& layer : model.layers()) {
    layers.push_back({
        {"rows", layer.rows},
        {"cols", layer.cols},
        {"weights", std::vector<double>(layer.weights.data(),
                                        layer.weights.data() + layer.weights.size())},
        {"bias", std::vector<double>(layer.bias.data(), layer.bias.data() + layer.bias.size())},
        {"activation", std::string(activation_name(layer.activation))},
    });
  }
  return {{"format", "geode-decoder-v1"},
          {"input_dim", model.input_dim()},
          {"output_dim", model.output_dim()},
          {"layers", std::move(layers)}};
}

void save_decoder(const DecoderModel& model, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write decoder file '{}'", path.string()));
  out << decoder_to_json(model).dump() << '\n';
}

// ---------------------------------------------------------------------------

AnalyticDecoder::AnalyticDecoder(Kind kind, Matrix w, double p0, double p1)
    : kind_(kind), w_(std::move(w)), p0_(p0), p1_(p1) {}

AnalyticDecoder AnalyticDecoder::linear(Matrix w) {
  if (w.rows() == 0 || w.cols() == 0) throw DimensionError("linear decoder needs a non-empty W");
  return AnalyticDecoder(Kind::linear, std::move(w), 0.0, 0.0);
}

AnalyticDecoder AnalyticDecoder::identity(int dim) { return linear(Matrix::Identity(dim, dim)); }

AnalyticDecoder AnalyticDecoder::parabola(double a) {
  return AnalyticDecoder(Kind::parabola, Matrix(), a, 0.0);
}

AnalyticDecoder AnalyticDecoder::sine_ridge(double amplitude, double frequency) {
  return AnalyticDecoder(Kind::sine_ridge, Matrix(), amplitude, frequency);
}

int AnalyticDecoder::input_dim() const {
  return kind_ == Kind::linear ? static_cast<int>(w_.cols()) : 2;
}

int AnalyticDecoder::output_dim() const {
  return kind_ == Kind::linear ? static_cast<int>(w_.rows()) : 3;
}

Matrix AnalyticDecoder::forward_columns(const Matrix& latents) const {
  check_input(latents);
  Matrix out(output_dim(), latents.cols());
  for (Eigen::Index b = 0; b < latents.cols(); ++b) {
    switch (kind_) {
      case Kind::linear:
        for (Eigen::Index r = 0; r < w_.rows(); ++r) {
          double acc = 0.0;
          for (Eigen::Index c = 0; c < w_.cols(); ++c) acc += w_(r, c) * latents(c, b);
          out(r, b) = acc;
        }
        break;
      case Kind::parabola:
        out(0, b) = latents(0, b);
        out(1, b) = latents(1, b);
        out(2, b) = p0_ * latents(0, b) * latents(0, b);
        break;
      case Kind::sine_ridge:
        out(0, b) = latents(0, b);
        out(1, b) = latents(1, b);
        out(2, b) = p0_ * std::sin(p1_ * latents(0, b));
        break;
    }
  }
  return out;
}

std::optional<Matrix> AnalyticDecoder::analytic_jacobian(const Vector& z) const {
  if (z.size() != input_dim()) {
    throw DimensionError(
        fmt::format("decoder expects latent dimension {}, got {}", input_dim(), z.size()));
  }
  if (kind_ == Kind::linear) return w_;
  Matrix j = Matrix::Zero(3, 2);
  j(0, 0) = 1.0;
  j(1, 1) = 1.0;
  j(2, 0) = kind_ == Kind::parabola ? 2.0 * p0_ * z[0] : p0_ * p1_ * std::cos(p1_ * z[0]);
  return j;
}

std::string AnalyticDecoder::fingerprint() const {
  switch (kind_) {
    case Kind::linear: {
      detail::Fnv1a h;
      for (Eigen::Index i = 0; i < w_.size(); ++i) h.real(w_.data()[i]);
      return fmt::format("linear:{}x{}:{:016x}", w_.rows(), w_.cols(), h.value());
    }
    case Kind::parabola:
      return fmt::format("parabola:{:.17g}", p0_);
    case Kind::sine_ridge:
      return fmt::format("sine_ridge:{:.17g},{:.17g}", p0_, p1_);
  }
  return {};
}

}  // namespace geode
