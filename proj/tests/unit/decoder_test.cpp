#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include <nlohmann/json.hpp>

#include "geode/decoder.hpp"
#include "geode/error.hpp"
#include "oracles.hpp"

using namespace geode;
using nlohmann::json;

namespace {

json layer(int rows, int cols, std::vector<double> w, std::vector<double> b, const char* act) {
  return {{"rows", rows}, {"cols", cols}, {"weights", w}, {"bias", b}, {"activation", act}};
}

json doc(int in, int out, json layers) {
  return {{"format", "geode-decoder-v1"}, {"input_dim", in}, {"output_dim", out}, {"layers", layers}};
}

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

std::string error_of(const json& d) {
  try {
    parse_decoder(d);
  } catch (const SchemaError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Decoder, LoadsTwoLayerFile) {
  const json d = doc(2, 4,
                     {layer(3, 2, {1, 0, 0, 1, 1, 1}, {0, 0, 0}, "relu"),
                      layer(4, 3, std::vector<double>(12, 0.5), {0, 0, 0, 0}, "identity")});
  oracle::TempDir dir("geode-dec");
  oracle::write_file(dir / "d.json", d.dump());
  const DecoderModel m = load_decoder(dir / "d.json");
  EXPECT_EQ(m.input_dim(), 2);
  EXPECT_EQ(m.output_dim(), 4);
  EXPECT_EQ(m.layers().size(), 2u);
}

TEST(Decoder, MismatchNamesLayer) {
  const json d = doc(2, 4,
                     {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity"),
                      layer(4, 3, std::vector<double>(12, 1.0), {0, 0, 0, 0}, "identity")});
  EXPECT_NE(error_of(d).find("layer 1"), std::string::npos) << error_of(d);
}

TEST(Decoder, EmptyLayersRejected) {
  EXPECT_FALSE(error_of(doc(2, 2, json::array())).empty());
}

TEST(Decoder, SchemaViolations) {
  json bad_format = doc(2, 2, {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity")});
  bad_format["format"] = "other";
  EXPECT_FALSE(error_of(bad_format).empty());

  EXPECT_FALSE(error_of(doc(2, 2, {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "gelu")})).empty());
  EXPECT_FALSE(error_of(doc(2, 2, {layer(2, 2, {1, 0, 0}, {0, 0}, "identity")})).empty());
  EXPECT_FALSE(error_of(doc(2, 2, {layer(2, 2, {1, 0, 0, 1}, {0}, "identity")})).empty());
  EXPECT_FALSE(error_of(doc(2, 3, {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity")})).empty());

  json extra = layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity");
  extra["dropout"] = 0.5;
  EXPECT_FALSE(error_of(doc(2, 2, {extra})).empty());

  json missing = layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity");
  missing.erase("bias");
  EXPECT_FALSE(error_of(doc(2, 2, {missing})).empty());
}

TEST(Decoder, UnknownTopLevelKeysIgnored) {
  json d = doc(2, 2, {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity")});
  d["trainer"] = {{"epochs", 20}};
  EXPECT_NO_THROW(parse_decoder(d));
}

TEST(Decoder, MissingFileIsIoError) {
  EXPECT_THROW(load_decoder("/nonexistent/geode/decoder.json"), IoError);
}

TEST(Decoder, ForwardExamples) {
  const auto id = parse_decoder(doc(2, 2, {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "identity")}));
  EXPECT_EQ(id.forward(vec({3, 4})), vec({3, 4}));

  const auto stretch = parse_decoder(doc(2, 2, {layer(2, 2, {1, 0, 0, 2}, {0, 0}, "identity")}));
  EXPECT_EQ(stretch.forward(vec({1, 1})), vec({1, 2}));

  const auto relu = parse_decoder(doc(2, 2, {layer(2, 2, {1, 0, 0, 1}, {0, 0}, "relu")}));
  EXPECT_EQ(relu.forward(vec({-1, 2})), vec({0, 2}));
}

TEST(Decoder, Activations) {
  const double x = 0.7;
  const std::pair<const char*, double> cases[] = {
      {"identity", x},
      {"relu", x},
      {"tanh", std::tanh(x)},
      {"sigmoid", 1.0 / (1.0 + std::exp(-x))},
      {"softplus", std::log1p(std::exp(x))},
  };
  for (const auto& [name, expected] : cases) {
    const auto m = parse_decoder(doc(1, 1, {layer(1, 1, {1}, {0}, name)}));
    EXPECT_NEAR(m.forward(vec({x}))[0], expected, 1e-15) << name;
  }
}

TEST(Decoder, ForwardDimensionMismatch) {
  const auto m = oracle::random_mlp({3, 5, 2}, 1);
  EXPECT_THROW(m.forward(vec({1, 2})), DimensionError);
}

TEST(Decoder, BatchEmptyAndSingleton) {
  const auto m = oracle::random_mlp({3, 8, 4}, 2);
  EXPECT_TRUE(m.forward_batch({}).empty());
  const std::vector<Vector> one{vec({0.1, -0.2, 0.3})};
  const auto out = m.forward_batch(one);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], m.forward(one[0]));
}

TEST(Decoder, BatchMatchesLoopBitwise) {
  for (Activation act : {Activation::relu, Activation::tanh, Activation::sigmoid, Activation::softplus}) {
    const auto m = oracle::random_mlp({5, 16, 16, 7}, 3, act);
    const auto zs = oracle::uniform_cloud(100, 5, -2, 2, 4);
    const auto batch = m.forward_batch(zs);
    ASSERT_EQ(batch.size(), zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) {
      const Vector single = m.forward(zs[i]);
      ASSERT_EQ(0, std::memcmp(single.data(), batch[i].data(), sizeof(double) * single.size()))
          << activation_name(act) << " row " << i;
    }
  }
}

TEST(Decoder, BatchReportsOffendingRow) {
  const auto m = oracle::random_mlp({2, 4, 3}, 5);
  std::vector<Vector> zs{vec({0, 0}), vec({1, 1}), vec({1, 2, 3}), vec({0, 1})};
  try {
    m.forward_batch(zs);
    FAIL() << "expected a dimension error";
  } catch (const DimensionError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
}

TEST(Decoder, Deterministic) {
  const auto m = oracle::random_mlp({4, 32, 32, 9}, 6, Activation::softplus);
  const Vector z = vec({0.3, -1.1, 0.25, 1.7});
  const Vector a = m.forward(z), b = m.forward(z);
  EXPECT_EQ(0, std::memcmp(a.data(), b.data(), sizeof(double) * a.size()));
}

TEST(Decoder, SaveLoadRoundTripIsExact) {
  const auto m = oracle::random_mlp({3, 11, 6}, 7, Activation::sigmoid);
  oracle::TempDir dir("geode-dec");
  save_decoder(m, dir / "m.json");
  const auto back = load_decoder(dir / "m.json");
  EXPECT_EQ(back.fingerprint(), m.fingerprint());
  const auto zs = oracle::uniform_cloud(20, 3, -2, 2, 8);
  for (const Vector& z : zs) EXPECT_EQ(back.forward(z), m.forward(z));
}

TEST(Decoder, FingerprintTracksWeights) {
  auto a = oracle::random_mlp({2, 4, 3}, 9);
  auto b = oracle::random_mlp({2, 4, 3}, 10);
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  EXPECT_EQ(a.fingerprint(), oracle::random_mlp({2, 4, 3}, 9).fingerprint());
}

TEST(AnalyticDecoder, ForwardValues) {
  const auto p = AnalyticDecoder::parabola(1.5);
  EXPECT_EQ(p.forward(vec({2, -1})), vec({2, -1, 6}));
  const auto s = AnalyticDecoder::sine_ridge(0.5, 3.0);
  EXPECT_DOUBLE_EQ(s.forward(vec({0.4, 1}))[2], 0.5 * std::sin(1.2));
  Matrix w(3, 2);
  w << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(AnalyticDecoder::linear(w).forward(vec({1, -1})), vec({-1, -1, -1}));
}

TEST(AnalyticDecoder, JacobianMatchesFiniteDifferences) {
  Matrix w(4, 3);
  w << 1, -2, 0.5, 0, 3, 1, 2, 2, -1, 0.25, 0, 4;
  const AnalyticDecoder decoders[] = {AnalyticDecoder::linear(w), AnalyticDecoder::parabola(1.0),
                                      AnalyticDecoder::sine_ridge(1.0, 2.0)};
  for (const auto& d : decoders) {
    const auto zs = oracle::uniform_cloud(100, d.input_dim(), -2, 2, 11);
    for (const Vector& z : zs) {
      const Matrix exact = *d.analytic_jacobian(z);
      const Matrix fd = oracle::central_jacobian(d, z, 1e-5);
      EXPECT_LE((fd - exact).norm() / exact.norm(), 1e-6) << d.fingerprint();
    }
  }
}

TEST(Decoder, LipschitzBound) {
  for (Activation act : {Activation::relu, Activation::tanh, Activation::sigmoid}) {
    const auto m = oracle::random_mlp({4, 24, 24, 6}, 12, act);
    double c = 1.0;
    for (const DenseLayer& l : m.layers()) c *= l.weights.norm();
    std::mt19937_64 rng(13);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int probe = 0; probe < 200; ++probe) {
      Vector z(4), d(4);
      for (int i = 0; i < 4; ++i) {
        z[i] = n(rng);
        d[i] = 0.1 * n(rng);
      }
      EXPECT_LE((m.forward(z + d) - m.forward(z)).norm(), c * d.norm() * (1 + 1e-12));
    }
  }
}

TEST(Decoder, ActivationNamesRoundTrip) {
  for (Activation a : {Activation::identity, Activation::relu, Activation::tanh, Activation::sigmoid,
                       Activation::softplus}) {
    EXPECT_EQ(parse_activation(activation_name(a)), a);
  }
  EXPECT_FALSE(parse_activation("Relu").has_value());
}
