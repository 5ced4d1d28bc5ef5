#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "geode/error.hpp"
#include "geode/metric.hpp"
#include "oracles.hpp"

using namespace geode;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }

Matrix diag12() {
  Matrix w(2, 2);
  w << 1, 0, 0, 2;
  return w;
}

MetricConfig stochastic(int m, std::uint64_t seed = 7) {
  MetricConfig cfg;
  cfg.jacobian_mode = JacobianMode::stochastic;
  cfg.stoch_sigma = 1e-3;
  cfg.stoch_samples = m;
  cfg.rng_seed = seed;
  return cfg;
}

MetricConfig with_samples(int n) {
  MetricConfig cfg;
  cfg.curve_samples = n;
  return cfg;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST(Jacobian, LinearIsExact) {
  const auto id = AnalyticDecoder::identity(2);
  const auto lin = AnalyticDecoder::linear(diag12());
  for (double h : {1e-5, 1e-3, 0.25}) {
    for (const Vector& z : oracle::uniform_cloud(20, 2, -3, 3, 1)) {
      EXPECT_EQ(jacobian_fd(id, z, h), Matrix::Identity(2, 2));
      EXPECT_EQ(jacobian_fd(lin, z, h), diag12());
    }
  }
  Matrix w(3, 2);
  w << 0.3, -1.7, 2.2, 0.9, -0.4, 1.1;
  const auto general = AnalyticDecoder::linear(w);
  for (const Vector& z : oracle::uniform_cloud(20, 2, -3, 3, 2)) {
    EXPECT_LE((jacobian_fd(general, z, 1e-5) - w).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Jacobian, ParabolaAndSineRidge) {
  Matrix expected(3, 2);
  expected << 1, 0, 0, 1, 2, 0;
  EXPECT_LE((jacobian_fd(AnalyticDecoder::parabola(1.0), v2(1, 0), 1e-5) - expected).cwiseAbs().maxCoeff(),
            1e-8);
  const Matrix j = jacobian_fd(AnalyticDecoder::sine_ridge(1.0, 2.0), v2(0, 0), 1e-5);
  EXPECT_NEAR(j(2, 0), 2.0, 1e-8);
  EXPECT_NEAR(j(2, 1), 0.0, 1e-8);
}

TEST(Jacobian, CrossValidatesAnalytic) {
  Matrix w(3, 2);
  w << 1, 2, -1, 0.5, 3, -2;
  const AnalyticDecoder decoders[] = {AnalyticDecoder::linear(w), AnalyticDecoder::parabola(1.0),
                                      AnalyticDecoder::sine_ridge(1.0, 2.0)};
  for (const auto& d : decoders) {
    for (const Vector& z : oracle::uniform_cloud(100, 2, -2, 2, 3)) {
      const Matrix exact = *d.analytic_jacobian(z);
      EXPECT_LE((jacobian_fd(d, z, 1e-5) - exact).norm() / exact.norm(), 1e-6);
    }
  }
}

TEST(Jacobian, FdMatchesTextbookCentralDifference) {
  const auto m = oracle::random_mlp({3, 16, 5}, 4);
  for (const Vector& z : oracle::uniform_cloud(30, 3, -1, 1, 5)) {
    const Matrix ours = jacobian_fd(m, z, 1e-5);
    const Matrix ref = oracle::central_jacobian(m, z, 1e-5);
    EXPECT_LE((ours - ref).norm(), 1e-9 * std::max(1.0, ref.norm()));
  }
}

TEST(Jacobian, StochasticIdentity) {
  const auto id = AnalyticDecoder::identity(2);
  const Matrix j = jacobian_stochastic(id, v2(0.3, -0.2), stochastic(10000));
  EXPECT_LE((j - jacobian_fd(id, v2(0.3, -0.2), 1e-5)).norm(), 0.05);
}

TEST(Jacobian, StochasticParabola) {
  const auto p = AnalyticDecoder::parabola(1.0);
  const Matrix j = jacobian_stochastic(p, v2(1, 0), stochastic(50000));
  EXPECT_LE((j - jacobian_fd(p, v2(1, 0), 1e-5)).norm(), 0.05);
}

TEST(Jacobian, StochasticDeterministicPerSeedAndStream) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 2.0);
  const Vector z = v2(0.4, 0.1);
  const Matrix a = jacobian_stochastic(s, z, stochastic(500), 3);
  EXPECT_TRUE(bit_equal(a, jacobian_stochastic(s, z, stochastic(500), 3)));
  EXPECT_FALSE(bit_equal(a, jacobian_stochastic(s, z, stochastic(500), 4)));
  EXPECT_FALSE(bit_equal(a, jacobian_stochastic(s, z, stochastic(500, 8), 3)));
}

TEST(Jacobian, StochasticNeedsEnoughSamples) {
  const auto m = oracle::random_mlp({5, 8, 3}, 6);
  EXPECT_THROW(jacobian_stochastic(m, Vector::Zero(5), stochastic(4)), ConfigError);
  EXPECT_THROW(stochastic(4).validate(5), ConfigError);
  EXPECT_NO_THROW(stochastic(5).validate(5));
}

TEST(MetricConfig, Validation) {
  MetricConfig cfg;
  EXPECT_NO_THROW(cfg.validate(2));
  for (double h : {0.0, -1e-5, 1.0, 2.0}) {
    MetricConfig c;
    c.fd_step = h;
    EXPECT_THROW(c.validate(2), ConfigError) << h;
  }
  MetricConfig s = stochastic(100);
  s.stoch_sigma = 1.0;
  EXPECT_THROW(s.validate(2), ConfigError);
  EXPECT_THROW(with_samples(0).validate(2), ConfigError);
}

TEST(MetricConfig, JsonRoundTrip) {
  MetricConfig cfg = stochastic(1234, 0xFFFFFFFFFFFFFFFFull);
  cfg.curve_samples = 17;
  cfg.fd_step = 3.3e-6;
  EXPECT_EQ(metric_config_from_json(metric_config_to_json(cfg)), cfg);
}

TEST(MetricConfig, DigestDependsOnDecoderAndConfig) {
  const auto a = AnalyticDecoder::parabola(1.0);
  const auto b = AnalyticDecoder::parabola(2.0);
  EXPECT_EQ(metric_digest(a, MetricConfig{}), metric_digest(a, MetricConfig{}));
  EXPECT_NE(metric_digest(a, MetricConfig{}), metric_digest(b, MetricConfig{}));
  EXPECT_NE(metric_digest(a, MetricConfig{}), metric_digest(a, with_samples(8)));
}

TEST(MetricTensor, Examples) {
  EXPECT_EQ(metric_tensor(Matrix::Identity(2, 2)).g, Matrix::Identity(2, 2));
  Matrix j(3, 2);
  j << 1, 0, 0, 2, 0, 0;
  Matrix expected(2, 2);
  expected << 1, 0, 0, 4;
  EXPECT_EQ(metric_tensor(j).g, expected);
}

TEST(MetricTensor, RandomIsSymmetricPsd) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix j(5, 3);
    for (Eigen::Index i = 0; i < j.size(); ++i) j.data()[i] = n(rng);
    const MetricTensor g = metric_tensor(j);
    EXPECT_TRUE(g.is_symmetric());
    EXPECT_EQ(g.g, g.g.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(g.g);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
    EXPECT_NEAR(g.min_eigenvalue(), es.eigenvalues().minCoeff(), 1e-9);
  }
}

TEST(MetricTensor, PsdOnDecoderProbes) {
  const auto mlp = oracle::random_mlp({4, 16, 16, 10}, 10);
  const auto zs = oracle::uniform_cloud(100, 4, -2, 2, 11);
  for (const Vector& z : zs) {
    EXPECT_GE(metric_tensor(jacobian_fd(mlp, z, 1e-5)).min_eigenvalue(), -1e-9);
  }
  const auto sine = AnalyticDecoder::sine_ridge(2.0, 3.0);
  for (const Vector& z : oracle::uniform_cloud(100, 2, -2, 2, 12)) {
    EXPECT_GE(metric_tensor(jacobian_fd(sine, z, 1e-5)).min_eigenvalue(), -1e-9);
  }
}

TEST(Velocity, Examples) {
  const MetricConfig cfg;
  const auto lin = AnalyticDecoder::linear(diag12());
  EXPECT_EQ(velocity(lin, v2(0.7, -3), v2(0, 0), cfg), 0.0);
  EXPECT_EQ(velocity(lin, v2(0.7, -3), v2(1, 0), cfg), 1.0);
  EXPECT_EQ(velocity(lin, v2(0.7, -3), v2(0, 1), cfg), 2.0);
  EXPECT_NEAR(velocity(AnalyticDecoder::parabola(1.0), v2(1, 0), v2(1, 0), cfg), std::sqrt(5.0), 1e-8);
}

TEST(CurveLength, Examples) {
  const auto id = AnalyticDecoder::identity(2);
  const auto lin = AnalyticDecoder::linear(diag12());
  for (int n : {1, 2, 3, 7, 32, 100, 1000}) {
    const MetricConfig cfg = with_samples(n);
    EXPECT_EQ(curve_length(id, v2(0, 0), v2(3, 4), cfg), 5.0) << n;
    EXPECT_NEAR(curve_length(lin, v2(0, 0), v2(1, 1), cfg), std::sqrt(5.0), 1e-15) << n;
    EXPECT_EQ(curve_length(lin, v2(0.3, 0.3), v2(0.3, 0.3), cfg), 0.0);
  }
}

TEST(CurveLength, ParabolaQuadrature) {
  const auto p = AnalyticDecoder::parabola(1.0);
  const double oracle = oracle::analytic_length(p, v2(-1, 0), v2(1, 0), 1000000);
  EXPECT_NEAR(oracle, oracle::parabola_arc(1.0), 1e-9);
  EXPECT_NEAR(oracle, 2.957885, 1e-6);
  EXPECT_NEAR(curve_length(p, v2(-1, 0), v2(1, 0), with_samples(1000)), oracle, 1e-3);
}

TEST(CurveLength, SegmentOverloadAgrees) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 2.0);
  const MetricConfig cfg = with_samples(50);
  EXPECT_EQ(curve_length(s, CurveSegment{v2(-1, 0.5), v2(1.5, -1), 50}, cfg),
            curve_length(s, v2(-1, 0.5), v2(1.5, -1), cfg));
  EXPECT_THROW(curve_length(s, CurveSegment{v2(0, 0), v2(1, 1), 0}, cfg), ConfigError);
}

TEST(CurveLength, LinearScaleEquivariance) {
  Matrix w(3, 2);
  w << 0.5, -1, 2, 1, 0, 3;
  const auto lin = AnalyticDecoder::linear(w);
  const MetricConfig cfg = with_samples(16);
  for (const Vector& z : oracle::uniform_cloud(40, 2, -2, 2, 13)) {
    const Vector d = v2(0.75, -0.5) + 0.25 * z;
    const double single = curve_length(lin, z, z + d, cfg);
    EXPECT_NEAR(single, (w * d).norm(), 1e-9 * (w * d).norm());
    EXPECT_NEAR(curve_length(lin, z, z + 2.0 * d, cfg), 2.0 * single, 1e-9 * single);
  }
}

TEST(CurveLength, ConvergesAtRateOneOverN) {
  const AnalyticDecoder decoders[] = {AnalyticDecoder::parabola(1.0), AnalyticDecoder::sine_ridge(1.0, 2.0)};
  for (const auto& d : decoders) {
    const Vector a = v2(-1.2, 0.4), b = v2(1.1, -0.3);
    const double oracle = oracle::analytic_length(d, a, b, 1000000);
    for (int n : {8, 16, 32, 64, 128}) {
      const double ln = curve_length(d, a, b, with_samples(n));
      const double l2n = curve_length(d, a, b, with_samples(2 * n));
      EXPECT_LE(std::abs(ln - l2n), 1.0 / n);
      EXPECT_LE(std::abs(l2n - oracle), std::abs(ln - oracle) + 1e-9);
    }
  }
}

TEST(CurveLength, MidpointSplitAdditivity) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 3.0);
  const MetricConfig cfg = with_samples(10000);
  const Vector a = v2(-1.5, -0.5), b = v2(1.0, 1.25), mid = 0.5 * (a + b);
  EXPECT_NEAR(curve_length(s, a, mid, cfg) + curve_length(s, mid, b, cfg), curve_length(s, a, b, cfg), 1e-3);
}

TEST(CurveLength, StochasticModeIsDeterministic) {
  const auto p = AnalyticDecoder::parabola(1.0);
  MetricConfig cfg = stochastic(2000);
  cfg.curve_samples = 8;
  const double a = curve_length(p, v2(-1, 0), v2(1, 0), cfg, 5);
  EXPECT_EQ(a, curve_length(p, v2(-1, 0), v2(1, 0), cfg, 5));
  EXPECT_NEAR(a, oracle::parabola_arc(1.0), 0.1);
}

TEST(Magnification, Examples) {
  const MetricConfig cfg;
  for (const Vector& z : oracle::uniform_cloud(50, 2, -5, 5, 14)) {
    EXPECT_NEAR(magnification_factor(AnalyticDecoder::identity(2), z, cfg), 1.0, 1e-12);
    EXPECT_NEAR(magnification_factor(AnalyticDecoder::linear(diag12()), z, cfg), 2.0, 1e-12);
  }
  EXPECT_NEAR(magnification_factor(AnalyticDecoder::parabola(1.0), v2(1, 0), cfg), std::sqrt(5.0), 1e-7);
}

TEST(Magnification, RankDeficientClampsToZero) {
  Matrix w(3, 2);
  w << 1, 2, 2, 4, -1, -2;
  const double mf = magnification_factor(AnalyticDecoder::linear(w), v2(0.1, 0.2), MetricConfig{});
  EXPECT_GE(mf, 0.0);
  EXPECT_LT(mf, 1e-6);
}

TEST(MfGrid, Examples) {
  const MetricConfig cfg;
  const auto ones = mf_grid(AnalyticDecoder::identity(2), {-3, 7, 2, 4}, 4, cfg);
  ASSERT_EQ(ones.values.size(), 16u);
  for (double v : ones.values) EXPECT_NEAR(v, 1.0, 1e-12);

  const auto twos = mf_grid(AnalyticDecoder::linear(diag12()), {}, 2, cfg);
  ASSERT_EQ(twos.values.size(), 4u);
  for (double v : twos.values) EXPECT_NEAR(v, 2.0, 1e-12);

  const auto par = mf_grid(AnalyticDecoder::parabola(1.0), {-1, 1, -1, 1}, 8, cfg);
  for (int r = 0; r < 8; ++r) {
    for (int c = 0; c < 8; ++c) EXPECT_NEAR(par.at(r, c), par.at(r, 7 - c), 1e-9);
  }
}

TEST(MfGrid, LinearIsConstant) {
  Matrix w(4, 2);
  w << 1, 2, -0.5, 1, 3, 0, 0.25, -2;
  const auto g = mf_grid(AnalyticDecoder::linear(w), {-10, 10, -4, 9}, 16, MetricConfig{});
  double mean = 0.0;
  for (double v : g.values) mean += v;
  mean /= static_cast<double>(g.values.size());
  double var = 0.0;
  for (double v : g.values) var += (v - mean) * (v - mean);
  EXPECT_LE(var / static_cast<double>(g.values.size()), 1e-12);
}

TEST(MfGrid, CellCentersAndLayout) {
  const auto p = AnalyticDecoder::parabola(1.0);
  const auto g = mf_grid(p, {0, 4, -2, 0}, 4, MetricConfig{});
  EXPECT_DOUBLE_EQ(g.x_center(0), 0.5);
  EXPECT_DOUBLE_EQ(g.x_center(3), 3.5);
  EXPECT_DOUBLE_EQ(g.y_center(0), -1.75);
  EXPECT_DOUBLE_EQ(g.at(1, 2), magnification_factor(p, v2(g.x_center(2), g.y_center(1)), MetricConfig{}));
}

TEST(MfGrid, WorkersDoNotChangeValues) {
  const auto s = AnalyticDecoder::sine_ridge(1.0, 2.0);
  const auto a = mf_grid(s, {-2, 2, -2, 2}, 16, MetricConfig{}, 1);
  const auto b = mf_grid(s, {-2, 2, -2, 2}, 16, MetricConfig{}, 4);
  EXPECT_EQ(a.values, b.values);
}

TEST(MfGrid, RequiresTwoDimensions) {
  EXPECT_THROW(mf_grid(AnalyticDecoder::identity(3), {}, 4, MetricConfig{}), DimensionError);
}

TEST(MfGrid, CsvFormat) {
  const auto g = mf_grid(AnalyticDecoder::parabola(1.0), {-1, 1, -1, 1}, 2, MetricConfig{});
  std::ostringstream out;
  write_mf_csv(out, g);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "z1,z2,mf");
  int rows = 0;
  while (std::getline(in, line)) {
    double z1, z2, mf;
    char c1, c2;
    std::istringstream row(line);
    row >> z1 >> c1 >> z2 >> c2 >> mf;
    ASSERT_FALSE(row.fail()) << line;
    EXPECT_EQ(mf, g.values[static_cast<std::size_t>(rows)]);
    ++rows;
  }
  EXPECT_EQ(rows, 4);
}
