#include "rince/adam.hpp"

#include <gtest/gtest.h>

#include "rince/probe.hpp"
#include "rince/rng.hpp"
#include "support/encoder_helpers.hpp"

using namespace rince;

namespace {

TEST(Adam, SingleStepMatchesHandComputation) {
  // One step on f(x) = 0.5 x^2 from x = 3: g = 3.
  AdamConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.weight_decay = 0.01;
  cfg.beta1 = 0.9;
  cfg.beta2 = 0.999;
  cfg.eps = 1e-8;
  AdamOptimizer opt(cfg);
  double x = 3.0;
  double g = 3.0;
  opt.step({{&x, &g, 1}});
  // m = 0.1*3, v = 0.001*9; mhat = 3, vhat = 9; step = 0.1 * 3/(3+1e-8);
  // then decoupled decay on the updated value.
  double expected = 3.0 - 0.1 * (3.0 / (3.0 + 1e-8));
  expected -= 0.1 * 0.01 * expected;
  EXPECT_NEAR(x, expected, 1e-12);
}

TEST(Adam, TwoStepsTrackMomentRecursion) {
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  AdamOptimizer opt(cfg);
  double x = 1.0;
  double m = 0.0, v = 0.0, ref = 1.0;
  for (int t = 1; t <= 2; ++t) {
    double g = 2.0 * ref;  // f = x^2 evaluated at the reference trajectory
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    double mh = m / (1.0 - std::pow(0.9, t));
    double vh = v / (1.0 - std::pow(0.999, t));
    ref -= 0.05 * mh / (std::sqrt(vh) + 1e-8);

    double gx = 2.0 * x;
    opt.step({{&x, &gx, 1}});
    EXPECT_NEAR(x, ref, 1e-12);
  }
}

TEST(Adam, ZeroLearningRateFreezesParameters) {
  AdamConfig cfg;
  cfg.learning_rate = 0.0;
  AdamOptimizer opt(cfg);
  double x = 2.5;
  double g = 7.0;
  opt.step({{&x, &g, 1}});
  EXPECT_EQ(x, 2.5);
}

TEST(Adam, ConvergesOnQuadraticBowl) {
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.weight_decay = 0.0;
  AdamOptimizer opt(cfg);
  Eigen::ArrayXd x(4);
  x << 4.0, -3.0, 2.0, -1.0;
  Eigen::ArrayXd g(4);
  for (int iter = 0; iter < 2000; ++iter) {
    g = x;
    opt.step({{x.data(), g.data(), 4}});
  }
  EXPECT_LE(x.abs().maxCoeff(), 1e-3);
}

TEST(Probe, SeparableBlobsReachPerfectAccuracy) {
  Rng rng(1);
  const int n = 200;
  Eigen::MatrixXd feats(n, 2);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    int y = i % 2;
    feats(i, 0) = (y == 0 ? -2.0 : 2.0) + 0.3 * rng.normal();
    feats(i, 1) = rng.normal();
    labels[static_cast<std::size_t>(i)] = y;
  }
  ProbeConfig cfg;
  cfg.split_seed = 3;
  ProbeResult r = linear_probe(feats, labels, cfg);
  EXPECT_EQ(r.accuracy, 1.0);
  for (double a : r.per_class) EXPECT_EQ(a, 1.0);
}

TEST(Probe, ShuffledLabelsSitAtChance) {
  Rng rng(2);
  const int n = 2000;
  const int classes = 4;
  Eigen::MatrixXd feats(n, 8);
  for (int i = 0; i < feats.size(); ++i) feats.data()[i] = rng.normal();
  std::vector<int> labels(n);
  for (auto& y : labels) y = rng.uniform_int(0, classes - 1);
  ProbeConfig cfg;
  cfg.split_seed = 4;
  ProbeResult r = linear_probe(feats, labels, cfg);
  EXPECT_NEAR(r.accuracy, 1.0 / classes, 0.05);
}

TEST(Probe, LossTraceIsNonIncreasing) {
  Rng rng(5);
  const int n = 120;
  Eigen::MatrixXd feats(n, 3);
  std::vector<int> labels(n);
  for (int i = 0; i < n; ++i) {
    int y = i % 3;
    for (int j = 0; j < 3; ++j) feats(i, j) = (j == y ? 1.0 : 0.0) + 0.5 * rng.normal();
    labels[static_cast<std::size_t>(i)] = y;
  }
  ProbeConfig cfg;
  cfg.split_seed = 6;
  ProbeResult r = linear_probe(feats, labels, cfg);
  ASSERT_GE(r.loss_trace.size(), 2u);
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i)
    EXPECT_LE(r.loss_trace[i], r.loss_trace[i - 1] + 1e-12);
}

TEST(Probe, RejectsDegenerateInput) {
  Eigen::MatrixXd feats = Eigen::MatrixXd::Zero(4, 2);
  EXPECT_THROW(linear_probe(feats, {0, 0, 0, 0}, {}), invalid_input);
  EXPECT_THROW(linear_probe(feats, {0, 1}, {}), invalid_input);
}

}  // namespace
