#include "rince/divergence.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>

#include "rince/synth.hpp"
#include "support/encoder_helpers.hpp"

using namespace rince;

namespace {

TEST(MiLowerBound, IndependentPairingsCarryNoInformation) {
  // Unit-sphere scores in d = 16 at t = 1 keep the softmax spread small, so
  // the bound should sit near 0 (slightly below, as a lower bound of MI = 0).
  Rng rng(1);
  const int k = 32;
  std::vector<ScoreBatch> batches;
  for (int rep = 0; rep < 1000; ++rep) {
    Eigen::MatrixXd pts = testsupport::random_unit_rows(k + 2, 16, rng);
    ScoreBatch b;
    b.s_plus = pts.row(0).dot(pts.row(1));
    for (int j = 0; j < k; ++j) b.s_minus.push_back(pts.row(0).dot(pts.row(2 + j)));
    batches.push_back(std::move(b));
  }
  double bound = mi_lower_bound(batches);
  EXPECT_LE(std::abs(bound), 0.1);
  EXPECT_LE(bound, 0.0);  // independence: MI = 0 and the bound sits below it
}

TEST(MiLowerBound, PerfectlyMatchedPairsApproachLogK) {
  const double inv_t = 20.0;
  std::vector<ScoreBatch> batches;
  ScoreBatch b;
  b.s_plus = inv_t;
  b.s_minus.assign(8, 0.0);
  batches.push_back(b);
  double bound = mi_lower_bound(batches);
  EXPECT_NEAR(bound, std::log(8.0), 1e-6);
}

TEST(MiLowerBound, NeverExceedsLogK) {
  Rng rng(2);
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<ScoreBatch> batches;
    int k = rng.uniform_int(1, 16);
    for (int i = 0; i < 5; ++i) {
      ScoreBatch b;
      b.s_plus = rng.uniform(-2.0, 2.0);
      for (int j = 0; j < k; ++j) b.s_minus.push_back(rng.uniform(-2.0, 2.0));
      batches.push_back(std::move(b));
    }
    EXPECT_LE(mi_lower_bound(batches), std::log(static_cast<double>(k)) * (1.0 + 1e-9) + 1e-12);
  }
}

TEST(MiLowerBound, RejectsMixedK) {
  ScoreBatch a, b;
  a.s_plus = 0.0;
  a.s_minus = {0.0, 0.0};
  b.s_plus = 0.0;
  b.s_minus = {0.0};
  EXPECT_THROW(mi_lower_bound({a, b}), invalid_input);
  EXPECT_THROW(mi_lower_bound({}), invalid_input);
}

TEST(Lipschitz, IdentityHeadIsOne) {
  Rng rng(3);
  MlpEncoder enc({6, 12, 4}, Activation::kRelu, 0.5, rng, /*head_layers=*/0);
  EXPECT_EQ(lipschitz_upper_bound(enc, true), 1.0);
}

TEST(Lipschitz, ScaledIdentityLayer) {
  std::vector<Eigen::MatrixXd> w = {2.0 * Eigen::MatrixXd::Identity(4, 4)};
  std::vector<Eigen::VectorXd> b = {Eigen::VectorXd::Zero(4)};
  MlpEncoder enc =
      MlpEncoder::from_parameters(std::move(w), std::move(b), Activation::kRelu, 1.0, 1);
  EXPECT_NEAR(lipschitz_upper_bound(enc, true), 2.0, 1e-12);
  // Normalization radius enters as 1/r.
  EXPECT_NEAR(lipschitz_upper_bound(enc, true, 0.5), 4.0, 1e-12);
}

TEST(Lipschitz, PowerIterationMatchesJacobiSvd) {
  Rng rng(4);
  for (auto [rows, cols] : {std::pair{8, 8}, {12, 5}, {5, 12}, {32, 16}}) {
    Eigen::MatrixXd w(rows, cols);
    for (int i = 0; i < w.size(); ++i) w.data()[i] = rng.normal();
    double got = spectral_norm(w);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(w);
    EXPECT_NEAR(got, svd.singularValues()(0), 1e-6 * svd.singularValues()(0));
  }
}

TEST(Lipschitz, WholeStackProduct) {
  std::vector<Eigen::MatrixXd> w = {3.0 * Eigen::MatrixXd::Identity(3, 3),
                                    0.5 * Eigen::MatrixXd::Identity(3, 3)};
  std::vector<Eigen::VectorXd> b = {Eigen::VectorXd::Zero(3), Eigen::VectorXd::Zero(3)};
  MlpEncoder enc =
      MlpEncoder::from_parameters(std::move(w), std::move(b), Activation::kRelu, 1.0, 1);
  EXPECT_NEAR(lipschitz_upper_bound(enc, false), 1.5, 1e-12);  // all layers
  EXPECT_NEAR(lipschitz_upper_bound(enc, true), 0.5, 1e-12);   // head only
}

EmbeddingPairs embed_joint_pairs(const MlpEncoder& enc, const Dataset& ds, int n, double eta,
                                 Rng& rng) {
  PairBatch pb = sample_pair_batch(ds, n, eta, rng);
  EmbeddingPairs pairs;
  pairs.x = enc.forward(pb.anchors).rows;
  pairs.v = enc.forward(pb.views).rows;
  return pairs;
}

TEST(WdmBound, RequiresQOne) {
  EmbeddingPairs joint;
  joint.x = Eigen::MatrixXd::Identity(4, 4);
  joint.v = Eigen::MatrixXd::Identity(4, 4);
  RinceParams p;
  p.q = 0.5;
  p.lambda = 0.5;
  Rng rng(5);
  EXPECT_THROW(wdm_bound_check(joint, joint, p, 2, 1.0, 0.0, rng), theorem_inapplicable);
}

TEST(WdmBound, IdenticalDistributionsCollapseBothSides) {
  // joint == product atoms and eta = 1: W1 = 0 exactly, rhs = 0, and the
  // lhs must be nonpositive up to sampling error when the condition holds.
  Rng data_rng(6);
  Eigen::MatrixXd x = testsupport::random_unit_rows(48, 6, data_rng);
  Eigen::MatrixXd v = testsupport::random_unit_rows(48, 6, data_rng);
  EmbeddingPairs pairs{x, v};
  RinceParams p;
  p.q = 1.0;
  p.lambda = 0.5;
  Rng rng(7);
  WdmReport r = wdm_bound_check(pairs, pairs, p, 2, 1.0, 1.0, rng, 1.0, 200);
  EXPECT_TRUE(r.condition_ok);
  EXPECT_EQ(r.w1, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_GE(r.slack, -r.eps_stat);
}

TEST(WdmBound, HoldsForAlignedEmbeddings) {
  // x_i = v_i exactly: the strongest-possible joint alignment. The theorem
  // still bounds -E[RINCE] by the scaled W1 to the product distribution.
  Rng rng(8);
  Eigen::MatrixXd x = testsupport::random_unit_rows(64, 8, rng);
  EmbeddingPairs joint{x, x};
  EmbeddingPairs product = shuffle_views(joint, rng);
  RinceParams p;
  p.q = 1.0;
  p.lambda = 0.5;
  WdmReport r = wdm_bound_check(joint, product, p, 2, 1.0, 0.0, rng, 1.0, 200);
  EXPECT_TRUE(r.condition_ok);
  EXPECT_GT(r.lhs, 0.0);  // aligned pairs give positive -E[RINCE]
  EXPECT_GE(r.slack, -r.eps_stat);
}

TEST(WdmBound, HoldsForRandomEncodersCleanAndNoisy) {
  LatentSpec spec;
  spec.classes = 4;
  spec.dim = 8;
  spec.sigma = 0.2;
  spec.per_class = 32;
  RinceParams p;
  p.q = 1.0;
  p.lambda = 0.5;
  for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
    Dataset ds = generate_dataset(spec, seed);
    Rng enc_rng = substream(seed, "enc");
    MlpEncoder enc({8, 16, 6}, Activation::kTanh, 1.0, enc_rng);
    for (double eta : {0.0, 0.5}) {
      Rng rng = substream(seed, "wdm", static_cast<std::uint64_t>(eta * 10));
      EmbeddingPairs joint = embed_joint_pairs(enc, ds, 64, 0.0, rng);
      EmbeddingPairs product = shuffle_views(joint, rng);
      WdmReport r = wdm_bound_check(joint, product, p, 2, 1.0, eta, rng, 1.0, 200);
      EXPECT_TRUE(r.condition_ok);
      EXPECT_GE(r.slack, -r.eps_stat) << "seed " << seed << " eta " << eta;
    }
  }
}

TEST(WdmBound, ConditionFailureIsReportedNotAsserted) {
  Rng rng(9);
  Eigen::MatrixXd x = testsupport::random_unit_rows(32, 6, rng);
  EmbeddingPairs joint{x, x};
  EmbeddingPairs product = shuffle_views(joint, rng);
  RinceParams p;
  p.q = 1.0;
  p.lambda = 0.1;  // 0.1 * 2 < 0.9: precondition fails
  WdmReport r = wdm_bound_check(joint, product, p, 2, 1.0, 0.0, rng);
  EXPECT_FALSE(r.condition_ok);
}

TEST(WdmBound, ConditionThresholds) {
  EXPECT_TRUE(wdm_condition(0.5, 2, 0.0));    // 1.0 > 0.5
  EXPECT_FALSE(wdm_condition(0.25, 2, 0.0));  // 0.5 < 0.75
  // eta = 0.5, K = 2: threshold 1.5/3.5.
  EXPECT_TRUE(wdm_condition(0.5, 2, 0.5));
  EXPECT_FALSE(wdm_condition(0.42, 2, 0.5));
}

TEST(WdmBound, CsvRowFormat) {
  WdmReport r;
  r.seed = 7;
  r.lambda = 0.5;
  r.k = 2;
  r.t = 1.0;
  r.eta = 0.5;
  r.lip = 1.0;
  r.lhs = 0.25;
  r.rhs = 0.75;
  r.slack = 0.5;
  r.condition_ok = true;
  EXPECT_EQ(wdm_csv_header(), "seed,lambda,K,t,eta,lip,lhs,rhs,slack,condition_ok");
  EXPECT_EQ(wdm_csv_row(r), "7,0.5,2,1,0.5,1,0.25,0.75,0.5,1");
}

}  // namespace
