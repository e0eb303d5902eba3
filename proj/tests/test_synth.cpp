#include "rince/synth.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "rince/probe.hpp"

using namespace rince;

namespace {

LatentSpec small_spec(int classes = 4, int dim = 8, double sigma = 0.1, int per_class = 50) {
  LatentSpec s;
  s.classes = classes;
  s.dim = dim;
  s.sigma = sigma;
  s.per_class = per_class;
  return s;
}

TEST(Centers, UnitNormAndSeparationDial) {
  LatentSpec s = small_spec(4, 8, 0.0);
  Eigen::MatrixXd c = make_class_centers(s, 1);
  for (int i = 0; i < c.rows(); ++i) EXPECT_NEAR(c.row(i).norm(), 1.0, 1e-12);
  // At separation pi/2 and dim >= classes the centers form a regular
  // simplex: pairwise inner products -1/(C-1).
  for (int i = 0; i < c.rows(); ++i)
    for (int j = i + 1; j < c.rows(); ++j)
      EXPECT_NEAR(c.row(i).dot(c.row(j)), -1.0 / 3.0, 1e-9);
}

TEST(Centers, TwoClassAntipodalOrOrthogonal) {
  LatentSpec s = small_spec(2, 2, 0.0);
  s.separation = 1.5707963267948966;  // pi/2 -> antipodal
  Eigen::MatrixXd anti = make_class_centers(s, 3);
  EXPECT_NEAR(anti.row(0).dot(anti.row(1)), -1.0, 1e-9);
  s.separation = 0.78539816339744831;  // pi/4 -> orthogonal
  Eigen::MatrixXd ortho = make_class_centers(s, 3);
  EXPECT_NEAR(ortho.row(0).dot(ortho.row(1)), 0.0, 1e-9);
}

TEST(GenerateDataset, SigmaZeroCollapsesToCenters) {
  LatentSpec s = small_spec(3, 6, 0.0, 10);
  Dataset ds = generate_dataset(s, 7);
  for (int i = 0; i < ds.size(); ++i) {
    int y = ds.labels[static_cast<std::size_t>(i)];
    EXPECT_NEAR((ds.samples.row(i) - ds.centers.row(y)).norm(), 0.0, 1e-12);
  }
}

TEST(GenerateDataset, RejectsBadSpecs) {
  LatentSpec s = small_spec();
  s.dim = 1;
  EXPECT_THROW(generate_dataset(s, 1), invalid_spec);
  s = small_spec();
  s.classes = 1;
  EXPECT_THROW(generate_dataset(s, 1), invalid_spec);
  s = small_spec();
  s.sigma = -0.5;
  EXPECT_THROW(generate_dataset(s, 1), invalid_spec);
}

TEST(GenerateDataset, RawInputsAreLinearlySeparable) {
  // C=4, sigma=0.1, 100 per class: a linear probe on the raw inputs should
  // be essentially perfect.
  LatentSpec s = small_spec(4, 8, 0.1, 100);
  Dataset ds = generate_dataset(s, 11);
  ProbeConfig pc;
  pc.split_seed = 5;
  ProbeResult r = linear_probe(ds.samples, ds.labels, pc);
  EXPECT_GE(r.accuracy, 0.99);
}

TEST(GenerateDataset, SeedDeterminism) {
  LatentSpec s = small_spec();
  Dataset a = generate_dataset(s, 42);
  Dataset b = generate_dataset(s, 42);
  for (int i = 0; i < a.samples.size(); ++i)
    EXPECT_EQ(a.samples.data()[i], b.samples.data()[i]);
  Dataset c = generate_dataset(s, 43);
  EXPECT_NE((a.samples - c.samples).cwiseAbs().maxCoeff(), 0.0);
}

TEST(MixturePairs, EtaZeroAndOneFlagBehavior) {
  Dataset ds = generate_dataset(small_spec(), 3);
  Rng rng0(100);
  PairBatch clean = sample_pair_batch(ds, 256, 0.0, rng0);
  for (bool f : clean.noise_flag) EXPECT_FALSE(f);
  Rng rng1(101);
  PairBatch noisy = sample_pair_batch(ds, 256, 1.0, rng1);
  for (bool f : noisy.noise_flag) EXPECT_TRUE(f);
}

TEST(MixturePairs, FlagRateMatchesEta) {
  Dataset ds = generate_dataset(small_spec(), 3);
  Rng rng(102);
  PairBatch b = sample_pair_batch(ds, 10000, 0.4, rng);
  double rate = 0.0;
  for (bool f : b.noise_flag) rate += f ? 1.0 : 0.0;
  rate /= b.size();
  EXPECT_NEAR(rate, 0.4, 0.015);  // 3-sigma binomial band
}

TEST(MixturePairs, MarginalsPreservedAcrossEta) {
  // Per-coordinate view-stream means and variances at eta=0 vs eta=1 agree
  // within 3 standard errors: the mixture construction leaves the marginals
  // untouched.
  Dataset ds = generate_dataset(small_spec(4, 6, 0.3, 100), 5);
  const int n = 20000;
  Rng r0(200), r1(201);
  PairBatch b0 = sample_pair_batch(ds, n, 0.0, r0);
  PairBatch b1 = sample_pair_batch(ds, n, 1.0, r1);
  for (int j = 0; j < 6; ++j) {
    double m0 = b0.views.col(j).mean();
    double m1 = b1.views.col(j).mean();
    double v0 = (b0.views.col(j).array() - m0).square().sum() / (n - 1);
    double v1 = (b1.views.col(j).array() - m1).square().sum() / (n - 1);
    double se_mean = std::sqrt(v0 / n + v1 / n);
    EXPECT_LE(std::abs(m0 - m1), 3.0 * se_mean + 1e-12) << "coord " << j;
    double se_var = std::sqrt(2.0 * v0 * v0 / (n - 1) + 2.0 * v1 * v1 / (n - 1));
    EXPECT_LE(std::abs(v0 - v1), 3.0 * se_var + 1e-12) << "coord " << j;
  }
}

TEST(MixturePairs, CleanFlagMeansSharedSample) {
  // With sigma = 0, a clean pair must be two identical latent points.
  Dataset ds = generate_dataset(small_spec(4, 6, 0.0, 25), 9);
  Rng rng(300);
  PairBatch b = sample_pair_batch(ds, 2000, 0.5, rng);
  for (int i = 0; i < b.size(); ++i) {
    if (!b.noise_flag[static_cast<std::size_t>(i)])
      EXPECT_NEAR((b.anchors.row(i) - b.views.row(i)).norm(), 0.0, 1e-12);
  }
}

TEST(FlipLabels, RatesAndInvolution) {
  std::vector<int> labels(10000);
  Rng lab_rng(1);
  for (auto& y : labels) y = lab_rng.uniform_int(0, 3);
  auto confusion = adjacent_confusion(4);

  Rng r0(400);
  auto none = flip_labels(labels, 0.0, confusion, r0);
  EXPECT_EQ(none.labels, labels);

  Rng r1(401);
  auto half = flip_labels(labels, 1.0, confusion, r1);
  double rate = 0.0;
  for (bool f : half.flipped) rate += f ? 1.0 : 0.0;
  rate /= labels.size();
  EXPECT_NEAR(rate, 0.5, 0.015);  // eta/2 with eta = 1

  Rng r2(402);
  auto partial = flip_labels(labels, 0.8, confusion, r2);
  rate = 0.0;
  for (bool f : partial.flipped) rate += f ? 1.0 : 0.0;
  rate /= labels.size();
  EXPECT_NEAR(rate, 0.4, 0.015);

  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (partial.flipped[i])
      EXPECT_EQ(partial.labels[i], confusion[static_cast<std::size_t>(labels[i])]);
    else
      EXPECT_EQ(partial.labels[i], labels[i]);
  }

  std::vector<int> not_involution = {1, 2, 0, 3};
  Rng r3(403);
  EXPECT_THROW(flip_labels(labels, 0.5, not_involution, r3), invalid_spec);
}

TEST(CorruptViews, IdentityAtZeroAndRateAtHalf) {
  Dataset ds = generate_dataset(small_spec(), 13);
  Rng rng(500);
  PairBatch base = sample_pair_batch(ds, 10000, 0.0, rng);
  Rng c0(501);
  PairBatch same = corrupt_views(base, 0.0, c0);
  EXPECT_EQ((same.views - base.views).cwiseAbs().maxCoeff(), 0.0);
  Rng c1(502);
  PairBatch half = corrupt_views(base, 0.5, c1);
  double rate = 0.0;
  for (bool f : half.noise_flag) rate += f ? 1.0 : 0.0;
  rate /= half.size();
  EXPECT_NEAR(rate, 0.5, 0.015);
}

TEST(CorruptViews, CorruptedViewsAreUninformative) {
  Dataset ds = generate_dataset(small_spec(4, 8, 0.1, 100), 17);
  Rng rng(600);
  PairBatch base = sample_pair_batch(ds, 10000, 0.0, rng);
  Rng c(601);
  PairBatch noisy = corrupt_views(base, 1.0, c);
  double mean_ip = 0.0;
  for (int i = 0; i < noisy.size(); ++i) mean_ip += noisy.anchors.row(i).dot(noisy.views.row(i));
  mean_ip /= noisy.size();
  EXPECT_LE(std::abs(mean_ip), 0.03);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(noisy.views.row(i).norm(), 1.0, 1e-12);
}

TEST(LabelNoiseBatch, FlagsTrackTrueClassMismatch) {
  Dataset ds = generate_dataset(small_spec(4, 8, 0.1, 50), 19);
  Rng flip_rng(700);
  auto flips = flip_labels(ds.labels, 0.8, adjacent_confusion(4), flip_rng);
  Rng rng(701);
  PairBatch b = sample_label_noise_batch(ds, 4000, flips.labels, rng);
  double flag_rate = 0.0;
  for (bool f : b.noise_flag) flag_rate += f ? 1.0 : 0.0;
  flag_rate /= b.size();
  // eta = 0.8: each side flips with prob 0.4; a pair is a false positive
  // when the true classes differ, P = 2 * 0.4 * 0.6 = 0.48.
  EXPECT_NEAR(flag_rate, 0.48, 0.03);
}

TEST(DatasetCsv, RoundTripsThroughDisk) {
  Dataset ds = generate_dataset(small_spec(3, 5, 0.2, 7), 23);
  std::string path = (std::filesystem::temp_directory_path() / "rince_ds_test.csv").string();
  write_dataset_csv(ds, path);
  Dataset back = read_dataset_csv(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), ds.size());
  ASSERT_EQ(back.spec.dim, ds.spec.dim);
  EXPECT_EQ(back.labels, ds.labels);
  for (int i = 0; i < ds.samples.size(); ++i)
    EXPECT_EQ(back.samples.data()[i], ds.samples.data()[i]);  // %.17g round-trip
}

}  // namespace
