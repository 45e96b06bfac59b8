#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "ccasched/features.hpp"
#include "ccasched/rng.hpp"

using namespace ccasched;

namespace {

TrainTable make_table(std::vector<std::string> names, std::vector<std::vector<double>> rows,
                      std::vector<double> targets) {
  TrainTable t;
  t.feature_names = std::move(names);
  t.rows = std::move(rows);
  t.targets = std::move(targets);
  return t;
}

}  // namespace

TEST(Scaler, MapsFittedRangeToUnitInterval) {
  const TrainTable t = make_table({"a", "b"}, {{2.0, 5.0}, {4.0, 5.0}, {6.0, 5.0}}, {0, 0, 0});
  const Scaler s = Scaler::fit(t);
  EXPECT_EQ(s.width(), 2u);

  const std::vector<double> lo = s.apply(std::vector<double>{2.0, 5.0});
  const std::vector<double> mid = s.apply(std::vector<double>{4.0, 5.0});
  const std::vector<double> hi = s.apply(std::vector<double>{6.0, 5.0});
  EXPECT_DOUBLE_EQ(lo[0], 0.0);
  EXPECT_DOUBLE_EQ(mid[0], 0.5);
  EXPECT_DOUBLE_EQ(hi[0], 1.0);
  // Constant column maps to 0 everywhere instead of dividing by zero.
  EXPECT_DOUBLE_EQ(lo[1], 0.0);
  EXPECT_DOUBLE_EQ(hi[1], 0.0);

  // Out-of-range inputs extrapolate linearly rather than clamping.
  EXPECT_DOUBLE_EQ(s.apply(std::vector<double>{8.0, 5.0})[0], 1.5);
  EXPECT_DOUBLE_EQ(s.apply(std::vector<double>{0.0, 5.0})[0], -0.5);

  EXPECT_THROW(s.apply(std::vector<double>{1.0}), ValidationError);
}

TEST(Scaler, FromBoundsMatchesFit) {
  const Scaler a = Scaler::from_bounds({0.0, 10.0}, {2.0, 20.0});
  const std::vector<double> out = a.apply(std::vector<double>{1.0, 15.0});
  EXPECT_DOUBLE_EQ(out[0], 0.5);
  EXPECT_DOUBLE_EQ(out[1], 0.5);
  EXPECT_THROW(Scaler::from_bounds({0.0}, {1.0, 2.0}), ValidationError);
}

TEST(Pearson, ExactCorrelations) {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y2x = {2.0, 4.0, 6.0, 8.0};
  const std::vector<double> neg = {-1.0, -2.0, -3.0, -4.0};
  EXPECT_DOUBLE_EQ(pearson(x, y2x), 1.0);
  EXPECT_DOUBLE_EQ(pearson(x, neg), -1.0);

  // Hand-checked value: r([1,2,3],[1,2,4]) = sqrt(27/28).
  const std::vector<double> a = {1.0, 2.0, 3.0};
  const std::vector<double> b = {1.0, 2.0, 4.0};
  EXPECT_NEAR(pearson(a, b), 0.9819805060619659, 1e-15);
}

TEST(Pearson, InvariantUnderAffineMaps) {
  const std::vector<double> x = {0.3, 1.7, 2.2, 5.0, 4.1};
  const std::vector<double> y = {9.0, 3.5, 4.4, 1.0, 2.2};
  std::vector<double> xs(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) xs[i] = 100.0 * x[i] - 7.0;
  EXPECT_NEAR(pearson(x, y), pearson(xs, y), 1e-12);
}

TEST(Pearson, RejectsDegenerateInput) {
  const std::vector<double> x = {1.0, 2.0, 3.0};
  const std::vector<double> flat = {5.0, 5.0, 5.0};
  const std::vector<double> shorter = {1.0, 2.0};
  const std::vector<double> one = {1.0};
  EXPECT_THROW(pearson(x, flat), NumericError);
  EXPECT_THROW(pearson(x, shorter), ValidationError);  // length mismatch
  EXPECT_THROW(pearson(one, one), ValidationError);    // too few samples
}

TEST(Pca, TwoColumnEigenvaluesAreOnePlusMinusR) {
  // For 2 standardized columns with correlation r, the correlation matrix has
  // eigenvalues 1+|r| and 1-|r|.
  const std::vector<double> a = {1.0, 2.0, 3.0, 4.0, 5.0, 6.0};
  const std::vector<double> b = {1.2, 1.9, 3.4, 3.8, 5.5, 5.9};
  const double r = std::abs(pearson(a, b));

  TrainTable t = make_table({"a", "b"}, {}, {});
  for (std::size_t i = 0; i < a.size(); ++i) {
    t.rows.push_back({a[i], b[i]});
    t.targets.push_back(0.0);
  }
  const PcaResult res = pca(t);
  ASSERT_EQ(res.eigenvalues.size(), 2u);
  EXPECT_NEAR(res.eigenvalues[0], 1.0 + r, 1e-9);
  EXPECT_NEAR(res.eigenvalues[1], 1.0 - r, 1e-9);
}

TEST(Pca, PerfectlyCorrelatedPairExplainsEverythingOnPc1) {
  TrainTable t = make_table({"a", "b"}, {}, {});
  for (int i = 0; i < 10; ++i) {
    const double v = static_cast<double>(i);
    t.rows.push_back({v, 3.0 * v + 1.0});
    t.targets.push_back(0.0);
  }
  const PcaResult res = pca(t);
  EXPECT_NEAR(res.explained_variance[0], 1.0, 1e-9);
  EXPECT_NEAR(res.eigenvalues[0], 2.0, 1e-9);
}

TEST(Pca, ComponentsAreOrthonormalAndVarianceSumsToOne) {
  Rng rng(5);
  TrainTable t = make_table({"a", "b", "c", "d"}, {}, {});
  for (int i = 0; i < 200; ++i) {
    t.rows.push_back({rng.uniform01(), rng.uniform01(), rng.uniform01(), rng.uniform01()});
    t.targets.push_back(0.0);
  }
  const PcaResult res = pca(t);
  ASSERT_EQ(res.components.size(), 4u);

  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = i; j < 4; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < 4; ++k) dot += res.components[i][k] * res.components[j][k];
      EXPECT_NEAR(dot, i == j ? 1.0 : 0.0, 1e-8) << i << "," << j;
    }

  double total = 0.0, evsum = 0.0;
  for (const double f : res.explained_variance) total += f;
  for (const double ev : res.eigenvalues) evsum += ev;
  EXPECT_NEAR(total, 1.0, 1e-9);
  EXPECT_NEAR(evsum, 4.0, 1e-9);  // trace of a 4x4 correlation matrix
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GE(res.eigenvalues[i - 1], res.eigenvalues[i]);
}

TEST(Pca, ConstantColumnContributesUnitEigenvalue) {
  TrainTable t = make_table({"a", "b"}, {}, {});
  for (int i = 0; i < 8; ++i) {
    t.rows.push_back({static_cast<double>(i), 4.0});
    t.targets.push_back(0.0);
  }
  const PcaResult res = pca(t);  // correlation matrix is the identity
  EXPECT_NEAR(res.eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(res.eigenvalues[1], 1.0, 1e-12);
  EXPECT_NEAR(res.explained_variance[0], 0.5, 1e-12);
}

TEST(SelectFeatures, FixedModeIgnoresDataAndK) {
  TrainTable empty;
  const std::vector<int> want = {0, 4, 5, 11};
  EXPECT_EQ(select_features(empty, 1, FeatureMode::PaperFixed), want);
  EXPECT_EQ(select_features(empty, 9, FeatureMode::PaperFixed), want);
  EXPECT_EQ(paper_fixed_features(), want);
}

TEST(SelectFeatures, AutoRanksByAbsoluteCorrelation) {
  // Target is minus the br_mispred column exactly, and dtlb_miss plus noise;
  // expect rank order {br_mispred, dtlb_miss} — sign must not matter.
  std::vector<std::string> names;
  for (const auto& n : HpcVector::names) names.emplace_back(n);
  names.push_back("core");  // non-counter columns must be ignored
  TrainTable t = make_table(std::move(names), {}, {});

  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> row(13);
    for (auto& v : row) v = rng.uniform01();
    const double target = -3.0 * row[11] + 0.8 * row[7] + 0.01 * rng.uniform01();
    row[12] = 1.0;  // "core" constant; would rank first if counted by mistake
    t.rows.push_back(std::move(row));
    t.targets.push_back(target);
  }

  const std::vector<int> top2 = select_features(t, 2, FeatureMode::Auto);
  ASSERT_EQ(top2.size(), 2u);
  EXPECT_EQ(top2[0], 11);
  EXPECT_EQ(top2[1], 7);

  // k = all 12 returns a permutation of the schema indices.
  std::vector<int> all = select_features(t, 12, FeatureMode::Auto);
  std::sort(all.begin(), all.end());
  for (int i = 0; i < 12; ++i) EXPECT_EQ(all[static_cast<std::size_t>(i)], i);

  EXPECT_THROW(select_features(t, 13, FeatureMode::Auto), ValidationError);
  EXPECT_THROW(select_features(t, 0, FeatureMode::Auto), ValidationError);
}

TEST(SelectFeatures, TiesBreakTowardLowerSchemaIndex) {
  // Columns l1i_access (2) and dtlb_miss (7) are identical copies of the
  // target; everything else is constant and scores zero.
  TrainTable t = make_table({"l1i_access", "dtlb_miss", "l1d_access"}, {}, {});
  for (int i = 0; i < 6; ++i) {
    const double v = static_cast<double>(i * i);
    t.rows.push_back({v, v, 7.0});
    t.targets.push_back(v);
  }
  const std::vector<int> got = select_features(t, 3, FeatureMode::Auto);
  const std::vector<int> want = {2, 7, 0};
  EXPECT_EQ(got, want);
}

TEST(SelectFeatures, RejectsTablesWithoutCounters) {
  TrainTable t = make_table({"core", "freq_ghz"}, {{0.0, 1.6}, {1.0, 2.0}}, {1.0, 2.0});
  EXPECT_THROW(select_features(t, 1, FeatureMode::Auto), ValidationError);
}

TEST(FeatureReport, CollectsCorrelationsAndSelection) {
  std::vector<std::string> names;
  for (const auto& n : HpcVector::names) names.emplace_back(n);
  TrainTable t = make_table(std::move(names), {}, {});
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> row(12);
    for (auto& v : row) v = rng.uniform01();
    row[4] = 0.5;  // one constant column: correlation must be reported as 0
    t.targets.push_back(2.0 * row[0] + rng.uniform01());
    t.rows.push_back(std::move(row));
  }

  const FeatureReport rep = feature_report(t, 3, FeatureMode::Auto);
  EXPECT_EQ(rep.feature_names.size(), 12u);
  EXPECT_EQ(rep.target_correlation.size(), 12u);
  EXPECT_DOUBLE_EQ(rep.target_correlation[4], 0.0);
  EXPECT_GT(rep.target_correlation[0], 0.8);
  EXPECT_EQ(rep.selected.size(), 3u);
  EXPECT_TRUE(std::is_sorted(rep.selected.begin(), rep.selected.end()));

  const nlohmann::json j = rep.to_json();
  EXPECT_TRUE(j.contains("selected_names"));
  EXPECT_TRUE(j.contains("explained_variance"));
  EXPECT_EQ(j.at("selected_indices").size(), 3u);
}
