// Plug-in composite-null families: hand-computed oracles for the summary
// statistics, degenerate-data paths, and distributional checks on the
// completion samplers.

#include <cmath>
#include <cstdint>

#include <gtest/gtest.h>

#include "predq/families.hpp"

namespace {

TEST(PairWelford, HandOracle) {
  // X = {0, 2}, Y = {1, 3}: means 1 and 2, each sample variance 2,
  // pooled mean 1.5, pooled var (2+2)/2 = 2.
  predq::PairWelford w;
  w.add(0.0, 1.0);
  w.add(2.0, 3.0);
  EXPECT_DOUBLE_EQ(w.mean_x, 1.0);
  EXPECT_DOUBLE_EQ(w.mean_y, 2.0);
  EXPECT_DOUBLE_EQ(w.pooled_mean(), 1.5);
  EXPECT_DOUBLE_EQ(w.pooled_var(), 2.0);
  // |t| = |1 - 2| / sqrt(2 * 2 / 2) = 1 / sqrt(2)
  uint32_t flags = 0;
  EXPECT_NEAR(predq::pooled_t_statistic(w, &flags), 1.0 / std::sqrt(2.0),
              1e-15);
  EXPECT_EQ(flags, 0u);
}

TEST(PairWelford, DegenerateVarianceFlagged) {
  predq::PairWelford w;
  w.add(1.0, 1.0);
  w.add(1.0, 1.0);
  uint32_t flags = 0;
  double t = predq::pooled_t_statistic(w, &flags);
  EXPECT_EQ(t, 0.0);  // equal means, so numerator is 0 regardless of floor
  EXPECT_TRUE(flags & predq::kFlagDegenerateVariance);

  predq::PairWelford w2;
  w2.add(1.0, 2.0);
  w2.add(1.0, 2.0);
  flags = 0;
  double t2 = predq::pooled_t_statistic(w2, &flags);
  EXPECT_TRUE(flags & predq::kFlagDegenerateVariance);
  EXPECT_TRUE(std::isfinite(t2));
  EXPECT_GT(t2, 1e6);  // epsilon-floored denominator, huge but finite

  predq::PairWelford w3;
  w3.add(0.0, 0.0);
  EXPECT_THROW(w3.pooled_var(), std::domain_error);
}

// The plug-in completion preserves location/scale equivariance of |t|:
// shifting and scaling the observed pairs leaves the completed statistic
// unchanged for the same stream.
TEST(PooledNormal, CompletionEquivariant) {
  predq::PairWelford a, b;
  a.add(0.3, -0.2);
  a.add(1.1, 0.4);
  a.add(-0.5, 0.9);
  b.add(10 + 2 * 0.3, 10 - 2 * 0.2);
  b.add(10 + 2 * 1.1, 10 + 2 * 0.4);
  b.add(10 - 2 * 0.5, 10 + 2 * 0.9);
  for (uint64_t r = 0; r < 50; ++r) {
    uint32_t fa = 0, fb = 0;
    predq::RngStream sa(77, predq::stream::kCompletion, r);
    predq::RngStream sb(77, predq::stream::kCompletion, r);
    double ta = predq::pooled_normal_completed_stat(a, 20, sa, fa);
    double tb = predq::pooled_normal_completed_stat(b, 20, sb, fb);
    EXPECT_NEAR(ta, tb, 1e-9);
  }
}

TEST(PooledNormal, NullStatRoughlyStudent) {
  // |t| with 2N-2 df at N=50: P(|t| > 1.984) ~ 0.05. The plug-in scheme
  // is close to but not exactly t; allow a loose band.
  const int reps = 20000;
  int exceed = 0;
  for (int r = 0; r < reps; ++r) {
    uint32_t flags = 0;
    predq::RngStream s(78, predq::stream::kCalibration, r);
    exceed += predq::pooled_normal_null_stat(50, s, flags) > 1.984;
  }
  double rate = static_cast<double>(exceed) / reps;
  EXPECT_GT(rate, 0.02);
  EXPECT_LT(rate, 0.10);
}

TEST(Bernoulli, HandOracles) {
  predq::BernoulliPairs b;
  b.add(true, false);
  b.add(true, true);
  b.add(false, false);
  b.add(true, false);
  b.add(false, false);
  EXPECT_EQ(b.n, 5u);
  EXPECT_EQ(b.sum_x, 3u);
  EXPECT_EQ(b.sum_y, 1u);
  // pooled rate (3+1)/(2*5) = 0.4
  EXPECT_DOUBLE_EQ(b.pooled_rate(), 0.4);
  // final statistic at N = 5: |3-1| / sqrt(2*5*0.4*0.6) = 2 / sqrt(2.4)
  uint32_t flags = 0;
  EXPECT_NEAR(predq::bernoulli_statistic(3, 1, 5, &flags),
              2.0 / std::sqrt(2.4), 1e-15);
  EXPECT_EQ(flags, 0u);
}

TEST(Bernoulli, DegenerateRateGivesZeroAndFlag) {
  uint32_t flags = 0;
  EXPECT_DOUBLE_EQ(predq::bernoulli_statistic(0, 0, 10, &flags), 0.0);
  EXPECT_TRUE(flags & predq::kFlagDegenerateVariance);
  flags = 0;
  EXPECT_DOUBLE_EQ(predq::bernoulli_statistic(10, 10, 10, &flags), 0.0);
  EXPECT_TRUE(flags & predq::kFlagDegenerateVariance);
}

TEST(Bernoulli, CompletedStatPlausibleNullLevel) {
  // From an empty summary the scheme burns in at p = 1/2 and then tracks
  // the pooled rate; the final statistic should be near-standard normal.
  const int reps = 20000;
  int exceed = 0;
  for (int r = 0; r < reps; ++r) {
    uint32_t flags = 0;
    predq::BernoulliPairs b;
    predq::RngStream s(79, predq::stream::kCalibration, r);
    exceed += predq::pooled_bernoulli_completed_stat(b, 100, s, flags) > 1.96;
  }
  double rate = static_cast<double>(exceed) / reps;
  EXPECT_GT(rate, 0.02);
  EXPECT_LT(rate, 0.09);
}

TEST(MleSummary, ThreePointTrace) {
  // Increments use the constrained MLEs of the *preceding* data.
  // x1 = 1: prev mean 0, tilde = hat = 0, increment 0.
  // x2 = -2: prev mean 1, tilde = 1, hat = 0,
  //   increment -0.5((x-1)^2 - x^2) = -0.5(9 - 4) = -2.5.
  // x3 = 0.5: prev mean -0.5, tilde = 0, hat = -0.5,
  //   increment -0.5((0.5)^2 - (1.0)^2) = 0.375.
  predq::MleSummary m;
  m.add(1.0);
  EXPECT_DOUBLE_EQ(m.log_ratio, 0.0);
  m.add(-2.0);
  EXPECT_DOUBLE_EQ(m.log_ratio, -2.5);
  m.add(0.5);
  EXPECT_DOUBLE_EQ(m.log_ratio, -2.5 + 0.375);
  EXPECT_EQ(m.n, 3u);
  EXPECT_DOUBLE_EQ(m.sum, -0.5);
}

TEST(MleSummary, ThresholdAndNullControl) {
  EXPECT_NEAR(predq::mle_log_threshold(0.05), -std::log(0.05), 1e-15);
  // P(completed log-ratio >= -log alpha) <= alpha under the null
  // (likelihood-ratio / Markov argument); empirical check.
  const int reps = 20000;
  const double alpha_tilde = 0.0475;
  int exceed = 0;
  for (int r = 0; r < reps; ++r) {
    predq::MleSummary m;
    m.add(0.4);  // arbitrary fixed prefix
    predq::RngStream s(80, predq::stream::kCompletion, r);
    double lr = predq::mle_completed_log_ratio(m, 60, s);
    exceed += lr >= predq::mle_log_threshold(alpha_tilde);
  }
  double rate = static_cast<double>(exceed) / reps;
  EXPECT_LE(rate, alpha_tilde + 3.0 * std::sqrt(alpha_tilde / reps));
}

TEST(GroupMeanZ, HandOracleAndModes) {
  // Groups: X = {1, 2, 3} (mean 2, var 1), Y = {0, 0, 0} is degenerate,
  // so use Y = {0, 1, 2} (mean 1, var 1).
  predq::GroupSummary g;
  g.m_x = 3;
  g.mean_x = 2.0;
  g.s2_x = 1.0;
  g.m_y = 3;
  g.mean_y = 1.0;
  g.s2_y = 1.0;
  // pooled: s2 = 1, denom = sqrt(2/3), z = sqrt(3/2)
  EXPECT_NEAR(predq::group_mean_z(g, true), std::sqrt(1.5), 1e-15);
  // Welch denominator identical when variances/sizes are equal
  EXPECT_NEAR(predq::group_mean_z(g, false), std::sqrt(1.5), 1e-15);
  g.s2_y = 3.0;
  // pooled s2 = 2, denom sqrt(4/3); welch denom sqrt(1/3 + 1)
  EXPECT_NEAR(predq::group_mean_z(g, true), 1.0 / std::sqrt(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(predq::group_mean_z(g, false), 1.0 / std::sqrt(4.0 / 3.0),
              1e-15);
  g.m_y = 6;
  // welch now differs: denom sqrt(1/3 + 3/6) = sqrt(5/6)
  EXPECT_NEAR(predq::group_mean_z(g, false), 1.0 / std::sqrt(5.0 / 6.0),
              1e-15);
}

TEST(GroupMeanZ, GuardsDegenerateInput) {
  predq::GroupSummary g;
  g.m_x = 1;
  g.m_y = 5;
  EXPECT_THROW(predq::group_mean_z(g, true), std::domain_error);
  g.m_x = 5;
  g.mean_x = 1.0;
  g.mean_y = 0.0;
  g.s2_x = 0.0;
  g.s2_y = 0.0;
  EXPECT_THROW(predq::group_mean_z(g, true), std::domain_error);
  // equal means short-circuit to 0 even with zero variances
  g.mean_y = 1.0;
  EXPECT_DOUBLE_EQ(predq::group_mean_z(g, true), 0.0);
}

}  // namespace
