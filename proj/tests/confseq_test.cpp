// Confidence sequences by stopping-rule inversion: fixed-sample identities
// at the final look, exact duality with the one-sided test, agreement of the
// general inverter with the closed form, empirical uniform coverage, and the
// distribution-function band.

#include <cmath>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "predq/confseq.hpp"
#include "predq/gaussian.hpp"
#include "predq/rng.hpp"

namespace {

TEST(OneSidedCi, FinalLookIsFixedSampleBound) {
  // at n = n_max the tail term vanishes: bound = mean - z_{alpha gamma}/sqrt(N)
  const uint64_t n_max = 400;
  const double alpha = 0.05, gamma = 0.95;
  double s_n = 37.0;
  double expect = s_n / n_max - predq::norm_upper_quantile(alpha * gamma) /
                                    std::sqrt(static_cast<double>(n_max));
  EXPECT_NEAR(predq::ci_one_sided_mean(s_n, n_max, n_max, alpha, gamma),
              expect, 1e-15);
}

TEST(OneSidedCi, DualToOneSidedTest) {
  // {lower_n >= theta*} iff {Q_n for testing theta <= theta* crosses gamma}
  const uint64_t n_max = 500;
  const double alpha = 0.05, gamma = 0.95, alpha_tilde = alpha * gamma;
  for (uint64_t n : {1ull, 137ull, 499ull}) {
    for (double theta_star : {-0.4, 0.0, 0.25}) {
      // find the s_n at which the recentered sum hits the boundary
      double boundary = predq::rejection_boundary(n, n_max, alpha, gamma) +
                        static_cast<double>(n) * theta_star;
      for (double eps : {-1e-6, 1e-6}) {
        double s_n = boundary + eps;
        bool reject = predq::q_one_sided_composite(
                          s_n, n, n_max, alpha_tilde, theta_star) >= gamma;
        bool covered_out =
            predq::ci_one_sided_mean(s_n, n, n_max, alpha, gamma) >= theta_star;
        EXPECT_EQ(reject, covered_out)
            << "n = " << n << " theta* = " << theta_star << " eps = " << eps;
      }
    }
  }
}

TEST(TwoSidedCi, FinalLookMatchesFixedInterval) {
  const uint64_t n_max = 250;
  const double alpha = 0.04, gamma = 0.5;
  double xbar = 1.3;
  predq::IntervalSequencePoint iv =
      predq::ci_two_sided_mean(xbar, n_max, n_max, alpha, gamma);
  double half = predq::norm_upper_quantile(alpha * gamma / 2.0) /
                std::sqrt(static_cast<double>(n_max));
  EXPECT_NEAR(iv.lower, xbar - half, 1e-15);
  EXPECT_NEAR(iv.upper, xbar + half, 1e-15);
  EXPECT_EQ(iv.n, n_max);
}

TEST(TwoSidedCi, WidthShrinksWithN) {
  // for gamma >= 1/2 the interim relaxation is nonnegative and the width is
  // strictly decreasing in n
  const uint64_t n_max = 1000;
  double prev_width = std::numeric_limits<double>::infinity();
  for (uint64_t n = 100; n <= 1000; n += 100) {
    auto iv = predq::ci_two_sided_mean(0.0, n, n_max, 0.05, 0.9);
    double w = iv.upper - iv.lower;
    EXPECT_GT(w, 0.0);
    EXPECT_LT(w, prev_width) << "n = " << n;
    prev_width = w;
  }
}

TEST(GeneralInvert, ReproducesOneSidedClosedForm) {
  const uint64_t n_max = 200;
  const double alpha = 0.05, gamma = 0.95;
  for (uint64_t n : {1ull, 50ull, 199ull, 200ull}) {
    double s_n = 0.31 * static_cast<double>(n) + 2.0;
    double lower = predq::ci_one_sided_mean(s_n, n, n_max, alpha, gamma);
    // scan window straddling the true edge, asymmetric so the edge is not a
    // grid point
    double lo = lower - 1.37, hi = lower + 2.21;
    auto intervals = predq::ci_general_invert(predq::normal_mean_boundary,
                                              s_n, n, n_max, alpha, gamma, lo,
                                              hi);
    ASSERT_EQ(intervals.size(), 1u) << "n = " << n;
    EXPECT_NEAR(intervals[0].lo, lower, 1e-12) << "n = " << n;
    EXPECT_DOUBLE_EQ(intervals[0].hi, hi);
  }
}

TEST(GeneralInvert, EmptyAndFullWindows) {
  // a huge running sum pushes the retained set above the scanned range
  auto none = predq::ci_general_invert(predq::normal_mean_boundary, 1e6, 50,
                                       100, 0.05, 0.95, -1.0, 1.0);
  EXPECT_TRUE(none.empty());
  // a tiny running sum retains the whole window
  auto all = predq::ci_general_invert(predq::normal_mean_boundary, -1e6, 50,
                                      100, 0.05, 0.95, -1.0, 1.0);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_DOUBLE_EQ(all[0].lo, -1.0);
  EXPECT_DOUBLE_EQ(all[0].hi, 1.0);
}

TEST(OneSidedCi, GammaTradesInterimAgainstFinal) {
  // higher gamma weakens interim bounds (rare early stopping) but tightens
  // the final-look bound (alpha*gamma closer to alpha)
  EXPECT_LT(predq::ci_one_sided_mean(10.0, 50, 100, 0.05, 0.99),
            predq::ci_one_sided_mean(10.0, 50, 100, 0.05, 0.6));
  EXPECT_GT(predq::ci_one_sided_mean(10.0, 100, 100, 0.05, 0.99),
            predq::ci_one_sided_mean(10.0, 100, 100, 0.05, 0.6));
  EXPECT_THROW(predq::ci_one_sided_mean(10.0, 50, 100, 0.05, 1.0),
               std::domain_error);
  EXPECT_THROW(predq::ci_one_sided_mean(10.0, 0, 100, 0.05, 0.95),
               std::domain_error);
}

// Uniform coverage over the whole path: P(exists n: theta notin CI_n) <= alpha.
TEST(OneSidedCi, UniformCoverageEmpirical) {
  const uint64_t n_max = 200;
  const double alpha = 0.05, gamma = 0.95, theta = 0.3;
  const int reps = 20000;
  // miss at n iff lower_n > theta iff t_n > cut[n]
  std::vector<double> cut(n_max + 1);
  for (uint64_t n = 1; n <= n_max; ++n) {
    double fn = static_cast<double>(n);
    double probe = fn * theta;  // solve by linearity: lower(s) is affine in s
    double at_probe = predq::ci_one_sided_mean(probe, n, n_max, alpha, gamma);
    cut[n] = probe + fn * (theta - at_probe);
  }
  predq::RngStream s(21, predq::stream::kScenario, 0);
  int misses = 0;
  for (int r = 0; r < reps; ++r) {
    double t = 0.0;
    bool miss = false;
    for (uint64_t n = 1; n <= n_max; ++n) {
      t += theta + s.normal();
      if (t > cut[n]) {
        miss = true;
        break;
      }
    }
    misses += miss;
  }
  double rate = static_cast<double>(misses) / reps;
  EXPECT_LE(rate, alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
}

TEST(TwoSidedCi, UniformCoverageEmpirical) {
  const uint64_t n_max = 200;
  const double alpha = 0.05, gamma = 0.2, theta = -0.7;
  const int reps = 20000;
  // miss at n iff |t_n - n theta| > halfspan[n] (interval is symmetric in t)
  std::vector<double> halfspan(n_max + 1);
  for (uint64_t n = 1; n <= n_max; ++n) {
    auto iv = predq::ci_two_sided_mean(0.0, n, n_max, alpha, gamma);
    halfspan[n] = static_cast<double>(n) * iv.upper;
  }
  predq::RngStream s(22, predq::stream::kScenario, 0);
  int misses = 0;
  for (int r = 0; r < reps; ++r) {
    double t = 0.0;
    bool miss = false;
    for (uint64_t n = 1; n <= n_max; ++n) {
      t += theta + s.normal();
      if (std::fabs(t - static_cast<double>(n) * theta) > halfspan[n]) {
        miss = true;
        break;
      }
    }
    misses += miss;
  }
  double rate = static_cast<double>(misses) / reps;
  EXPECT_LE(rate, alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
}

TEST(KsNullTable, QuantilesMatchAsymptoticsAndCache) {
  predq::KsNullTable table(1234, 50000);
  // finite-m 95% quantile: ~1.3581/(sqrt(m) + 0.12 + 0.11/sqrt(m))
  double q = table.quantile(400, 0.95);
  EXPECT_NEAR(std::sqrt(400.0) * q, 1.35, 0.05);
  // repeated access returns the cached value bit for bit
  EXPECT_EQ(table.quantile(400, 0.95), q);
  // monotone in p
  EXPECT_LT(table.quantile(400, 0.5), table.quantile(400, 0.99));
  EXPECT_THROW(table.quantile(0, 0.5), std::domain_error);
  EXPECT_THROW(table.quantile(10, 1.0), std::domain_error);
}

TEST(EcdfBand, FinalLookEqualsFixedBandAndMonotoneSchedule) {
  predq::KsNullTable table(1234, 50000);
  const uint64_t n_max = 150;
  const double alpha = 0.05, gamma = 0.95;
  double final_hw = predq::ecdf_band_halfwidth(n_max, n_max, alpha, gamma,
                                               table);
  EXPECT_NEAR(final_hw, table.quantile(n_max, 1.0 - alpha * gamma / 2.0),
              1e-15);
  // early looks are wider
  double early = predq::ecdf_band_halfwidth(30, n_max, alpha, gamma, table);
  EXPECT_GT(early, final_hw);
}

// Uniform band coverage: the band around the running ECDF contains the true
// uniform CDF at every n (equivalently the running KS distance stays within
// the halfwidth schedule).
TEST(EcdfBand, UniformCoverageEmpirical) {
  predq::KsNullTable table(1234, 50000);
  const uint64_t n_max = 60;
  const double alpha = 0.05, gamma = 0.95;
  std::vector<double> hw(n_max + 1, 0.0);
  for (uint64_t n = 1; n <= n_max; ++n) {
    hw[n] = predq::ecdf_band_halfwidth(n, n_max, alpha, gamma, table);
  }
  const int reps = 4000;
  int misses = 0;
  predq::RngStream s(23, predq::stream::kScenario, 0);
  std::vector<double> sample;
  for (int r = 0; r < reps; ++r) {
    sample.clear();
    bool miss = false;
    for (uint64_t n = 1; n <= n_max && !miss; ++n) {
      double x = s.unit();
      sample.insert(std::upper_bound(sample.begin(), sample.end(), x), x);
      if (predq::ks_distance_uniform(sample) > hw[n]) miss = true;
    }
    misses += miss;
  }
  double rate = static_cast<double>(misses) / reps;
  EXPECT_LE(rate, alpha + 3.0 * std::sqrt(alpha * (1 - alpha) / reps));
}

}  // namespace
