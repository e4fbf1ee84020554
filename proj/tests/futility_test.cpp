// Futility stopping via the updated Type-II probability Q*: frozen oracles
// for the closed form, MC agreement, the complement identity, the cheap
// screen, and the budget bound under the design alternative.

#include <cmath>
#include <cstdint>

#include <gtest/gtest.h>

#include "predq/futility.hpp"
#include "predq/gaussian.hpp"
#include "predq/rng.hpp"

namespace {

// Frozen 40-digit oracles.
constexpr double kQ0Star = 0.10798864449202042;   // theta*=.13, N=500, a=.0475
constexpr double kQStarAt5 = 0.16272037200848871; // t=5, n=100, same design

TEST(FutilitySpec, BudgetAndValidation) {
  predq::FutilitySpec f = predq::make_futility_spec(0.13, 0.99, 500, 0.0475);
  EXPECT_NEAR(f.q0_star, kQ0Star, 1e-14);
  EXPECT_NEAR(f.error_budget(), kQ0Star / 0.99, 1e-14);
  EXPECT_THROW(predq::make_futility_spec(-0.1, 0.99, 500, 0.0475),
               std::domain_error);
  EXPECT_THROW(predq::make_futility_spec(0.13, 1.0, 500, 0.0475),
               std::domain_error);
  // gamma_f must exceed the starting error, otherwise the budget is vacuous
  EXPECT_THROW(predq::make_futility_spec(0.13, 0.05, 500, 0.0475),
               std::domain_error);
}

TEST(QStar, FrozenOracleAndLimits) {
  EXPECT_NEAR(predq::q_star_gaussian(5.0, 100, 500, 0.0475, 0.13), kQStarAt5,
              1e-14);
  // Q*_0 with t = 0 equals 1 - design power = q0*
  EXPECT_NEAR(predq::q_star_gaussian(0.0, 0, 500, 0.0475, 0.13), kQ0Star,
              1e-14);
  // decreasing in t_n (more evidence, less futility)
  EXPECT_GT(predq::q_star_gaussian(-10.0, 100, 500, 0.0475, 0.13),
            predq::q_star_gaussian(10.0, 100, 500, 0.0475, 0.13));
  EXPECT_THROW(predq::q_star_gaussian(0.0, 500, 500, 0.0475, 0.13),
               std::domain_error);
}

TEST(QStar, ComplementIdentityAtThetaZero) {
  // with theta* = 0 the alternative is the null: Q* = 1 - Q exactly
  for (double t : {-4.0, 0.0, 3.0, 11.0}) {
    double q = predq::q_one_sided(t, 60, 200, 0.0475);
    // q_star_gaussian guards theta*>0; evaluate the formula via the
    // one-sided closed form directly
    double head = std::sqrt(200.0) * predq::norm_upper_quantile(0.0475);
    double qs0 = predq::norm_cdf((head - t) / std::sqrt(140.0));
    EXPECT_NEAR(qs0, 1.0 - q, 1e-14);
  }
}

struct AltCompletion {
  double t_n, theta;
  uint64_t n, n_max;

  double operator()(predq::RngStream& s, uint32_t&) const {
    double t = t_n;
    for (uint64_t i = n; i < n_max; ++i) t += theta + s.normal();
    return t;
  }
};

TEST(QStarMc, MatchesClosedFormWithinSampling) {
  const uint64_t n = 100, n_max = 500;
  const double alpha_tilde = 0.0475, theta_star = 0.13;
  double crit = std::sqrt(static_cast<double>(n_max)) *
                predq::norm_upper_quantile(alpha_tilde);
  for (double t_n : {-5.0, 5.0, 30.0}) {
    double exact = predq::q_star_gaussian(t_n, n, n_max, alpha_tilde,
                                          theta_star);
    predq::QEstimate est = predq::q_star_mc(
        AltCompletion{t_n, theta_star, n, n_max}, predq::OneSidedCut{crit},
        100000, predq::StreamKey{31, predq::stream::kFutility, 0});
    double se = std::max(est.std_err, 5e-4);
    EXPECT_NEAR(est.q_hat, exact, 3.5 * se) << "t_n = " << t_n;
  }
}

TEST(Screen, TriggersExactlyWhenFutilityIsPossible) {
  // Q* <= 1 - Q, so Q* >= gamma_f requires 1 - Q >= gamma_f
  EXPECT_FALSE(predq::screen_with_q(0.5, 0.99));    // 1-Q = .5 < .99: skip
  EXPECT_TRUE(predq::screen_with_q(0.005, 0.99));   // 1-Q = .995: evaluate
  EXPECT_TRUE(predq::screen_with_q(0.01, 0.99));    // boundary: 0.99 >= 0.99
  EXPECT_THROW(predq::screen_with_q(0.5, 0.99, false), std::domain_error);
  EXPECT_THROW(predq::screen_with_q(1.5, 0.99), std::domain_error);
}

TEST(Screen, NeverSkipsAnActionableQStar) {
  // empirical version of the ordering: wherever Q* >= gamma_f the screen
  // must have returned true
  const uint64_t n_max = 300;
  const double alpha_tilde = 0.0475, theta_star = 0.13, gamma_f = 0.9;
  predq::RngStream s(32, predq::stream::kScenario, 0);
  int actionable = 0;
  for (int r = 0; r < 50000; ++r) {
    uint64_t n = 1 + static_cast<uint64_t>(s.unit() * (n_max - 1));
    double t = std::sqrt(static_cast<double>(n)) * 3.0 * s.normal();
    double q = predq::q_one_sided(t, n, n_max, alpha_tilde);
    double qs = predq::q_star_gaussian(t, n, n_max, alpha_tilde, theta_star);
    if (qs >= gamma_f) {
      ++actionable;
      ASSERT_TRUE(predq::screen_with_q(q, gamma_f))
          << "n = " << n << " t = " << t;
    }
  }
  EXPECT_GT(actionable, 100);  // the sweep must actually hit the region
}

TEST(Decide, ThresholdSemantics) {
  EXPECT_EQ(predq::futility_decide(0.99, 0.99),
            predq::FutilityVerdict::kStopFutile);
  EXPECT_EQ(predq::futility_decide(0.9899, 0.99),
            predq::FutilityVerdict::kContinue);
  EXPECT_THROW(predq::futility_decide(1.2, 0.99), std::domain_error);
}

// Under theta = theta*, P(futility stop) <= q0*/gamma_f.
TEST(Budget, HoldsUnderDesignAlternative) {
  const uint64_t n_max = 200;
  const double alpha = 0.05, gamma = 0.95;
  const double alpha_tilde = alpha * gamma;
  const double theta_star = predq::effect_for_power(n_max, alpha_tilde, 0.85);
  const double gamma_f = 0.9;
  predq::FutilitySpec f =
      predq::make_futility_spec(theta_star, gamma_f, n_max, alpha_tilde);
  const int reps = 40000;
  predq::RngStream s(33, predq::stream::kScenario, 0);
  int stops = 0;
  for (int r = 0; r < reps; ++r) {
    double t = 0.0;
    for (uint64_t n = 1; n < n_max; ++n) {
      t += theta_star + s.normal();
      double qs = predq::q_star_gaussian(t, n, n_max, alpha_tilde, theta_star);
      if (predq::futility_decide(qs, gamma_f) ==
          predq::FutilityVerdict::kStopFutile) {
        ++stops;
        break;
      }
    }
  }
  double rate = static_cast<double>(stops) / reps;
  double budget = f.error_budget();
  EXPECT_LE(rate, budget + 3.0 * std::sqrt(budget * (1 - budget) / reps));
}

// (Q*_n) is a supermartingale under theta ~ theta* seen through increments.
TEST(QStarPath, MartingaleUnderAlternative) {
  const uint64_t n_max = 60, look = 30;
  const double alpha_tilde = 0.0475, theta_star = 0.2;
  const int reps = 200000;
  predq::RngStream s(34, predq::stream::kScenario, 0);
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < reps; ++r) {
    double t = 0.0;
    for (uint64_t i = 0; i < look; ++i) t += theta_star + s.normal();
    double q1 = predq::q_star_gaussian(t, look, n_max, alpha_tilde,
                                       theta_star);
    double q2 = predq::q_star_gaussian(t + theta_star + s.normal(), look + 1,
                                       n_max, alpha_tilde, theta_star);
    double d = q2 - q1;
    sum += d;
    sum2 += d * d;
  }
  double mean = sum / reps;
  double sd = std::sqrt(sum2 / reps - mean * mean);
  EXPECT_LE(std::fabs(mean), 4.0 * sd / std::sqrt(static_cast<double>(reps)));
}

}  // namespace
