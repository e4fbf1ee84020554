#pragma once

// Closed-form predictive rejection probabilities for normal-mean tests, the
// equivalent stopping boundaries on the running sum, and design planning
// (sample-size inflation, power, stopping-time tail bound).
//
// Conventions: T_n is the running sum of (standardized) observations, N the
// planned maximal sample size, alpha_tilde = alpha * gamma the tightened
// level used inside the fixed-sample critical region.

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

#include "predq/normal.hpp"

namespace predq {

inline double derive_predictive_level(double alpha, double gamma) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("derive_predictive_level: alpha must lie in (0,1)");
  }
  if (!(gamma > 0.0 && gamma <= 1.0)) {
    throw std::domain_error("derive_predictive_level: gamma must lie in (0,1]");
  }
  return alpha * gamma;
}

namespace detail {

inline void check_level(double alpha_tilde, const char* who) {
  if (!(alpha_tilde > 0.0 && alpha_tilde < 1.0)) {
    throw std::domain_error(std::string(who) + ": level must lie in (0,1)");
  }
}

inline void check_interim(uint64_t n, uint64_t n_max, const char* who) {
  if (n >= n_max) {
    throw std::domain_error(std::string(who) +
                            ": n must be < n_max (final look is an indicator)");
  }
}

}  // namespace detail

// P(T_N >= sqrt(N) z_{1-alpha_tilde} | T_n), completing with iid N(0,1).
inline double q_one_sided(double t_n, uint64_t n, uint64_t n_max,
                          double alpha_tilde) {
  detail::check_level(alpha_tilde, "q_one_sided");
  detail::check_interim(n, n_max, "q_one_sided");
  double root_n = std::sqrt(static_cast<double>(n_max));
  double tail = std::sqrt(static_cast<double>(n_max - n));
  double z = norm_upper_quantile(alpha_tilde);
  return norm_sf((root_n * z - t_n) / tail);
}

inline bool final_reject_one_sided(double t_n, uint64_t n_max,
                                   double alpha_tilde) {
  detail::check_level(alpha_tilde, "final_reject_one_sided");
  return t_n >= std::sqrt(static_cast<double>(n_max)) *
                    norm_upper_quantile(alpha_tilde);
}

inline double q_two_sided(double t_n, uint64_t n, uint64_t n_max,
                          double alpha_tilde) {
  detail::check_level(alpha_tilde, "q_two_sided");
  detail::check_interim(n, n_max, "q_two_sided");
  double crit = std::sqrt(static_cast<double>(n_max)) *
                norm_upper_quantile(0.5 * alpha_tilde);
  double tail = std::sqrt(static_cast<double>(n_max - n));
  return norm_sf((crit - t_n) / tail) + norm_cdf((-crit - t_n) / tail);
}

inline bool final_reject_two_sided(double t_n, uint64_t n_max,
                                   double alpha_tilde) {
  detail::check_level(alpha_tilde, "final_reject_two_sided");
  return std::fabs(t_n) >= std::sqrt(static_cast<double>(n_max)) *
                               norm_upper_quantile(0.5 * alpha_tilde);
}

// Two-sample known-variance test on paired accrual. diff_sum is
// sum_{i<=n} (X_i - Y_i); increments have variance 2 under the null.
inline double q_two_sample_known_var(double diff_sum, uint64_t n,
                                     uint64_t n_max, double alpha_tilde) {
  detail::check_level(alpha_tilde, "q_two_sample_known_var");
  detail::check_interim(n, n_max, "q_two_sample_known_var");
  double crit = norm_upper_quantile(0.5 * alpha_tilde) *
                std::sqrt(2.0 * static_cast<double>(n_max));
  double tail = std::sqrt(2.0 * static_cast<double>(n_max - n));
  return norm_sf((crit - diff_sum) / tail) + norm_cdf((-crit - diff_sum) / tail);
}

inline bool final_reject_two_sample(double diff_sum, uint64_t n_max,
                                    double alpha_tilde) {
  detail::check_level(alpha_tilde, "final_reject_two_sample");
  return std::fabs(diff_sum) >= norm_upper_quantile(0.5 * alpha_tilde) *
                                    std::sqrt(2.0 * static_cast<double>(n_max));
}

// T_n threshold equivalent to Q_n >= gamma for the one-sided test.
// gamma == 1 makes early stopping impossible (boundary +inf for n < N).
inline double rejection_boundary(uint64_t n, uint64_t n_max, double alpha,
                                 double gamma) {
  double alpha_tilde = derive_predictive_level(alpha, gamma);
  if (n < 1 || n > n_max) {
    throw std::domain_error("rejection_boundary: need 1 <= n <= n_max");
  }
  double head = std::sqrt(static_cast<double>(n_max)) *
                norm_upper_quantile(alpha_tilde);
  if (n == n_max) return head;
  if (gamma == 1.0) return std::numeric_limits<double>::infinity();
  // Phi^{-1}(1-gamma) is negative for the usual gamma near 1.
  return head - std::sqrt(static_cast<double>(n_max - n)) *
                    norm_upper_quantile(gamma);
}

inline uint64_t inflate_sample_size(uint64_t n_fixed, double alpha,
                                    double gamma, double beta_power) {
  double alpha_tilde = derive_predictive_level(alpha, gamma);
  if (!(beta_power > 0.0 && beta_power < 1.0)) {
    throw std::domain_error("inflate_sample_size: power must lie in (0,1)");
  }
  if (n_fixed < 1) {
    throw std::domain_error("inflate_sample_size: n_fixed must be >= 1");
  }
  double zb = norm_quantile(beta_power);
  double ratio = (norm_upper_quantile(alpha_tilde) + zb) /
                 (norm_upper_quantile(alpha) + zb);
  return static_cast<uint64_t>(
      std::ceil(static_cast<double>(n_fixed) * ratio * ratio));
}

inline double power_fixed(double theta, uint64_t n, double level) {
  detail::check_level(level, "power_fixed");
  if (n < 1) throw std::domain_error("power_fixed: n must be >= 1");
  return norm_sf(norm_upper_quantile(level) -
                 std::sqrt(static_cast<double>(n)) * theta);
}

// Effect size giving the requested power for the one-sided fixed test.
inline double effect_for_power(uint64_t n, double level, double beta_power) {
  detail::check_level(level, "effect_for_power");
  return (norm_upper_quantile(level) + norm_quantile(beta_power)) /
         std::sqrt(static_cast<double>(n));
}

inline double power_bound_sequential(double theta, uint64_t n_inflated,
                                     double alpha, double gamma) {
  return power_fixed(theta, n_inflated, derive_predictive_level(alpha, gamma));
}

// Lower bound on P(tau <= m) under drift theta_star, from P(T_m >= boundary_m).
inline double stopping_tail_bound(uint64_t m, uint64_t n_max, double alpha,
                                  double gamma, double theta_star) {
  if (m < 1 || m > n_max) {
    throw std::domain_error("stopping_tail_bound: need 1 <= m <= n_max");
  }
  if (!(theta_star > 0.0)) {
    throw std::domain_error("stopping_tail_bound: theta_star must be > 0");
  }
  double b = rejection_boundary(m, n_max, alpha, gamma);
  return norm_sf((b - static_cast<double>(m) * theta_star) /
                 std::sqrt(static_cast<double>(m)));
}

// One-sided test of the composite null theta <= theta0: same closed form on
// the recentered sum. (Q_n) is a supermartingale under any theta < theta0,
// so the Doob bound still gives anytime Type-I <= alpha.
inline double q_one_sided_composite(double t_n, uint64_t n, uint64_t n_max,
                                    double alpha_tilde, double theta0) {
  return q_one_sided(t_n - static_cast<double>(n) * theta0, n, n_max,
                     alpha_tilde);
}

}  // namespace predq
