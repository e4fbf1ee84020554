#pragma once

// Futility stopping via the updated Type-II error Q*_n: the probability,
// under the design alternative, that the completed experiment fails to
// reject. Stopping when Q*_n >= gamma_f caps the futility error at
// q0*/gamma_f and never touches the Type-I side.

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "predq/gaussian.hpp"
#include "predq/mc.hpp"
#include "predq/normal.hpp"

namespace predq {

struct FutilitySpec {
  double theta_star = 0.0;
  double gamma_f = 0.99;
  double q0_star = 0.0;  // 1 - design power at (n_max, alpha_tilde)

  // Martingale bound on P(stop for futility) under theta = theta_star.
  double error_budget() const { return q0_star / gamma_f; }

  void validate() const {
    if (!(theta_star > 0.0)) {
      throw std::domain_error("FutilitySpec: theta_star must be > 0");
    }
    if (!(gamma_f > 0.0 && gamma_f < 1.0)) {
      throw std::domain_error("FutilitySpec: gamma_f must lie in (0,1)");
    }
    if (!(gamma_f > q0_star)) {
      throw std::domain_error("FutilitySpec: need gamma_f > q0_star");
    }
  }
};

inline FutilitySpec make_futility_spec(double theta_star, double gamma_f,
                                       uint64_t n_max, double alpha_tilde) {
  FutilitySpec f;
  f.theta_star = theta_star;
  f.gamma_f = gamma_f;
  f.q0_star = 1.0 - power_fixed(theta_star, n_max, alpha_tilde);
  f.validate();
  return f;
}

// P_{theta*}(T_N not in C_alpha~ | T_n = t_n) for the one-sided Gaussian test.
inline double q_star_gaussian(double t_n, uint64_t n, uint64_t n_max,
                              double alpha_tilde, double theta_star) {
  if (n >= n_max) {
    throw std::domain_error("q_star_gaussian: interim requires n < n_max");
  }
  if (!(alpha_tilde > 0.0 && alpha_tilde < 1.0)) {
    throw std::domain_error("q_star_gaussian: alpha_tilde must lie in (0,1)");
  }
  if (!(theta_star > 0.0)) {
    throw std::domain_error("q_star_gaussian: theta_star must be > 0");
  }
  double tail = static_cast<double>(n_max - n);
  double head = std::sqrt(static_cast<double>(n_max)) *
                norm_upper_quantile(alpha_tilde);
  return norm_cdf((head - t_n - tail * theta_star) / std::sqrt(tail));
}

// Monte-Carlo Q*: completions drawn under the alternative, counted against
// the complement of the rejection region.
template <typename Sampler, typename Region>
QEstimate q_star_mc(Sampler&& alt_sampler, const Region& region, uint64_t b,
                    const StreamKey& key) {
  return estimate_q(std::forward<Sampler>(alt_sampler),
                    Complement<Region>{region}, b, key);
}

enum class FutilityVerdict { kContinue, kStopFutile };

inline FutilityVerdict futility_decide(double q_star, double gamma_f) {
  if (!(q_star >= 0.0 && q_star <= 1.0) || !(gamma_f > 0.0 && gamma_f < 1.0)) {
    throw std::domain_error("futility_decide: inputs out of range");
  }
  return q_star >= gamma_f ? FutilityVerdict::kStopFutile
                           : FutilityVerdict::kContinue;
}

// Cheap screen before the Q* evaluation. Q*_n <= 1 - Q_n for families where
// the alternative stochastically dominates the null on the rejection
// statistic, so Q*_n >= gamma_f is only possible once 1 - Q_n >= gamma_f.
inline bool screen_with_q(double q_n, double gamma_f,
                          bool ordering_declared = true) {
  if (!ordering_declared) {
    throw std::domain_error(
        "screen_with_q: family lacks the declared stochastic ordering");
  }
  if (!(q_n >= 0.0 && q_n <= 1.0) || !(gamma_f > 0.0 && gamma_f < 1.0)) {
    throw std::domain_error("screen_with_q: inputs out of range");
  }
  return 1.0 - q_n >= gamma_f;
}

}  // namespace predq
