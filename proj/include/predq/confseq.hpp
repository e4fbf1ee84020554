#pragma once

// Anytime-valid confidence sequences obtained by inverting the predictive
// stopping rule: one- and two-sided normal-mean intervals, the uniform
// distribution-function band, and a generic boundary-decomposition inverter.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "predq/nonparam.hpp"
#include "predq/normal.hpp"
#include "predq/rng.hpp"

namespace predq {

struct IntervalSequencePoint {
  uint64_t n = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

namespace detail {

inline void check_ci_args(uint64_t n, uint64_t n_max, double alpha,
                          double gamma) {
  if (n < 1 || n > n_max) {
    throw std::domain_error("confidence sequence: need 1 <= n <= n_max");
  }
  if (!(alpha > 0.0 && alpha < 1.0) || !(gamma > 0.0 && gamma < 1.0)) {
    throw std::domain_error("confidence sequence: alpha, gamma must lie in (0,1)");
  }
}

}  // namespace detail

// Lower bound dual to the one-sided test: rejecting H0: theta <= theta*
// whenever Q_n >= gamma is the same event as {lower bound >= theta*}.
inline double ci_one_sided_mean(double s_n, uint64_t n, uint64_t n_max,
                                double alpha, double gamma) {
  detail::check_ci_args(n, n_max, alpha, gamma);
  double fn = static_cast<double>(n);
  double big_n = static_cast<double>(n_max);
  double tail = static_cast<double>(n_max - n);
  double bound = s_n / fn - std::sqrt(big_n) * norm_upper_quantile(alpha * gamma) / fn;
  if (n < n_max) bound += std::sqrt(tail) * norm_upper_quantile(gamma) / fn;
  return bound;
}

// Two-sided interval around the running mean; at n = n_max the width equals
// the fixed-sample width at level alpha*gamma.
inline IntervalSequencePoint ci_two_sided_mean(double x_bar_n, uint64_t n,
                                               uint64_t n_max, double alpha,
                                               double gamma) {
  detail::check_ci_args(n, n_max, alpha, gamma);
  double fn = static_cast<double>(n);
  double root_n_max = std::sqrt(static_cast<double>(n_max));
  double root_tail = std::sqrt(static_cast<double>(n_max - n));
  double z_pair = norm_upper_quantile(alpha * gamma / 2.0);
  double z_gamma = norm_upper_quantile(gamma);
  IntervalSequencePoint out;
  out.n = n;
  out.lower = x_bar_n + root_tail * z_gamma / fn - root_n_max * z_pair / fn;
  out.upper = x_bar_n - root_tail * z_gamma / fn + root_n_max * z_pair / fn;
  return out;
}

// Simulated null quantiles of the one-sample KS distance at sample size m,
// cached per m. Write-once per size; not safe for concurrent first access to
// the same m.
class KsNullTable {
 public:
  explicit KsNullTable(uint64_t seed = 0x4b534e554c4cULL,
                       uint64_t draws = 100000)
      : seed_(seed), draws_(draws) {}

  // Smallest simulated value q with G_m(q) >= p.
  double quantile(uint64_t m, double p) const {
    if (m < 1) throw std::domain_error("KsNullTable: need m >= 1");
    if (!(p > 0.0 && p < 1.0)) {
      throw std::domain_error("KsNullTable: p must lie in (0,1)");
    }
    const std::vector<double>& tab = table(m);
    auto idx = static_cast<uint64_t>(
        std::ceil(p * static_cast<double>(draws_))) - 1;
    return tab[std::min<uint64_t>(idx, draws_ - 1)];
  }

 private:
  const std::vector<double>& table(uint64_t m) const {
    auto it = tables_.find(m);
    if (it != tables_.end()) return it->second;
    RngStream s(seed_, stream::kKsTable, m);
    std::vector<double> stats(draws_);
    std::vector<double> sample(m);
    for (uint64_t b = 0; b < draws_; ++b) {
      for (auto& v : sample) v = s.unit();
      std::sort(sample.begin(), sample.end());
      stats[b] = ks_distance_uniform(sample);
    }
    std::sort(stats.begin(), stats.end());
    return tables_.emplace(m, std::move(stats)).first->second;
  }

  uint64_t seed_;
  uint64_t draws_;
  mutable std::map<uint64_t, std::vector<double>> tables_;
};

// Half-width of the uniform band around the empirical CDF at sample size n;
// the band F_n(s) +/- halfwidth, clipped to [0,1], covers the true CDF
// uniformly in (n, s) with probability >= 1 - alpha. The exclusion rule
// {D_n >= halfwidth} fires only when a gamma-probable KS distance of the
// N - n remaining draws cannot pull the completed distance back under the
// final cut, so the interim slack ADDS the gamma-quantile of the remainder
// distance. The remainder statistic is nonnegative, so subtracting its
// (1-gamma)-quantile (the sign pattern of the symmetric normal-mean case)
// would narrow the band and break uniform coverage under dense monitoring.
inline double ecdf_band_halfwidth(uint64_t n, uint64_t n_max, double alpha,
                                  double gamma, const KsNullTable& g) {
  detail::check_ci_args(n, n_max, alpha, gamma);
  double ratio = static_cast<double>(n_max) / static_cast<double>(n);
  double hw = ratio * g.quantile(n_max, 1.0 - alpha * gamma / 2.0);
  if (n < n_max) hw += (ratio - 1.0) * g.quantile(n_max - n, gamma);
  return hw;
}

struct ThetaInterval {
  double lo = 0.0, hi = 0.0;
};

// Inverts a boundary decomposition T_N = T_n + C_{N-n}(Z, theta): theta is
// retained while C_N(level alpha*gamma, theta) - C_{N-n}(level gamma, theta)
// >= t_n. c_fn(k, u, theta) must return the upper-u quantile of the size-k
// statistic under theta and must return 0 at k = 0. Membership is scanned on
// a theta grid and edges refined by bisection.
template <typename CFn>
std::vector<ThetaInterval> ci_general_invert(CFn&& c_fn, double t_n, uint64_t n,
                                             uint64_t n_max, double alpha,
                                             double gamma, double theta_lo,
                                             double theta_hi,
                                             uint64_t grid = 512) {
  detail::check_ci_args(n, n_max, alpha, gamma);
  if (!(theta_lo < theta_hi) || grid < 2) {
    throw std::domain_error("ci_general_invert: bad theta grid");
  }
  auto member = [&](double theta) {
    double head = c_fn(n_max, alpha * gamma, theta);
    double tail = n < n_max ? c_fn(n_max - n, gamma, theta) : 0.0;
    return head - tail >= t_n;
  };
  auto refine = [&](double inside, double outside) {
    for (int i = 0; i < 60; ++i) {
      double mid = 0.5 * (inside + outside);
      if (mid == inside || mid == outside) break;
      (member(mid) ? inside : outside) = mid;
    }
    return inside;
  };
  double step = (theta_hi - theta_lo) / static_cast<double>(grid - 1);
  std::vector<ThetaInterval> out;
  bool prev = member(theta_lo);
  double prev_theta = theta_lo;
  if (prev) out.push_back({theta_lo, theta_hi});
  for (uint64_t i = 1; i < grid; ++i) {
    double theta = i + 1 == grid ? theta_hi
                                 : theta_lo + step * static_cast<double>(i);
    bool cur = member(theta);
    if (cur && !prev) {
      out.push_back({refine(theta, prev_theta), theta_hi});
    } else if (!cur && prev) {
      out.back().hi = refine(prev_theta, theta);
    }
    prev = cur;
    prev_theta = theta;
  }
  return out;
}

// Quantile decomposition of the normal-mean running sum: plugging this into
// ci_general_invert reproduces ci_one_sided_mean exactly.
inline double normal_mean_boundary(uint64_t k, double u, double theta) {
  if (k == 0) return 0.0;
  double fk = static_cast<double>(k);
  return std::sqrt(fk) * norm_upper_quantile(u) + fk * theta;
}

}  // namespace predq
