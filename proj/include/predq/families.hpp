#pragma once

// Plug-in sequential nulls for composite hypotheses: the composite null is
// recast as a concrete sampling scheme whose parameters are re-fit from the
// (observed + already completed) data before every future draw. Each family
// provides a summary type, an observation update, a completed-sample
// statistic sampler, and the fixed-sample statistic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

#include "predq/mc.hpp"
#include "predq/rng.hpp"

namespace predq {

// ---------------------------------------------------------------------------
// Two-sample pooled-normal t (unknown common mean/variance), paired accrual.

struct PairWelford {
  uint64_t n = 0;
  double mean_x = 0.0, m2_x = 0.0;
  double mean_y = 0.0, m2_y = 0.0;

  void add(double x, double y) {
    ++n;
    double dx = x - mean_x;
    mean_x += dx / static_cast<double>(n);
    m2_x += dx * (x - mean_x);
    double dy = y - mean_y;
    mean_y += dy / static_cast<double>(n);
    m2_y += dy * (y - mean_y);
  }

  double pooled_mean() const { return 0.5 * (mean_x + mean_y); }

  // (n-1)(S^2_X + S^2_Y) / (2n-2)
  double pooled_var() const {
    if (n < 2) throw std::domain_error("pooled_var: need n >= 2");
    return (m2_x + m2_y) / (2.0 * static_cast<double>(n) - 2.0);
  }
};

inline double pooled_t_statistic(const PairWelford& w, uint32_t* flags) {
  double v = w.pooled_var();
  if (v <= 0.0) {
    v = std::numeric_limits<double>::epsilon();
    if (flags) *flags |= kFlagDegenerateVariance;
  }
  return std::fabs(w.mean_x - w.mean_y) /
         std::sqrt(v * 2.0 / static_cast<double>(w.n));
}

// One completed |t| statistic; re-fits the plug-in normal after every pair.
inline double pooled_normal_completed_stat(PairWelford w, uint64_t n_max,
                                           RngStream& s, uint32_t& flags) {
  if (w.n < 2) throw std::domain_error("pooled_normal: need n >= 2");
  for (uint64_t i = w.n; i < n_max; ++i) {
    double v = w.pooled_var();
    if (v <= 0.0) {
      v = std::numeric_limits<double>::epsilon();
      flags |= kFlagDegenerateVariance;
    }
    double m = w.pooled_mean();
    double sd = std::sqrt(v);
    w.add(m + sd * s.normal(), m + sd * s.normal());
  }
  return pooled_t_statistic(w, &flags);
}

// Null generator for calibration: two standard-normal pairs, then the
// plug-in scheme out to n_max.
inline double pooled_normal_null_stat(uint64_t n_max, RngStream& s,
                                      uint32_t& flags) {
  PairWelford w;
  w.add(s.normal(), s.normal());
  w.add(s.normal(), s.normal());
  return pooled_normal_completed_stat(w, n_max, s, flags);
}

// ---------------------------------------------------------------------------
// Two-sample pooled-Bernoulli, paired accrual. The first n0 pairs of any
// completion are drawn at p = 1/2; afterwards at the running pooled rate.

struct BernoulliPairs {
  uint64_t n = 0;
  uint64_t sum_x = 0, sum_y = 0;
  uint64_t n0 = 5;

  void add(bool x, bool y) {
    ++n;
    sum_x += x ? 1 : 0;
    sum_y += y ? 1 : 0;
  }

  double pooled_rate() const {
    return static_cast<double>(sum_x + sum_y) / (2.0 * static_cast<double>(n));
  }
};

inline double bernoulli_statistic(uint64_t sum_x, uint64_t sum_y,
                                  uint64_t n_max, uint32_t* flags) {
  double p = static_cast<double>(sum_x + sum_y) /
             (2.0 * static_cast<double>(n_max));
  double denom = std::sqrt(2.0 * static_cast<double>(n_max) * p * (1.0 - p));
  if (denom == 0.0) {
    if (flags) *flags |= kFlagDegenerateVariance;
    return 0.0;
  }
  double diff = static_cast<double>(sum_x) - static_cast<double>(sum_y);
  return std::fabs(diff) / denom;
}

inline double pooled_bernoulli_completed_stat(BernoulliPairs b, uint64_t n_max,
                                              RngStream& s, uint32_t& flags) {
  for (uint64_t i = b.n; i < n_max; ++i) {
    double p = (i < b.n0 || i == 0)
                   ? 0.5
                   : static_cast<double>(b.sum_x + b.sum_y) /
                         (2.0 * static_cast<double>(i));
    b.add(s.unit() < p, s.unit() < p);
  }
  return bernoulli_statistic(b.sum_x, b.sum_y, n_max, &flags);
}

// ---------------------------------------------------------------------------
// Constrained-MLE likelihood-ratio family (normal mean, unit variance).
// Numerator densities use the alternative-constrained MLE max(0, mean) of
// the preceding data, denominator the null-constrained min(0, mean);
// completions draw from the null plug-in. Accumulation is in log domain.

struct MleSummary {
  uint64_t n = 0;
  double sum = 0.0;
  double log_ratio = 0.0;

  void add(double x) {
    double mean_prev = n ? sum / static_cast<double>(n) : 0.0;
    double tilde = std::max(0.0, mean_prev);
    double hat = std::min(0.0, mean_prev);
    log_ratio += -0.5 * ((x - tilde) * (x - tilde) - (x - hat) * (x - hat));
    sum += x;
    ++n;
  }
};

// Log of the completed density-ratio product.
inline double mle_completed_log_ratio(MleSummary m, uint64_t n_max,
                                      RngStream& s) {
  for (uint64_t i = m.n; i < n_max; ++i) {
    double mean_prev = i ? m.sum / static_cast<double>(i) : 0.0;
    m.add(std::min(0.0, mean_prev) + s.normal());
  }
  return m.log_ratio;
}

inline double mle_log_threshold(double alpha_tilde) {
  return -std::log(alpha_tilde);
}

// ---------------------------------------------------------------------------
// Group-mean increments: each "observation" is a pair of group summaries,
// standardized to an approximately N(0,1) increment under the null.

struct GroupSummary {
  uint64_t m_x = 0;
  double mean_x = 0.0, s2_x = 0.0;
  uint64_t m_y = 0;
  double mean_y = 0.0, s2_y = 0.0;
};

inline double group_mean_z(const GroupSummary& g, bool pooled_variance) {
  if (g.m_x < 2 || g.m_y < 2) {
    throw std::domain_error("group_mean_z: need group sizes >= 2");
  }
  double diff = g.mean_x - g.mean_y;
  if (diff == 0.0) return 0.0;
  double denom;
  if (pooled_variance) {
    double s2 = (static_cast<double>(g.m_x - 1) * g.s2_x +
                 static_cast<double>(g.m_y - 1) * g.s2_y) /
                static_cast<double>(g.m_x + g.m_y - 2);
    denom = std::sqrt(s2 * (1.0 / static_cast<double>(g.m_x) +
                            1.0 / static_cast<double>(g.m_y)));
  } else {
    denom = std::sqrt(g.s2_x / static_cast<double>(g.m_x) +
                      g.s2_y / static_cast<double>(g.m_y));
  }
  if (denom == 0.0) {
    throw std::domain_error("group_mean_z: degenerate group variances");
  }
  return diff / denom;
}

}  // namespace predq
