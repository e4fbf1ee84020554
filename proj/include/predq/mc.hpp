#pragma once

// Generic Monte-Carlo Q estimation and critical-value calibration.
//
// A completion sampler is any callable (RngStream&, uint32_t& flags) -> double
// producing one completed-sample statistic given the observed summary it
// captured; a region is a predicate on that statistic. Q_hat is the fraction
// of completions landing in the region, unbiased for Q_n given the data.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "predq/rng.hpp"

namespace predq {

// Estimate flags (bitmask) surfaced alongside q_hat.
inline constexpr uint32_t kFlagDegenerateVariance = 1u << 0;
inline constexpr uint32_t kFlagZeroEventFallback = 1u << 1;

struct QEstimate {
  double q_hat = 0.0;
  double std_err = 0.0;
  uint64_t b = 0;
  uint32_t flags = 0;
};

// Identifies one evaluation's randomness; replicate r gets substream base+r.
struct StreamKey {
  uint64_t seed = 0;
  uint64_t purpose = stream::kCompletion;
  uint64_t base = 0;

  RngStream replicate(uint64_t r) const {
    return RngStream(seed, purpose, base + r);
  }
};

inline double binomial_std_err(double q_hat, uint64_t b) {
  return std::sqrt(q_hat * (1.0 - q_hat) / static_cast<double>(b));
}

template <class Sampler, class Region>
QEstimate estimate_q(Sampler&& completed_statistic, Region&& in_region,
                     uint64_t b, const StreamKey& key) {
  if (b < 1) throw std::domain_error("estimate_q: b must be >= 1");
  uint64_t hits = 0;
  uint32_t flags = 0;
  for (uint64_t r = 0; r < b; ++r) {
    RngStream s = key.replicate(r);
    if (in_region(completed_statistic(s, flags))) ++hits;
  }
  QEstimate out;
  out.q_hat = static_cast<double>(hits) / static_cast<double>(b);
  out.std_err = binomial_std_err(out.q_hat, b);
  out.b = b;
  out.flags = flags;
  return out;
}

// Critical regions. Calibrated nonnegative statistics use the strict upper
// cut; the Gaussian final tests use closed (>=) cuts, where the distinction
// is measure-zero.
struct UpperCut {
  double c;
  bool operator()(double s) const { return s > c; }
};

struct OneSidedCut {
  double c;
  bool operator()(double s) const { return s >= c; }
};

struct AbsCut {
  double c;
  bool operator()(double s) const { return std::fabs(s) >= c; }
};

template <class Region>
struct Complement {
  Region region;
  bool operator()(double s) const { return !region(s); }
};

struct CalibrationResult {
  double c = 0.0;
  double target_level = 0.0;
  double achieved_level_estimate = 0.0;
  uint64_t b_cal = 0;
};

inline uint64_t calibration_floor(double alpha_tilde) {
  return static_cast<uint64_t>(std::ceil(10.0 / alpha_tilde));
}

// c is the order statistic guaranteeing empirical P(S > c) <= alpha_tilde
// (conservative; ties push c upward).
template <class NullStatistic>
CalibrationResult calibrate_critical_value(NullStatistic&& null_statistic,
                                           double alpha_tilde, uint64_t b_cal,
                                           const StreamKey& key) {
  if (!(alpha_tilde > 0.0 && alpha_tilde < 1.0)) {
    throw std::domain_error("calibrate_critical_value: level must be in (0,1)");
  }
  if (b_cal < calibration_floor(alpha_tilde)) {
    throw std::domain_error(
        "calibrate_critical_value: b_cal below 10/alpha_tilde floor");
  }
  std::vector<double> stats(b_cal);
  uint32_t flags = 0;
  for (uint64_t r = 0; r < b_cal; ++r) {
    RngStream s = key.replicate(r);
    stats[r] = null_statistic(s, flags);
  }
  std::sort(stats.begin(), stats.end());
  auto k = static_cast<uint64_t>(std::floor(alpha_tilde *
                                            static_cast<double>(b_cal)));
  CalibrationResult out;
  out.c = stats[b_cal - 1 - k];
  out.target_level = alpha_tilde;
  uint64_t exceed = 0;
  for (double s : stats) exceed += (s > out.c) ? 1 : 0;
  out.achieved_level_estimate =
      static_cast<double>(exceed) / static_cast<double>(b_cal);
  out.b_cal = b_cal;
  return out;
}

}  // namespace predq
