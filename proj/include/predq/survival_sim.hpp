#pragma once

// Synthetic censored survival trials on monthly bins, plus calibration of
// the sequential log-rank critical value: the anytime exceedance of the full
// monitored procedure (interim Q threshold crossings and the final test) is
// pinned to alpha by simulation under a null law.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "predq/mc.hpp"
#include "predq/nonparam.hpp"
#include "predq/rng.hpp"

namespace predq {

struct SurvivalLaw {
  double hazard_x = 0.0;       // month-1 death hazard, group 0
  double hazard_y = 0.0;       // group 1
  double censor_hazard = 0.0;  // monthly loss-to-follow-up hazard
  double hazard_decay = 1.0;   // death hazard multiplier per elapsed month
};

inline constexpr uint64_t kMonthNever = ~uint64_t{0};

// First month (1-based) of a memoryless event at the given monthly hazard.
inline uint64_t geometric_month(double hazard, RngStream& s) {
  if (hazard <= 0.0) return kMonthNever;
  if (hazard >= 1.0) return 1;
  double u = s.unit();
  double m = std::ceil(std::log(u) / std::log1p(-hazard));
  return m < 1.0 ? 1 : static_cast<uint64_t>(m);
}

// First month of an event whose hazard shrinks by rho each month. One
// uniform per call, like geometric_month, so switching decay on or off
// leaves the per-subject stream layout unchanged. A decaying hazard keeps
// positive mass on "never": that mass lands in kMonthNever.
inline uint64_t decaying_month(double h1, double rho, RngStream& s) {
  if (h1 <= 0.0) return kMonthNever;
  double u = s.unit();
  double h = h1;
  double surv = 1.0;
  for (uint64_t m = 1; m <= 1000; ++m) {
    surv *= 1.0 - std::min(1.0, h);
    if (u > surv) return m;
    if (h < 1e-12) break;
    h *= rho;
  }
  return kMonthNever;
}

// One trial: per subject the earlier of death and censoring, with the
// terminal category J absorbing anything later than J-1 months.
inline std::vector<SurvivalRecord> gen_survival(const SurvivalLaw& law,
                                                uint64_t n_x, uint64_t n_y,
                                                uint64_t J, RngStream& s) {
  std::vector<SurvivalRecord> recs;
  recs.reserve(n_x + n_y);
  uint64_t counts[2] = {n_x, n_y};
  double hazard[2] = {law.hazard_x, law.hazard_y};
  for (int g = 0; g < 2; ++g) {
    for (uint64_t i = 0; i < counts[g]; ++i) {
      uint64_t death = law.hazard_decay == 1.0
                           ? geometric_month(hazard[g], s)
                           : decaying_month(hazard[g], law.hazard_decay, s);
      uint64_t censor = geometric_month(law.censor_hazard, s);
      SurvivalRecord r;
      r.group = g;
      r.event = death <= censor;
      uint64_t month = std::min(std::min(death, censor), J);
      r.time = static_cast<double>(month);
      recs.push_back(std::move(r));
    }
  }
  return recs;
}

// Smallest hit count whose fraction of b crosses gamma, matching the
// monitor's q_hat >= gamma comparison bit for bit.
inline uint64_t gamma_hit_count(double gamma, uint64_t b) {
  auto k = static_cast<uint64_t>(
      std::ceil(gamma * static_cast<double>(b)));
  while (k > 1 &&
         static_cast<double>(k - 1) / static_cast<double>(b) >= gamma) {
    --k;
  }
  while (k <= b && static_cast<double>(k) / static_cast<double>(b) < gamma) {
    ++k;
  }
  return k;
}

// Per-replicate worst case of the monitored procedure: the anytime rule at
// threshold c rejects somewhere iff this value exceeds c. Interim t
// contributes the k-th largest of b completed statistics (k = gamma hit
// count), the final look contributes the fully observed statistic.
inline double logrank_anytime_max(const std::vector<SurvivalRecord>& recs,
                                  uint64_t J, double gamma, uint64_t b,
                                  RngStream& s, std::vector<double>& scratch) {
  uint64_t k = gamma_hit_count(gamma, b);
  double worst = logrank_statistic(bin_survival(recs, J)).chi2;
  scratch.resize(b);
  for (uint64_t t = 1; t < J; ++t) {
    LogRankInterim st = logrank_interim(recs, J, t);
    double hazard = pooled_monthly_hazard(st);
    uint32_t flags = 0;
    for (uint64_t i = 0; i < b; ++i) {
      scratch[i] = logrank_completed_chi2(st, hazard, s, flags);
    }
    auto kth = scratch.begin() + static_cast<std::ptrdiff_t>(b - k);
    std::nth_element(scratch.begin(), kth, scratch.end());
    worst = std::max(worst, *kth);
  }
  return worst;
}

// Critical value for the sequential log-rank: conservative upper-alpha
// quantile of the per-replicate anytime max under the null law. Use the same
// b here and in monitoring so estimator noise is part of what is calibrated.
inline CalibrationResult calibrate_logrank_anytime(
    const SurvivalLaw& null_law, uint64_t n_x, uint64_t n_y, uint64_t J,
    double gamma, uint64_t b, double alpha, uint64_t replicates,
    const StreamKey& key) {
  std::vector<double> scratch;
  return calibrate_critical_value(
      [&](RngStream& s, uint32_t&) {
        std::vector<SurvivalRecord> recs =
            gen_survival(null_law, n_x, n_y, J, s);
        return logrank_anytime_max(recs, J, gamma, b, s, scratch);
      },
      alpha, replicates, key);
}

struct LogRankRun {
  bool rejected = false;
  uint64_t stop_month = 0;       // month of threshold crossing, else J
  std::vector<double> q_path;    // Q-hat at months 1..(crossing or J-1)
  double final_chi2 = 0.0;       // set when the run reaches the final look
  uint32_t flags = 0;
};

// Monitors one dataset at months 1..J-1 against c_seq, finishing with the
// fixed-sample indicator at J. Stream keying matches the live monitor.
inline LogRankRun run_logrank_procedure(const std::vector<SurvivalRecord>& recs,
                                        uint64_t J, double gamma, double c_seq,
                                        uint64_t b, uint64_t seed) {
  LogRankRun out;
  for (uint64_t t = 1; t < J; ++t) {
    LogRankInterim st = logrank_interim(recs, J, t);
    QEstimate e = logrank_q_t(st, c_seq, b,
                              StreamKey{seed, stream::kCompletion, t << 32});
    out.q_path.push_back(e.q_hat);
    out.flags |= e.flags;
    if (e.q_hat >= gamma) {
      out.rejected = true;
      out.stop_month = t;
      return out;
    }
  }
  out.stop_month = J;
  out.final_chi2 = logrank_statistic(bin_survival(recs, J)).chi2;
  out.rejected = out.final_chi2 > c_seq;
  return out;
}

}  // namespace predq
