#pragma once

// Distribution-free sequential tests: one-sample KS against a fully known
// null, the time-indexed two-sample KS (events observed up to calendar time
// t, the rest completed uniformly on (t, horizon)), the censored two-sample
// log-rank on monthly bins, and the discrete-period event comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "predq/mc.hpp"
#include "predq/rng.hpp"

namespace predq {

// ---------------------------------------------------------------------------
// Empirical distribution functions and KS distances.

class Ecdf {
 public:
  Ecdf() = default;
  explicit Ecdf(std::vector<double> points) : pts_(std::move(points)) {
    std::sort(pts_.begin(), pts_.end());
  }

  void add(double x) {
    pts_.insert(std::upper_bound(pts_.begin(), pts_.end(), x), x);
  }

  double operator()(double u) const {
    if (pts_.empty()) return 0.0;
    auto it = std::upper_bound(pts_.begin(), pts_.end(), u);
    return static_cast<double>(it - pts_.begin()) /
           static_cast<double>(pts_.size());
  }

  size_t size() const { return pts_.size(); }
  const std::vector<double>& points() const { return pts_; }

 private:
  std::vector<double> pts_;
};

// sup_u |F_n(u) - u| for a sorted sample on [0,1].
inline double ks_distance_uniform(const std::vector<double>& sorted_unit) {
  size_t n = sorted_unit.size();
  if (n == 0) throw std::domain_error("ks_distance_uniform: empty sample");
  double d = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double hi = static_cast<double>(i + 1) / static_cast<double>(n) -
                sorted_unit[i];
    double lo = sorted_unit[i] - static_cast<double>(i) / static_cast<double>(n);
    d = std::max(d, std::max(hi, lo));
  }
  return d;
}

// sup |F - G| over the union of jump points of two sorted samples.
inline double ks_two_sample_distance(const std::vector<double>& a,
                                     const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw std::domain_error("ks_two_sample_distance: empty sample");
  }
  double inv_a = 1.0 / static_cast<double>(a.size());
  double inv_b = 1.0 / static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    double v = std::min(i < a.size() ? a[i] : std::numeric_limits<double>::infinity(),
                        j < b.size() ? b[j] : std::numeric_limits<double>::infinity());
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) * inv_a -
                              static_cast<double>(j) * inv_b));
  }
  return d;
}

// Two-decimal textbook coefficient for the large-sample two-sample KS
// critical value c = k(alpha) * sqrt((n+m)/(n*m)).
inline double ks2_critical(double alpha, uint64_t n, uint64_t m) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("ks2_critical: alpha must lie in (0,1)");
  }
  double coef = std::round(std::sqrt(-std::log(alpha / 2.0) / 2.0) * 100.0) / 100.0;
  return coef * std::sqrt(static_cast<double>(n + m) /
                          (static_cast<double>(n) * static_cast<double>(m)));
}

// ---------------------------------------------------------------------------
// One-sample KS with null completion. Works on the probability-integral
// scale: observed values must already be F0-transformed to (0,1).

inline double ks1_completed_stat(const std::vector<double>& obs_sorted,
                                 uint64_t n_max, RngStream& s,
                                 std::vector<double>& work) {
  if (obs_sorted.size() > n_max) {
    throw std::domain_error("ks1_completed_stat: observed count exceeds n_max");
  }
  work.assign(obs_sorted.begin(), obs_sorted.end());
  for (size_t i = obs_sorted.size(); i < n_max; ++i) work.push_back(s.unit());
  std::sort(work.begin() + static_cast<std::ptrdiff_t>(obs_sorted.size()),
            work.end());
  std::inplace_merge(work.begin(),
                     work.begin() + static_cast<std::ptrdiff_t>(obs_sorted.size()),
                     work.end());
  return ks_distance_uniform(work);
}

inline QEstimate ks1_q(const std::vector<double>& obs_sorted, uint64_t n_max,
                       double c, uint64_t b, const StreamKey& key) {
  if (!(c > 0.0)) throw std::domain_error("ks1_q: critical value must be > 0");
  std::vector<double> work;
  work.reserve(n_max);
  return estimate_q(
      [&](RngStream& s, uint32_t&) {
        return ks1_completed_stat(obs_sorted, n_max, s, work);
      },
      UpperCut{c}, b, key);
}

// ---------------------------------------------------------------------------
// Time-indexed two-sample KS: groups of fixed sizes, event times observed up
// to t, unobserved times completed iid Uniform(t, horizon). The continuous
// time-to-event test is this statistic with horizon 1.

struct TwoSampleTimesInterim {
  std::vector<double> x_obs, y_obs;  // sorted, all <= t
  uint64_t n_total = 0, m_total = 0;
  double t = 0.0;
  double horizon = 1.0;

  void validate() const {
    if (!(t > 0.0 && t < horizon)) {
      throw std::domain_error("TwoSampleTimesInterim: need 0 < t < horizon");
    }
    if (x_obs.size() > n_total || y_obs.size() > m_total) {
      throw std::runtime_error(
          "TwoSampleTimesInterim: observed events exceed group size");
    }
    for (double v : x_obs) {
      if (!(v <= t)) throw std::runtime_error("x observation after t");
    }
    for (double v : y_obs) {
      if (!(v <= t)) throw std::runtime_error("y observation after t");
    }
  }
};

inline double ks2_completed_stat(const TwoSampleTimesInterim& d, RngStream& s,
                                 std::vector<double>& xs,
                                 std::vector<double>& ys) {
  double span = d.horizon - d.t;
  xs.assign(d.x_obs.begin(), d.x_obs.end());
  for (size_t i = d.x_obs.size(); i < d.n_total; ++i) {
    xs.push_back(d.t + span * s.unit());
  }
  std::sort(xs.begin() + static_cast<std::ptrdiff_t>(d.x_obs.size()), xs.end());
  ys.assign(d.y_obs.begin(), d.y_obs.end());
  for (size_t i = d.y_obs.size(); i < d.m_total; ++i) {
    ys.push_back(d.t + span * s.unit());
  }
  std::sort(ys.begin() + static_cast<std::ptrdiff_t>(d.y_obs.size()), ys.end());
  return ks_two_sample_distance(xs, ys);
}

inline QEstimate ks2_q_time(const TwoSampleTimesInterim& d, double c,
                            uint64_t b, const StreamKey& key) {
  d.validate();
  std::vector<double> xs, ys;
  xs.reserve(d.n_total);
  ys.reserve(d.m_total);
  return estimate_q(
      [&](RngStream& s, uint32_t&) { return ks2_completed_stat(d, s, xs, ys); },
      UpperCut{c}, b, key);
}

inline QEstimate continuous_event_q_t(const TwoSampleTimesInterim& d, double c,
                                      uint64_t b, const StreamKey& key) {
  return ks2_q_time(d, c, b, key);
}

// ---------------------------------------------------------------------------
// Censored survival data on monthly bins.

struct SurvivalRecord {
  std::string id;
  int group = 0;      // 0 or 1
  double time = 0.0;  // follow-up, months
  bool event = false;
  double entry = 0.0;  // calendar enrollment offset, months
};

struct EventTable {
  uint64_t periods = 0;
  std::vector<std::array<uint64_t, 2>> events;
  std::vector<std::array<uint64_t, 2>> censored;
  std::array<uint64_t, 2> enrolled{0, 0};

  // Risk sets from the conservation recursion; throws if counts underflow.
  std::vector<std::array<uint64_t, 2>> at_risk() const {
    std::vector<std::array<uint64_t, 2>> m(periods);
    for (int g = 0; g < 2; ++g) {
      uint64_t cur = enrolled[g];
      for (uint64_t j = 0; j < periods; ++j) {
        m[j][g] = cur;
        uint64_t out = events[j][g] + censored[j][g];
        if (out > cur) {
          throw std::runtime_error(
              "EventTable: events+censored exceed at-risk in period " +
              std::to_string(j + 1));
        }
        cur -= out;
      }
    }
    return m;
  }

  void validate() const { (void)at_risk(); }
};

// Bins records into months 1..J; the terminal category J absorbs everything
// recorded later than J-1 months.
inline uint64_t bin_month(double time, uint64_t J) {
  if (!(time > 0.0)) {
    throw std::runtime_error("survival record: time must be > 0");
  }
  auto m = static_cast<uint64_t>(std::ceil(time));
  return std::min<uint64_t>(m, J);
}

inline EventTable bin_survival(const std::vector<SurvivalRecord>& recs,
                               uint64_t J) {
  if (J < 1) throw std::domain_error("bin_survival: need J >= 1");
  EventTable tab;
  tab.periods = J;
  tab.events.assign(J, {0, 0});
  tab.censored.assign(J, {0, 0});
  for (const auto& r : recs) {
    if (r.group != 0 && r.group != 1) {
      throw std::runtime_error("survival record: group must be 0 or 1");
    }
    uint64_t j = bin_month(r.time, J) - 1;
    ++tab.enrolled[r.group];
    if (r.event) {
      ++tab.events[j][r.group];
    } else {
      ++tab.censored[j][r.group];
    }
  }
  tab.validate();
  return tab;
}

struct LogRankResult {
  double observed_minus_expected = 0.0;
  double variance = 0.0;
  double chi2 = 0.0;
};

// (sum_j (n_X(j) - e_X(j)))^2 / sum_j V_j with the hypergeometric variance.
inline LogRankResult logrank_statistic(const EventTable& tab) {
  auto risk = tab.at_risk();
  double oe = 0.0, var = 0.0;
  for (uint64_t j = 0; j < tab.periods; ++j) {
    uint64_t m0 = risk[j][0], m1 = risk[j][1];
    uint64_t m = m0 + m1;
    uint64_t n = tab.events[j][0] + tab.events[j][1];
    if (n == 0 || m < 2) continue;
    double fm = static_cast<double>(m);
    double e0 = static_cast<double>(n) * static_cast<double>(m0) / fm;
    oe += static_cast<double>(tab.events[j][0]) - e0;
    var += static_cast<double>(n) * (static_cast<double>(m0) / fm) *
           (static_cast<double>(m1) / fm) *
           (static_cast<double>(m - n) / static_cast<double>(m - 1));
  }
  if (var <= 0.0) {
    throw std::runtime_error("logrank_statistic: no usable events (V = 0)");
  }
  LogRankResult out;
  out.observed_minus_expected = oe;
  out.variance = var;
  out.chi2 = oe * oe / var;
  return out;
}

// Interim view at calendar month t: outcomes with entry + time <= t are
// observed; everyone else is at risk with a per-subject survival floor
// (months already survived event-free).
struct LogRankInterim {
  EventTable observed;
  uint64_t t = 0;
  uint64_t periods = 0;
  std::array<std::vector<std::pair<uint64_t, uint64_t>>, 2> at_risk_floors;

  uint64_t at_risk_total(int g) const {
    uint64_t s = 0;
    for (auto& [f, c] : at_risk_floors[g]) s += c;
    return s;
  }
};

inline LogRankInterim logrank_interim(const std::vector<SurvivalRecord>& recs,
                                      uint64_t J, uint64_t t) {
  if (t < 1 || t >= J) {
    throw std::domain_error("logrank_interim: need 1 <= t < J");
  }
  LogRankInterim st;
  st.t = t;
  st.periods = J;
  st.observed.periods = J;
  st.observed.events.assign(J, {0, 0});
  st.observed.censored.assign(J, {0, 0});
  std::array<std::vector<uint64_t>, 2> floor_counts;
  floor_counts[0].assign(J, 0);
  floor_counts[1].assign(J, 0);
  for (const auto& r : recs) {
    if (r.group != 0 && r.group != 1) {
      throw std::runtime_error("survival record: group must be 0 or 1");
    }
    ++st.observed.enrolled[r.group];
    if (r.entry + r.time <= static_cast<double>(t)) {
      uint64_t j = bin_month(r.time, J) - 1;
      if (r.event) {
        ++st.observed.events[j][r.group];
      } else {
        ++st.observed.censored[j][r.group];
      }
    } else {
      double followed = static_cast<double>(t) - r.entry;
      auto f = followed <= 0.0
                   ? uint64_t{0}
                   : std::min<uint64_t>(static_cast<uint64_t>(followed), J - 1);
      ++floor_counts[r.group][f];
    }
  }
  st.observed.validate();
  for (int g = 0; g < 2; ++g) {
    for (uint64_t f = 0; f < J; ++f) {
      if (floor_counts[g][f]) st.at_risk_floors[g].emplace_back(f, floor_counts[g][f]);
    }
  }
  return st;
}

// Events per person-month at risk, pooled over both groups, through month t.
inline double pooled_monthly_hazard(const LogRankInterim& st) {
  auto risk = st.observed.at_risk();
  uint64_t events = 0;
  uint64_t exposure = 0;
  for (uint64_t j = 0; j < st.t && j < st.periods; ++j) {
    events += st.observed.events[j][0] + st.observed.events[j][1];
    exposure += risk[j][0] + risk[j][1];
  }
  if (exposure == 0) return 0.0;
  return static_cast<double>(events) / static_cast<double>(exposure);
}

// One completed log-rank chi-square: every at-risk subject receives a death
// month drawn memorylessly at the pooled hazard beyond their survival floor,
// with the terminal category absorbing the remaining mass. hazard <= 0 falls
// back to a uniform death month and flags the estimate.
inline double logrank_completed_chi2(const LogRankInterim& st, double hazard,
                                     RngStream& s, uint32_t& flags) {
  uint64_t J = st.periods;
  EventTable tab = st.observed;
  std::vector<double> prob;
  std::vector<uint64_t> counts;
  for (int g = 0; g < 2; ++g) {
    for (auto& [f, total] : st.at_risk_floors[g]) {
      uint64_t months = J - f;  // death months f+1..J
      prob.assign(months, 0.0);
      if (hazard <= 0.0) {
        flags |= kFlagZeroEventFallback;
        for (uint64_t k = 0; k < months; ++k) {
          prob[k] = 1.0 / static_cast<double>(months);
        }
      } else {
        double surv = 1.0;
        for (uint64_t k = 0; k + 1 < months; ++k) {
          prob[k] = hazard * surv;
          surv *= 1.0 - hazard;
        }
        prob[months - 1] = surv;
      }
      s.multinomial(total, prob, counts);
      for (uint64_t k = 0; k < months; ++k) {
        tab.events[f + k][g] += counts[k];
      }
    }
  }
  return logrank_statistic(tab).chi2;
}

inline QEstimate logrank_q_t(const LogRankInterim& st, double c_seq, uint64_t b,
                             const StreamKey& key) {
  double hazard = pooled_monthly_hazard(st);
  return estimate_q(
      [&](RngStream& s, uint32_t& flags) {
        return logrank_completed_chi2(st, hazard, s, flags);
      },
      UpperCut{c_seq}, b, key);
}

// ---------------------------------------------------------------------------
// Discrete-period event comparison: S_T = sum_t |p_0t - p_1t| with null
// completions Bin(m, 1/2) on the sequentially shrinking risk sets.

struct DiscreteEventInterim {
  uint64_t periods_total = 0;  // T
  uint64_t n_per_group = 0;
  std::array<std::vector<uint64_t>, 2> events;  // observed, per period

  uint64_t t() const { return events[0].size(); }

  void validate() const {
    if (events[0].size() != events[1].size()) {
      throw std::runtime_error("DiscreteEventInterim: ragged period counts");
    }
    if (events[0].size() > periods_total) {
      throw std::runtime_error("DiscreteEventInterim: more periods than T");
    }
    for (int g = 0; g < 2; ++g) {
      uint64_t total = 0;
      for (uint64_t e : events[g]) total += e;
      if (total > n_per_group) {
        throw std::runtime_error("DiscreteEventInterim: events exceed group size");
      }
    }
  }
};

inline double discrete_event_completed_stat(const DiscreteEventInterim& st,
                                            RngStream& s) {
  double stat = 0.0;
  std::array<uint64_t, 2> m{st.n_per_group, st.n_per_group};
  uint64_t t = st.t();
  for (uint64_t j = 0; j < t; ++j) {
    double p0 = m[0] ? static_cast<double>(st.events[0][j]) /
                           static_cast<double>(m[0])
                     : 0.0;
    double p1 = m[1] ? static_cast<double>(st.events[1][j]) /
                           static_cast<double>(m[1])
                     : 0.0;
    stat += std::fabs(p0 - p1);
    m[0] -= st.events[0][j];
    m[1] -= st.events[1][j];
  }
  for (uint64_t j = t; j < st.periods_total; ++j) {
    double p[2];
    for (int g = 0; g < 2; ++g) {
      if (m[g] == 0) {
        p[g] = 0.0;
        continue;
      }
      uint64_t n = m[g] <= 64 ? s.half_binomial(static_cast<unsigned>(m[g]))
                              : s.binomial(m[g], 0.5);
      p[g] = static_cast<double>(n) / static_cast<double>(m[g]);
      m[g] -= n;
    }
    stat += std::fabs(p[0] - p[1]);
  }
  return stat;
}

inline QEstimate discrete_event_q_t(const DiscreteEventInterim& st, double c,
                                    uint64_t b, const StreamKey& key) {
  st.validate();
  if (st.t() >= st.periods_total) {
    throw std::domain_error("discrete_event_q_t: interim must precede T");
  }
  return estimate_q(
      [&](RngStream& s, uint32_t&) { return discrete_event_completed_stat(st, s); },
      UpperCut{c}, b, key);
}

// Interim grid for time-indexed monitoring.
struct TimeGrid {
  std::vector<double> times;
  double horizon = 1.0;

  void validate() const {
    double prev = 0.0;
    for (double t : times) {
      if (!(t > prev && t < horizon)) {
        throw std::domain_error("TimeGrid: times must be increasing in (0,horizon)");
      }
      prev = t;
    }
  }
};

}  // namespace predq
