#pragma once

// Operating-characteristic harness for the one-sided normal-mean design:
// Type-I rates, power curves, stopping-time distributions, and the
// gamma/N' tradeoff table. The predictive, fixed-sample, and e-process
// methods run paired on identical per-replicate data streams.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <thread>
#include <vector>

#include "predq/eprocess.hpp"
#include "predq/gaussian.hpp"
#include "predq/rng.hpp"

namespace predq {

// Chunked static partition; fn(i) must write only to slot i of any shared
// output so parallel and serial runs are byte-identical after a sequential
// reduce.
template <typename Fn>
void parallel_for(uint64_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    for (uint64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  unsigned workers = static_cast<unsigned>(
      std::min<uint64_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    uint64_t lo = count * w / workers;
    uint64_t hi = count * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (uint64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

inline unsigned default_threads() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

struct GaussianDesign {
  uint64_t n_fixed = 0;     // N, fixed-sample comparator at level alpha
  uint64_t n_inflated = 0;  // N', predictive horizon at level alpha*gamma
  double alpha = 0.05;
  double gamma = 0.95;
};

inline GaussianDesign make_design(uint64_t n_fixed, double alpha, double gamma,
                                  double power_target) {
  GaussianDesign d;
  d.n_fixed = n_fixed;
  d.alpha = alpha;
  d.gamma = gamma;
  d.n_inflated = inflate_sample_size(n_fixed, alpha, gamma, power_target);
  return d;
}

// T_n thresholds precomputed once per design.
struct GaussianBoundaries {
  std::vector<double> interim;  // index n-1, n = 1..N'-1
  double final_cut = 0.0;       // sqrt(N') * z_{1-alpha*gamma}
  double fixed_cut = 0.0;       // sqrt(N) * z_{1-alpha}
  double e_log_cut = 0.0;       // log(1/alpha)

  explicit GaussianBoundaries(const GaussianDesign& d) {
    interim.resize(d.n_inflated - 1);
    for (uint64_t n = 1; n < d.n_inflated; ++n) {
      interim[n - 1] = rejection_boundary(n, d.n_inflated, d.alpha, d.gamma);
    }
    final_cut = rejection_boundary(d.n_inflated, d.n_inflated, d.alpha,
                                   d.gamma);
    fixed_cut = std::sqrt(static_cast<double>(d.n_fixed)) *
                norm_upper_quantile(d.alpha);
    e_log_cut = -std::log(d.alpha);
  }
};

struct ReplicateOutcome {
  bool reject_predictive = false;
  bool reject_fixed = false;
  bool reject_eprocess = false;
  uint32_t tau_predictive = 0;  // N' when no early stop
  uint32_t tau_eprocess = 0;
};

/// One paired replicate: all three methods read the same x_i = theta + z_i.
inline ReplicateOutcome run_gaussian_replicate(const GaussianDesign& d,
                                               const GaussianBoundaries& b,
                                               double theta, RngStream& s) {
  ReplicateOutcome out;
  double t = 0.0;
  bool pred_stopped = false;
  bool e_stopped = false;
  for (uint64_t n = 1; n <= d.n_inflated; ++n) {
    t += theta + s.normal();
    if (!pred_stopped && n < d.n_inflated && t >= b.interim[n - 1]) {
      out.reject_predictive = true;
      out.tau_predictive = static_cast<uint32_t>(n);
      pred_stopped = true;
    }
    if (!e_stopped && e_process_log(t, n) >= b.e_log_cut) {
      out.reject_eprocess = true;
      out.tau_eprocess = static_cast<uint32_t>(n);
      e_stopped = true;
    }
    if (n == d.n_fixed) out.reject_fixed = t >= b.fixed_cut;
    if (n == d.n_inflated) {
      if (!pred_stopped) {
        out.reject_predictive = t >= b.final_cut;
        out.tau_predictive = static_cast<uint32_t>(n);
      }
      if (!e_stopped) out.tau_eprocess = static_cast<uint32_t>(n);
    }
    if (pred_stopped && e_stopped && n >= d.n_fixed) break;
  }
  return out;
}

struct Scenario {
  GaussianDesign design;
  double theta = 0.0;
  uint64_t replicates = 10000;
  uint64_t seed = 0;
  unsigned threads = 1;
};

struct RateSummary {
  double rate = 0.0;
  double se = 0.0;
};

struct StopSummary {
  double mean = 0.0;
  double se_mean = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
};

struct OperatingCharacteristics {
  uint64_t replicates = 0;
  RateSummary reject_predictive, reject_fixed, reject_eprocess;
  StopSummary stop_predictive, stop_eprocess;
  std::vector<uint32_t> tau_predictive;  // per replicate, for CDF emission
};

namespace detail {

inline RateSummary rate_of(uint64_t hits, uint64_t total) {
  RateSummary r;
  r.rate = static_cast<double>(hits) / static_cast<double>(total);
  r.se = std::sqrt(r.rate * (1.0 - r.rate) / static_cast<double>(total));
  return r;
}

// Linear-interpolation sample quantile on a sorted copy.
inline double quantile_sorted(const std::vector<uint32_t>& sorted, double p) {
  double h = p * static_cast<double>(sorted.size() - 1);
  auto lo = static_cast<size_t>(h);
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * (static_cast<double>(sorted[hi]) -
                 static_cast<double>(sorted[lo]));
}

inline StopSummary stop_of(const std::vector<uint32_t>& taus) {
  StopSummary s;
  uint64_t sum = 0;
  for (uint32_t t : taus) sum += t;
  double n = static_cast<double>(taus.size());
  s.mean = static_cast<double>(sum) / n;
  double ss = 0.0;
  for (uint32_t t : taus) {
    double d = static_cast<double>(t) - s.mean;
    ss += d * d;
  }
  s.se_mean = taus.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  std::vector<uint32_t> sorted = taus;
  std::sort(sorted.begin(), sorted.end());
  s.median = quantile_sorted(sorted, 0.5);
  s.q25 = quantile_sorted(sorted, 0.25);
  s.q75 = quantile_sorted(sorted, 0.75);
  return s;
}

}  // namespace detail

inline OperatingCharacteristics run_replicates(const Scenario& sc) {
  GaussianBoundaries bounds(sc.design);
  uint64_t r_total = sc.replicates;
  std::vector<uint8_t> rej_p(r_total), rej_f(r_total), rej_e(r_total);
  std::vector<uint32_t> tau_p(r_total), tau_e(r_total);
  parallel_for(r_total, sc.threads, [&](uint64_t r) {
    RngStream s(sc.seed, stream::kDataGen, r);
    ReplicateOutcome o = run_gaussian_replicate(sc.design, bounds, sc.theta, s);
    rej_p[r] = o.reject_predictive;
    rej_f[r] = o.reject_fixed;
    rej_e[r] = o.reject_eprocess;
    tau_p[r] = o.tau_predictive;
    tau_e[r] = o.tau_eprocess;
  });
  OperatingCharacteristics oc;
  oc.replicates = r_total;
  uint64_t hp = 0, hf = 0, he = 0;
  for (uint64_t r = 0; r < r_total; ++r) {
    hp += rej_p[r];
    hf += rej_f[r];
    he += rej_e[r];
  }
  oc.reject_predictive = detail::rate_of(hp, r_total);
  oc.reject_fixed = detail::rate_of(hf, r_total);
  oc.reject_eprocess = detail::rate_of(he, r_total);
  oc.stop_predictive = detail::stop_of(tau_p);
  oc.stop_eprocess = detail::stop_of(tau_e);
  oc.tau_predictive = std::move(tau_p);
  return oc;
}

struct PowerPoint {
  double theta = 0.0;
  RateSummary predictive, fixed, eprocess;
};

inline std::vector<PowerPoint> power_curve(const Scenario& base,
                                           const std::vector<double>& thetas) {
  std::vector<PowerPoint> out;
  out.reserve(thetas.size());
  for (double theta : thetas) {
    Scenario sc = base;
    sc.theta = theta;
    OperatingCharacteristics oc = run_replicates(sc);
    out.push_back(PowerPoint{theta, oc.reject_predictive, oc.reject_fixed,
                             oc.reject_eprocess});
  }
  return out;
}

struct StoppingCdfPoint {
  uint32_t tau = 0;
  double cdf = 0.0;
};

inline std::vector<StoppingCdfPoint> stopping_cdf(
    const OperatingCharacteristics& oc) {
  std::vector<uint32_t> sorted = oc.tau_predictive;
  std::sort(sorted.begin(), sorted.end());
  std::vector<StoppingCdfPoint> out;
  double n = static_cast<double>(sorted.size());
  for (size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i]) {
      out.push_back({sorted[i], static_cast<double>(i + 1) / n});
    }
  }
  return out;
}

struct TradeoffRow {
  double gamma = 0.0;
  uint64_t n_inflated = 0;
  StopSummary stop;
};

// N' re-solved per gamma to hold the power target; theta held at the design
// effect for the base (alpha, N, power) so rows are comparable.
inline std::vector<TradeoffRow> gamma_tradeoff(
    uint64_t n_fixed, double alpha, double power_target,
    const std::vector<double>& gamma_grid, uint64_t replicates, uint64_t seed,
    unsigned threads = 1) {
  double theta_star = effect_for_power(n_fixed, alpha, power_target);
  std::vector<TradeoffRow> out;
  out.reserve(gamma_grid.size());
  for (double gamma : gamma_grid) {
    Scenario sc;
    sc.design = make_design(n_fixed, alpha, gamma, power_target);
    sc.theta = theta_star;
    sc.replicates = replicates;
    sc.seed = seed;
    sc.threads = threads;
    OperatingCharacteristics oc = run_replicates(sc);
    out.push_back(TradeoffRow{gamma, sc.design.n_inflated, oc.stop_predictive});
  }
  return out;
}

}  // namespace predq
