#pragma once

// Standard normal CDF, survival function, density and quantile in double
// precision. The quantile is solved by Newton iteration against erfc (log-space
// in the tails), so accuracy is limited only by the platform erfc.

#include <cmath>
#include <limits>
#include <stdexcept>

namespace predq {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double norm_pdf(double x) {
  return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x * kInvSqrt2);
}

// 1 - Phi(x) without cancellation for large x.
inline double norm_sf(double x) {
  return 0.5 * std::erfc(x * kInvSqrt2);
}

namespace detail {

// Solves Phi(x) = q for q in (0, 0.5], returning x <= 0.
inline double norm_quantile_lower(double q) {
  if (q == 0.5) return 0.0;
  if (q >= 0.03) {
    // Logistic start, then Newton on Phi. Quadratic convergence from a
    // start within 0.02 of the root.
    double x = -std::log(1.0 / q - 1.0) / 1.702;
    for (int i = 0; i < 6; ++i) {
      double err = norm_cdf(x) - q;
      x -= err / norm_pdf(x);
    }
    return x;
  }
  // Tail: solve log(erfc(t)/2) = log(q) for t = -x/sqrt(2) >= 1.3.
  // Start from the asymptotic erfc(t) ~ exp(-t^2)/(t*sqrt(pi)).
  double lq = std::log(2.0 * q);
  double t = std::sqrt(-lq);
  t = std::sqrt(std::fmax(-lq - std::log(t * 1.7724538509055160273), 0.25));
  for (int i = 0; i < 8; ++i) {
    double e = std::erfc(t);
    // h = log(e) - log(2q); h' = -2*exp(-t^2)/(sqrt(pi)*e)
    double h = std::log(e) - lq;
    double hp = -1.1283791670955125739 * std::exp(-t * t) / e;
    double step = h / hp;
    t -= step;
    if (std::fabs(step) < 1e-14 * t) break;
  }
  return -t * 1.4142135623730950488;
}

}  // namespace detail

inline double norm_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::domain_error("norm_quantile: p must lie in (0,1)");
  }
  // 1-p is exact for p >= 0.5 (Sterbenz), so both halves hit the same solver.
  return p <= 0.5 ? detail::norm_quantile_lower(p)
                  : -detail::norm_quantile_lower(1.0 - p);
}

// Phi^{-1}(1 - u) computed without forming 1-u, exact in the upper tail.
inline double norm_upper_quantile(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw std::domain_error("norm_upper_quantile: u must lie in (0,1)");
  }
  return u <= 0.5 ? -detail::norm_quantile_lower(u)
                  : detail::norm_quantile_lower(1.0 - u);
}

}  // namespace predq
