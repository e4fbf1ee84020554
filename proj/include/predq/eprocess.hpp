#pragma once

// Likelihood-ratio baseline: the standard-normal-mixture e-process
// E_n = exp(T_n^2 / (2(n+1))) / sqrt(n+1), rejected whenever E_n >= 1/alpha.
// Kept in log domain; used for paired power and stopping comparisons.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace predq {

struct EProcessState {
  uint64_t n = 0;
  double t_n = 0.0;
  double log_e = 0.0;  // log E_0 = 0

  double e_value() const { return std::exp(log_e); }
};

inline double e_process_log(double t_n, uint64_t n) {
  double np1 = static_cast<double>(n) + 1.0;
  return t_n * t_n / (2.0 * np1) - 0.5 * std::log(np1);
}

inline EProcessState e_update(const EProcessState& state, double x) {
  if (!std::isfinite(x)) throw std::domain_error("e_update: non-finite x");
  EProcessState next;
  next.n = state.n + 1;
  next.t_n = state.t_n + x;
  next.log_e = e_process_log(next.t_n, next.n);
  return next;
}

enum class EVerdict { kContinue, kReject };

inline EVerdict e_decide(const EProcessState& state, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("e_decide: alpha must lie in (0,1)");
  }
  return state.log_e >= -std::log(alpha) ? EVerdict::kReject
                                         : EVerdict::kContinue;
}

}  // namespace predq
