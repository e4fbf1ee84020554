#pragma once

// Counter-based random streams (Philox 4x32-10) plus the samplers the
// completion machinery needs: uniform, normal, gamma, beta, binomial and
// multinomial. Streams are keyed by (seed, purpose, stream id), so any
// replicate or Q evaluation can be regenerated in isolation and replicate
// loops can run on any thread layout without coordination.
//
// Every sampler is written out here rather than taken from <random> because
// libstdc++'s distributions are implementation-defined bit-for-bit; the
// checkpoint/replay and parallel==serial contracts need a fixed algorithm.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace predq {

namespace detail {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// One Philox 4x32 block, 10 rounds (Salmon et al. multipliers/Weyl constants).
inline std::array<uint32_t, 4> philox4x32(uint64_t key,
                                          std::array<uint32_t, 4> ctr) {
  uint32_t k0 = static_cast<uint32_t>(key);
  uint32_t k1 = static_cast<uint32_t>(key >> 32);
  for (int r = 0; r < 10; ++r) {
    uint64_t p0 = 0xD2511F53ull * ctr[0];
    uint64_t p1 = 0xCD9E8D57ull * ctr[2];
    ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ k0,
           static_cast<uint32_t>(p1),
           static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ k1,
           static_cast<uint32_t>(p0)};
    k0 += 0x9E3779B9u;
    k1 += 0xBB67AE85u;
  }
  return ctr;
}

}  // namespace detail

// Stream purposes keep unrelated consumers of one experiment seed apart.
namespace stream {
inline constexpr uint64_t kCompletion = 1;
inline constexpr uint64_t kCalibration = 2;
inline constexpr uint64_t kScenario = 3;
inline constexpr uint64_t kKsTable = 4;
inline constexpr uint64_t kDataGen = 5;
inline constexpr uint64_t kFutility = 6;
}  // namespace stream

class RngStream {
 public:
  RngStream(uint64_t seed, uint64_t purpose, uint64_t id = 0)
      : key_(detail::splitmix64(seed ^ detail::splitmix64(purpose))),
        block_hi_(id),
        block_lo_(0),
        idx_(4) {}

  uint32_t u32() {
    if (idx_ == 4) refill();
    return buf_[idx_++];
  }

  uint64_t u64() {
    uint64_t lo = u32();
    return (static_cast<uint64_t>(u32()) << 32) | lo;
  }

  // Uniform on the open interval (0,1); safe under log().
  double unit() {
    return (static_cast<double>(u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double r = std::sqrt(-2.0 * std::log(unit()));
    double a = 6.2831853071795864769 * unit();
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double exponential() { return -std::log(unit()); }

  // Marsaglia-Tsang; exact for all shape > 0.
  double gamma(double shape) {
    if (!(shape > 0)) throw std::domain_error("gamma: shape must be > 0");
    if (shape < 1.0) {
      double u = unit();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    double d = shape - 1.0 / 3.0;
    double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double t = 1.0 + c * x;
      if (t <= 0.0) continue;
      double v = t * t * t;
      double u = unit();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double beta(double a, double b) {
    double x = gamma(a);
    double y = gamma(b);
    return x / (x + y);
  }

  // Exact binomial; O(log n) via order-statistic splitting for large counts.
  uint64_t binomial(uint64_t n, double p) {
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    if (p > 0.5) return n - binomial(n, 1.0 - p);
    uint64_t count = 0;
    // Split against the median order statistic until the walk is cheap.
    while (static_cast<double>(n) * p > 32.0 && n > 64) {
      uint64_t i = (n + 1) / 2;
      double v = beta(static_cast<double>(i), static_cast<double>(n + 1 - i));
      if (v <= p) {
        count += i;
        p = (p - v) / (1.0 - v);
        n -= i;
      } else {
        p = p / v;
        n = i - 1;
      }
      if (p <= 0.0) return count;
      if (p >= 1.0) return count + n;
      if (p > 0.5) return count + n - binomial(n, 1.0 - p);
    }
    return count + binomial_small(n, p);
  }

  // Bin(n, 1/2) for n <= 64 in one word.
  uint64_t half_binomial(unsigned n) {
    uint64_t mask = n >= 64 ? ~0ull : ((1ull << n) - 1);
    return static_cast<uint64_t>(std::popcount(u64() & mask));
  }

  // counts gets one entry per probability; probabilities must sum to <= 1
  // and any unassigned trials land in the last component.
  void multinomial(uint64_t n, const std::vector<double>& prob,
                   std::vector<uint64_t>& counts) {
    counts.assign(prob.size(), 0);
    double rem = 1.0;
    for (size_t k = 0; k + 1 < prob.size() && n > 0; ++k) {
      double r = rem > 0 ? prob[k] / rem : 1.0;
      counts[k] = binomial(n, r > 1.0 ? 1.0 : r);
      n -= counts[k];
      rem -= prob[k];
    }
    if (!prob.empty()) counts.back() += n;
  }

 private:
  void refill() {
    buf_ = detail::philox4x32(
        key_, {static_cast<uint32_t>(block_lo_),
               static_cast<uint32_t>(block_lo_ >> 32),
               static_cast<uint32_t>(block_hi_),
               static_cast<uint32_t>(block_hi_ >> 32)});
    ++block_lo_;
    idx_ = 0;
  }

  // CDF inversion walk, cost O(np).
  uint64_t binomial_small(uint64_t n, double p) {
    double q = std::pow(1.0 - p, static_cast<double>(n));
    double odds = p / (1.0 - p);
    double cdf = q;
    double u = unit();
    uint64_t k = 0;
    while (u > cdf && k < n) {
      ++k;
      q *= odds * (static_cast<double>(n - k + 1) / static_cast<double>(k));
      cdf += q;
    }
    return k;
  }

  uint64_t key_;
  uint64_t block_hi_, block_lo_;
  std::array<uint32_t, 4> buf_{};
  int idx_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace predq
