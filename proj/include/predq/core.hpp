#pragma once

// Experiment lifecycle: test specification, sequential monitor state, the
// stop/continue rule tau = min{n : Q_n >= gamma} with the fixed-sample
// indicator at the final look, and versioned JSON checkpoints.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "predq/families.hpp"
#include "predq/futility.hpp"
#include "predq/gaussian.hpp"
#include "predq/mc.hpp"
#include "predq/nonparam.hpp"

namespace predq {

using json = nlohmann::json;

// Error taxonomy shared with the CLI exit codes.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Family {
  kGaussOne,         // one-sided normal mean, unit variance
  kGaussTwo,         // two-sided normal mean
  kTwoSampleGauss,   // paired two-sample, known variance
  kGroupMeans,       // standardized group-mean increments, two-sided
  kPooledNormal,     // pooled-t with plug-in normal completion
  kPooledBernoulli,  // two-sample Bernoulli with pooled-rate completion
  kMleRatio,         // constrained-MLE density-ratio sequential test
  kKsOne,            // one-sample KS on the probability-integral scale
  kContinuousEvent,  // time-indexed two-sample KS with uniform completion
  kLogRank,          // censored two-sample log-rank on monthly bins
  kDiscreteEvent,    // per-period event-proportion comparison
};

inline const char* family_name(Family f) {
  switch (f) {
    case Family::kGaussOne: return "gauss_one";
    case Family::kGaussTwo: return "gauss_two";
    case Family::kTwoSampleGauss: return "two_sample_gauss";
    case Family::kGroupMeans: return "group_means";
    case Family::kPooledNormal: return "pooled_normal";
    case Family::kPooledBernoulli: return "pooled_bernoulli";
    case Family::kMleRatio: return "mle_ratio";
    case Family::kKsOne: return "ks_one";
    case Family::kContinuousEvent: return "continuous_event";
    case Family::kLogRank: return "logrank";
    case Family::kDiscreteEvent: return "discrete_event";
  }
  throw ConfigError("unknown family enum value");
}

inline Family family_from_name(const std::string& s) {
  for (Family f :
       {Family::kGaussOne, Family::kGaussTwo, Family::kTwoSampleGauss,
        Family::kGroupMeans, Family::kPooledNormal, Family::kPooledBernoulli,
        Family::kMleRatio, Family::kKsOne, Family::kContinuousEvent,
        Family::kLogRank, Family::kDiscreteEvent}) {
    if (s == family_name(f)) return f;
  }
  throw ConfigError("unknown family: " + s);
}

// Families whose looks are calendar/period indexed rather than per-sample.
inline bool is_time_indexed(Family f) {
  return f == Family::kContinuousEvent || f == Family::kLogRank ||
         f == Family::kDiscreteEvent;
}

inline bool is_closed_form(Family f) {
  return f == Family::kGaussOne || f == Family::kGaussTwo ||
         f == Family::kTwoSampleGauss || f == Family::kGroupMeans;
}

struct TestSpec {
  Family family = Family::kGaussOne;
  uint64_t n_max = 0;  // N pairs/samples; months J for logrank; periods T for discrete
  double alpha = 0.05;
  double gamma = 0.95;
  double alpha_tilde = 0.0475;
  json params = json::object();

  void validate() const {
    if (n_max < 1) throw ConfigError("spec: n_max must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ConfigError("spec: alpha must lie in (0,1)");
    }
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      throw ConfigError("spec: gamma must lie in (0,1]");
    }
    double want = alpha * gamma;
    if (std::fabs(alpha_tilde - want) >
        4.0 * std::numeric_limits<double>::epsilon() * want) {
      throw ConfigError("spec: alpha_tilde must equal alpha*gamma");
    }
  }

  double param_num(const char* key) const {
    if (!params.contains(key) || !params[key].is_number()) {
      throw ConfigError(std::string("spec: params.") + key +
                        " missing or not a number");
    }
    return params[key].get<double>();
  }

  double param_num_or(const char* key, double fallback) const {
    return params.contains(key) ? param_num(key) : fallback;
  }

  uint64_t param_count(const char* key) const {
    double v = param_num(key);
    if (!(v >= 0.0) || v != std::floor(v)) {
      throw ConfigError(std::string("spec: params.") + key +
                        " must be a nonnegative integer");
    }
    return static_cast<uint64_t>(v);
  }
};

inline TestSpec make_spec(Family family, uint64_t n_max, double alpha,
                          double gamma, json params = json::object()) {
  TestSpec s;
  s.family = family;
  s.n_max = n_max;
  s.alpha = alpha;
  s.gamma = gamma;
  // product inlined so bad configs surface as ConfigError from validate(),
  // not as the level derivation's domain error
  s.alpha_tilde = alpha * gamma;
  s.params = std::move(params);
  s.validate();
  return s;
}

inline void to_json(json& j, const TestSpec& s) {
  j = json{{"family", family_name(s.family)}, {"n_max", s.n_max},
           {"alpha", s.alpha},                {"gamma", s.gamma},
           {"alpha_tilde", s.alpha_tilde},    {"params", s.params}};
}

inline void from_json(const json& j, TestSpec& s) {
  s.family = family_from_name(j.at("family").get<std::string>());
  s.n_max = j.at("n_max").get<uint64_t>();
  s.alpha = j.at("alpha").get<double>();
  s.gamma = j.at("gamma").get<double>();
  s.alpha_tilde = j.at("alpha_tilde").get<double>();
  s.params = j.value("params", json::object());
  s.validate();
}

// Family-specific sufficient summary; only the active family's slice is
// populated and serialized.
struct SummaryData {
  double t_n = 0.0;                              // running-sum families
  PairWelford pairs;                             // pooled normal
  BernoulliPairs bern;                           // pooled Bernoulli
  MleSummary mle;                                // constrained MLE
  std::vector<double> pit;                       // one-sample KS, sorted
  std::vector<double> times_x, times_y;          // continuous event, sorted
  std::vector<SurvivalRecord> survival;          // logrank records
  std::array<std::vector<uint64_t>, 2> period_events;  // discrete event
};

inline json summary_to_json(Family f, const SummaryData& s) {
  json j = json::object();
  switch (f) {
    case Family::kGaussOne:
    case Family::kGaussTwo:
    case Family::kTwoSampleGauss:
    case Family::kGroupMeans:
      j["t_n"] = s.t_n;
      break;
    case Family::kPooledNormal:
      j["pairs"] = {{"n", s.pairs.n},           {"mean_x", s.pairs.mean_x},
                    {"m2_x", s.pairs.m2_x},     {"mean_y", s.pairs.mean_y},
                    {"m2_y", s.pairs.m2_y}};
      break;
    case Family::kPooledBernoulli:
      j["bern"] = {{"n", s.bern.n},
                   {"sum_x", s.bern.sum_x},
                   {"sum_y", s.bern.sum_y},
                   {"n0", s.bern.n0}};
      break;
    case Family::kMleRatio:
      j["mle"] = {{"n", s.mle.n}, {"sum", s.mle.sum},
                  {"log_ratio", s.mle.log_ratio}};
      break;
    case Family::kKsOne:
      j["pit"] = s.pit;
      break;
    case Family::kContinuousEvent:
      j["times_x"] = s.times_x;
      j["times_y"] = s.times_y;
      break;
    case Family::kLogRank: {
      json arr = json::array();
      for (const auto& r : s.survival) {
        arr.push_back({r.id, r.group, r.time, r.event, r.entry});
      }
      j["survival"] = std::move(arr);
      break;
    }
    case Family::kDiscreteEvent:
      j["events_x"] = s.period_events[0];
      j["events_y"] = s.period_events[1];
      break;
  }
  return j;
}

inline SummaryData summary_from_json(Family f, const json& j) {
  SummaryData s;
  switch (f) {
    case Family::kGaussOne:
    case Family::kGaussTwo:
    case Family::kTwoSampleGauss:
    case Family::kGroupMeans:
      s.t_n = j.at("t_n").get<double>();
      break;
    case Family::kPooledNormal: {
      const json& p = j.at("pairs");
      s.pairs.n = p.at("n").get<uint64_t>();
      s.pairs.mean_x = p.at("mean_x").get<double>();
      s.pairs.m2_x = p.at("m2_x").get<double>();
      s.pairs.mean_y = p.at("mean_y").get<double>();
      s.pairs.m2_y = p.at("m2_y").get<double>();
      break;
    }
    case Family::kPooledBernoulli: {
      const json& p = j.at("bern");
      s.bern.n = p.at("n").get<uint64_t>();
      s.bern.sum_x = p.at("sum_x").get<uint64_t>();
      s.bern.sum_y = p.at("sum_y").get<uint64_t>();
      s.bern.n0 = p.at("n0").get<uint64_t>();
      break;
    }
    case Family::kMleRatio: {
      const json& p = j.at("mle");
      s.mle.n = p.at("n").get<uint64_t>();
      s.mle.sum = p.at("sum").get<double>();
      s.mle.log_ratio = p.at("log_ratio").get<double>();
      break;
    }
    case Family::kKsOne:
      s.pit = j.at("pit").get<std::vector<double>>();
      break;
    case Family::kContinuousEvent:
      s.times_x = j.at("times_x").get<std::vector<double>>();
      s.times_y = j.at("times_y").get<std::vector<double>>();
      break;
    case Family::kLogRank:
      for (const json& r : j.at("survival")) {
        SurvivalRecord rec;
        rec.id = r.at(0).get<std::string>();
        rec.group = r.at(1).get<int>();
        rec.time = r.at(2).get<double>();
        rec.event = r.at(3).get<bool>();
        rec.entry = r.at(4).get<double>();
        s.survival.push_back(std::move(rec));
      }
      break;
    case Family::kDiscreteEvent:
      s.period_events[0] = j.at("events_x").get<std::vector<uint64_t>>();
      s.period_events[1] = j.at("events_y").get<std::vector<uint64_t>>();
      break;
  }
  return s;
}

enum class Status { kRunning, kRejected, kCompletedNoReject, kStoppedFutile };

inline const char* status_name(Status s) {
  switch (s) {
    case Status::kRunning: return "running";
    case Status::kRejected: return "rejected";
    case Status::kCompletedNoReject: return "completed_no_reject";
    case Status::kStoppedFutile: return "stopped_futile";
  }
  throw ConfigError("unknown status enum value");
}

inline Status status_from_name(const std::string& s) {
  for (Status v : {Status::kRunning, Status::kRejected,
                   Status::kCompletedNoReject, Status::kStoppedFutile}) {
    if (s == status_name(v)) return v;
  }
  throw DataError("checkpoint: unknown status " + s);
}

struct QPoint {
  uint64_t n = 0;
  double q = 0.0;
  double se = 0.0;
  uint32_t flags = 0;
  bool final_look = false;  // indicator semantics instead of the threshold
};

enum class Verdict { kContinue, kReject, kNoReject, kStopFutile };
enum class Basis { kNone, kThresholdCross, kFinalIndicator, kFutility };

struct Decision {
  Verdict verdict = Verdict::kContinue;
  uint64_t at_n = 0;
  double q_value = 0.0;
  Basis basis = Basis::kNone;
};

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::kContinue: return "continue";
    case Verdict::kReject: return "reject";
    case Verdict::kNoReject: return "no_reject";
    case Verdict::kStopFutile: return "stop_futile";
  }
  throw ConfigError("unknown verdict enum value");
}

inline const char* basis_name(Basis b) {
  switch (b) {
    case Basis::kNone: return "none";
    case Basis::kThresholdCross: return "threshold_cross";
    case Basis::kFinalIndicator: return "final_indicator";
    case Basis::kFutility: return "futility";
  }
  throw ConfigError("unknown basis enum value");
}

struct MonitorState {
  TestSpec spec;
  uint64_t n = 0;  // samples ingested; look index for time-indexed families
  SummaryData summary;
  std::vector<QPoint> q_history;
  Status status = Status::kRunning;
  uint64_t stop_n = 0;
  uint64_t seed = 0;  // RNG seed material for Q evaluations
};

inline constexpr int kCheckpointVersion = 1;

inline std::string checkpoint(const MonitorState& st) {
  json q = json::array();
  for (const auto& p : st.q_history) {
    q.push_back({p.n, p.q, p.se, p.flags, p.final_look});
  }
  json j{{"schema_version", kCheckpointVersion},
         {"spec", st.spec},
         {"n", st.n},
         {"summary", summary_to_json(st.spec.family, st.summary)},
         {"q_history", std::move(q)},
         {"status", status_name(st.status)},
         {"stop_n", st.stop_n},
         {"seed", st.seed}};
  return j.dump();
}

inline MonitorState restore(const std::string& record) {
  json j;
  try {
    j = json::parse(record);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: corrupt record: ") + e.what());
  }
  try {
    if (j.at("schema_version").get<int>() != kCheckpointVersion) {
      throw DataError("checkpoint: schema version mismatch");
    }
    MonitorState st;
    st.spec = j.at("spec").get<TestSpec>();
    st.n = j.at("n").get<uint64_t>();
    st.summary = summary_from_json(st.spec.family, j.at("summary"));
    for (const json& p : j.at("q_history")) {
      QPoint qp;
      qp.n = p.at(0).get<uint64_t>();
      qp.q = p.at(1).get<double>();
      qp.se = p.at(2).get<double>();
      qp.flags = p.at(3).get<uint32_t>();
      qp.final_look = p.at(4).get<bool>();
      if (!(qp.q >= 0.0 && qp.q <= 1.0)) {
        throw DataError("checkpoint: Q outside [0,1]");
      }
      st.q_history.push_back(qp);
    }
    st.status = status_from_name(j.at("status").get<std::string>());
    st.stop_n = j.at("stop_n").get<uint64_t>();
    st.seed = j.at("seed").get<uint64_t>();
    return st;
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint: corrupt record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Q evaluation, dispatched per family. Monte-Carlo families draw replicate
// streams keyed (seed, completion purpose, look << 32 | replicate) so every
// look is independently reproducible.

struct EvalOptions {
  uint64_t b = 10000;         // MC completions per evaluation
  bool conservative = false;  // require q - 2se >= gamma at the threshold
};

namespace detail {

inline StreamKey look_key(uint64_t seed, uint64_t look) {
  return StreamKey{seed, stream::kCompletion, look << 32};
}

// Smallest n at which an interim Q is well defined for the family.
inline uint64_t min_eval_n(Family f) {
  switch (f) {
    case Family::kPooledNormal:
    case Family::kMleRatio:
      return 2;
    default:
      return 1;
  }
}

}  // namespace detail

// Interim Q at 1 <= n < n_max (time-indexed: look t). Throws ConfigError on
// missing family parameters.
inline QPoint evaluate_interim(const TestSpec& spec, const SummaryData& s,
                               uint64_t n, uint64_t seed,
                               const EvalOptions& opt) {
  QPoint out;
  out.n = n;
  StreamKey key = detail::look_key(seed, n);
  switch (spec.family) {
    case Family::kGaussOne:
      out.q = q_one_sided(s.t_n, n, spec.n_max, spec.alpha_tilde);
      break;
    case Family::kGaussTwo:
    case Family::kGroupMeans:
      out.q = q_two_sided(s.t_n, n, spec.n_max, spec.alpha_tilde);
      break;
    case Family::kTwoSampleGauss:
      out.q = q_two_sample_known_var(s.t_n, n, spec.n_max, spec.alpha_tilde);
      break;
    case Family::kPooledNormal: {
      double c = spec.param_num("critical");
      PairWelford w = s.pairs;
      QEstimate e = estimate_q(
          [&](RngStream& str, uint32_t& flags) {
            return pooled_normal_completed_stat(w, spec.n_max, str, flags);
          },
          UpperCut{c}, opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
    case Family::kPooledBernoulli: {
      double c = spec.param_num("critical");
      BernoulliPairs bp = s.bern;
      QEstimate e = estimate_q(
          [&](RngStream& str, uint32_t& flags) {
            return pooled_bernoulli_completed_stat(bp, spec.n_max, str, flags);
          },
          UpperCut{c}, opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
    case Family::kMleRatio: {
      MleSummary m = s.mle;
      QEstimate e = estimate_q(
          [&](RngStream& str, uint32_t&) {
            return mle_completed_log_ratio(m, spec.n_max, str);
          },
          OneSidedCut{mle_log_threshold(spec.alpha_tilde)}, opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
    case Family::kKsOne: {
      QEstimate e =
          ks1_q(s.pit, spec.n_max, spec.param_num("critical"), opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
    case Family::kContinuousEvent: {
      const json& grid = spec.params.at("grid");
      if (n < 1 || n > grid.size()) {
        throw ConfigError("continuous_event: look index outside grid");
      }
      TwoSampleTimesInterim d;
      d.t = grid[n - 1].get<double>();
      d.horizon = spec.param_num_or("horizon", 1.0);
      d.n_total = spec.n_max;
      d.m_total = spec.param_count("m_total");
      for (double v : s.times_x) {
        if (v <= d.t) d.x_obs.push_back(v);
      }
      for (double v : s.times_y) {
        if (v <= d.t) d.y_obs.push_back(v);
      }
      QEstimate e =
          continuous_event_q_t(d, spec.param_num("critical"), opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
    case Family::kLogRank: {
      LogRankInterim st = logrank_interim(s.survival, spec.n_max, n);
      QEstimate e =
          logrank_q_t(st, spec.param_num("critical"), opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
    case Family::kDiscreteEvent: {
      DiscreteEventInterim st;
      st.periods_total = spec.n_max;
      st.n_per_group = spec.param_count("n_per_group");
      st.events = s.period_events;
      QEstimate e =
          discrete_event_q_t(st, spec.param_num("critical"), opt.b, key);
      out.q = e.q_hat;
      out.se = e.std_err;
      out.flags = e.flags;
      break;
    }
  }
  return out;
}

// Final-look indicator Q_N in {0,1}: the fixed-sample test at level
// alpha_tilde (or against the calibrated critical value).
inline QPoint evaluate_final(const TestSpec& spec, const SummaryData& s,
                             uint64_t seed) {
  (void)seed;
  QPoint out;
  out.n = spec.n_max;
  bool reject = false;
  switch (spec.family) {
    case Family::kGaussOne:
      reject = final_reject_one_sided(s.t_n, spec.n_max, spec.alpha_tilde);
      break;
    case Family::kGaussTwo:
    case Family::kGroupMeans:
      reject = final_reject_two_sided(s.t_n, spec.n_max, spec.alpha_tilde);
      break;
    case Family::kTwoSampleGauss:
      reject = final_reject_two_sample(s.t_n, spec.n_max, spec.alpha_tilde);
      break;
    case Family::kPooledNormal: {
      uint32_t flags = 0;
      reject = pooled_t_statistic(s.pairs, &flags) > spec.param_num("critical");
      out.flags = flags;
      break;
    }
    case Family::kPooledBernoulli: {
      uint32_t flags = 0;
      reject = bernoulli_statistic(s.bern.sum_x, s.bern.sum_y, spec.n_max,
                                   &flags) > spec.param_num("critical");
      out.flags = flags;
      break;
    }
    case Family::kMleRatio:
      reject = s.mle.log_ratio >= mle_log_threshold(spec.alpha_tilde);
      break;
    case Family::kKsOne: {
      if (s.pit.size() != spec.n_max) {
        throw DataError("ks_one: final look before all samples arrived");
      }
      reject = ks_distance_uniform(s.pit) > spec.param_num("critical");
      break;
    }
    case Family::kContinuousEvent: {
      if (s.times_x.empty() || s.times_y.empty()) {
        throw DataError("continuous_event: empty group at final look");
      }
      reject = ks_two_sample_distance(s.times_x, s.times_y) >
               spec.param_num("critical");
      break;
    }
    case Family::kLogRank: {
      EventTable tab = bin_survival(s.survival, spec.n_max);
      reject = logrank_statistic(tab).chi2 > spec.param_num("critical");
      break;
    }
    case Family::kDiscreteEvent: {
      DiscreteEventInterim st;
      st.periods_total = spec.n_max;
      st.n_per_group = spec.param_count("n_per_group");
      st.events = s.period_events;
      st.validate();
      if (st.t() != spec.n_max) {
        throw DataError("discrete_event: final look before all periods arrived");
      }
      RngStream unused(0, stream::kCompletion, 0);
      reject = discrete_event_completed_stat(st, unused) >
               spec.param_num("critical");
      break;
    }
  }
  out.q = reject ? 1.0 : 0.0;
  return out;
}

// Stopping rule over the recorded Q sequence: reject at the first
// Q_n >= gamma; at the final look reject iff the indicator is 1.
inline Decision decide(const MonitorState& st, const EvalOptions& opt = {}) {
  if (st.q_history.empty()) {
    throw DataError("decide: empty Q history");
  }
  for (const auto& p : st.q_history) {
    if (p.final_look) {
      if (p.q == 1.0) {
        return Decision{Verdict::kReject, p.n, p.q, Basis::kFinalIndicator};
      }
      return Decision{Verdict::kNoReject, p.n, p.q, Basis::kFinalIndicator};
    }
    bool crossed = opt.conservative ? p.q - 2.0 * p.se >= st.spec.gamma
                                    : p.q >= st.spec.gamma;
    if (crossed) {
      return Decision{Verdict::kReject, p.n, p.q, Basis::kThresholdCross};
    }
  }
  const QPoint& last = st.q_history.back();
  return Decision{Verdict::kContinue, last.n, last.q, Basis::kNone};
}

// ---------------------------------------------------------------------------
// Sequential monitor driver for per-sample families. Time-indexed families
// ingest a snapshot and walk their look grid instead (run_time_looks).

class Monitor {
 public:
  Monitor(TestSpec spec, uint64_t seed, EvalOptions opt = {},
          uint64_t cadence = 1,
          std::optional<FutilitySpec> futility = std::nullopt)
      : opt_(opt), cadence_(cadence), futility_(std::move(futility)) {
    spec.validate();
    if (cadence_ < 1) throw ConfigError("monitor: cadence must be >= 1");
    if (futility_) futility_->validate();
    st_.spec = std::move(spec);
    st_.seed = seed;
  }

  explicit Monitor(MonitorState st, EvalOptions opt = {}, uint64_t cadence = 1,
                   std::optional<FutilitySpec> futility = std::nullopt)
      : st_(std::move(st)),
        opt_(opt),
        cadence_(cadence),
        futility_(std::move(futility)) {}

  const MonitorState& state() const { return st_; }
  Status status() const { return st_.status; }

  // Latest decision; futility stops are reported as such.
  Decision decision() const {
    if (st_.status == Status::kStoppedFutile) {
      return Decision{Verdict::kStopFutile, st_.stop_n,
                      st_.q_history.empty() ? 0.0 : st_.q_history.back().q,
                      Basis::kFutility};
    }
    if (st_.q_history.empty()) return Decision{};
    return decide(st_, opt_);
  }

  // Newly appended Q points since the last call (for emission).
  std::vector<QPoint> drain_emitted() { return std::exchange(emitted_, {}); }

  // One scalar observation (gauss_one, gauss_two, mle_ratio, ks_one).
  void add_scalar(double x) {
    require_running();
    if (!std::isfinite(x)) throw DataError("observation: non-finite value");
    switch (st_.spec.family) {
      case Family::kGaussOne:
      case Family::kGaussTwo:
        st_.summary.t_n += x;
        break;
      case Family::kMleRatio:
        st_.summary.mle.add(x);
        break;
      case Family::kKsOne:
        if (!(x > 0.0 && x < 1.0)) {
          throw DataError("ks_one: observations must lie in (0,1)");
        }
        st_.summary.pit.insert(
            std::upper_bound(st_.summary.pit.begin(), st_.summary.pit.end(), x),
            x);
        break;
      default:
        throw DataError("observation shape does not match family");
    }
    advance();
  }

  // One (x, y) pair (two_sample_gauss, pooled_normal, pooled_bernoulli).
  void add_pair(double x, double y) {
    require_running();
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw DataError("observation: non-finite value");
    }
    switch (st_.spec.family) {
      case Family::kTwoSampleGauss:
        st_.summary.t_n += x - y;
        break;
      case Family::kPooledNormal:
        st_.summary.pairs.add(x, y);
        break;
      case Family::kPooledBernoulli: {
        bool bx = x == 1.0, by = y == 1.0;
        if ((x != 0.0 && !bx) || (y != 0.0 && !by)) {
          throw DataError("pooled_bernoulli: observations must be 0 or 1");
        }
        st_.summary.bern.add(bx, by);
        break;
      }
      default:
        throw DataError("observation shape does not match family");
    }
    advance();
  }

  // One standardized group-mean increment (group_means).
  void add_group(const GroupSummary& g) {
    require_running();
    if (st_.spec.family != Family::kGroupMeans) {
      throw DataError("observation shape does not match family");
    }
    bool welch = st_.spec.params.value("welch", false);
    st_.summary.t_n += group_mean_z(g, /*pooled_variance=*/!welch);
    advance();
  }

  // Snapshot ingestion for time-indexed families (no look evaluation).
  void add_survival(SurvivalRecord rec) {
    require_running();
    if (st_.spec.family != Family::kLogRank) {
      throw DataError("observation shape does not match family");
    }
    if (!(rec.time > 0.0) || !std::isfinite(rec.time) ||
        !std::isfinite(rec.entry) || rec.entry < 0.0) {
      throw DataError("survival record: bad time or entry");
    }
    if (rec.group != 0 && rec.group != 1) {
      throw DataError("survival record: group must be 0 or 1");
    }
    st_.summary.survival.push_back(std::move(rec));
  }

  void add_event_time(int group, double time) {
    require_running();
    if (st_.spec.family != Family::kContinuousEvent) {
      throw DataError("observation shape does not match family");
    }
    double horizon = st_.spec.param_num_or("horizon", 1.0);
    if (!(time > 0.0 && time <= horizon)) {
      throw DataError("event time outside (0, horizon]");
    }
    if (group != 0 && group != 1) {
      throw DataError("event record: group must be 0 or 1");
    }
    auto& v = group == 0 ? st_.summary.times_x : st_.summary.times_y;
    v.insert(std::upper_bound(v.begin(), v.end(), time), time);
  }

  void add_period(uint64_t events_x, uint64_t events_y) {
    require_running();
    if (st_.spec.family != Family::kDiscreteEvent) {
      throw DataError("observation shape does not match family");
    }
    st_.summary.period_events[0].push_back(events_x);
    st_.summary.period_events[1].push_back(events_y);
    DiscreteEventInterim chk;
    chk.periods_total = st_.spec.n_max;
    chk.n_per_group = st_.spec.param_count("n_per_group");
    chk.events = st_.summary.period_events;
    try {
      chk.validate();
    } catch (const std::exception& e) {
      throw DataError(e.what());
    }
    st_.n = st_.summary.period_events[0].size();
    if (st_.n == st_.spec.n_max) {
      record(evaluate_final(st_.spec, st_.summary, st_.seed), /*final=*/true);
    } else if (st_.n % cadence_ == 0) {
      record(evaluate_interim(st_.spec, st_.summary, st_.n, st_.seed, opt_));
    }
  }

  // Off-cadence evaluation (blank-line flush in the CLI).
  void evaluate_now() {
    require_running();
    if (is_time_indexed(st_.spec.family)) {
      throw DataError("flush: time-indexed families evaluate on their grid");
    }
    if (st_.n == 0 || st_.n < detail::min_eval_n(st_.spec.family)) return;
    if (!st_.q_history.empty() && st_.q_history.back().n == st_.n) return;
    record(evaluate_interim(st_.spec, st_.summary, st_.n, st_.seed, opt_));
  }

  // Walks looks t = 1..J-1 plus the final indicator for logrank and
  // continuous_event snapshots; stops at the first terminal decision.
  // Resumes after the last recorded look, so a restored state replays
  // identically.
  void run_time_looks() {
    require_running();
    uint64_t looks = 0;
    if (st_.spec.family == Family::kLogRank) {
      looks = st_.spec.n_max - 1;
    } else if (st_.spec.family == Family::kContinuousEvent) {
      looks = st_.spec.params.at("grid").size();
    } else {
      throw DataError("run_time_looks: family is sample-indexed");
    }
    uint64_t start = st_.q_history.empty() ? 1 : st_.q_history.back().n + 1;
    for (uint64_t t = start; t <= looks && st_.status == Status::kRunning;
         ++t) {
      if (t % cadence_ != 0) continue;
      st_.n = t;
      record(evaluate_interim(st_.spec, st_.summary, t, st_.seed, opt_));
    }
    if (st_.status == Status::kRunning) {
      st_.n = st_.spec.n_max;
      QPoint fin = evaluate_final(st_.spec, st_.summary, st_.seed);
      fin.n = looks + 1;  // strictly increasing look index
      record(fin, /*final=*/true);
    }
  }

 private:
  void require_running() const {
    if (st_.status != Status::kRunning) {
      throw DataError("monitor: data after terminal status");
    }
  }

  void advance() {
    ++st_.n;
    if (st_.n > st_.spec.n_max) {
      throw DataError("monitor: more observations than n_max");
    }
    if (st_.n == st_.spec.n_max) {
      record(evaluate_final(st_.spec, st_.summary, st_.seed), /*final=*/true);
      return;
    }
    if (st_.n % cadence_ != 0 || st_.n < detail::min_eval_n(st_.spec.family)) {
      return;
    }
    record(evaluate_interim(st_.spec, st_.summary, st_.n, st_.seed, opt_));
  }

  void record(QPoint p, bool final = false) {
    p.final_look = final;
    st_.q_history.push_back(p);
    emitted_.push_back(p);
    bool crossed = opt_.conservative && !final
                       ? p.q - 2.0 * p.se >= st_.spec.gamma
                       : p.q >= st_.spec.gamma;
    if (final) {
      st_.status =
          p.q == 1.0 ? Status::kRejected : Status::kCompletedNoReject;
      st_.stop_n = st_.n;
      return;
    }
    if (crossed) {
      st_.status = Status::kRejected;
      st_.stop_n = p.n;
      return;
    }
    // Efficacy checked first; futility is advisory and cannot mask a reject.
    if (futility_ && st_.spec.family == Family::kGaussOne &&
        screen_with_q(p.q, futility_->gamma_f)) {
      double qs = q_star_gaussian(st_.summary.t_n, p.n, st_.spec.n_max,
                                  st_.spec.alpha_tilde, futility_->theta_star);
      if (futility_decide(qs, futility_->gamma_f) ==
          FutilityVerdict::kStopFutile) {
        st_.status = Status::kStoppedFutile;
        st_.stop_n = p.n;
      }
    }
  }

  MonitorState st_;
  EvalOptions opt_;
  uint64_t cadence_ = 1;
  std::optional<FutilitySpec> futility_;
  std::vector<QPoint> emitted_;
};

}  // namespace predq
