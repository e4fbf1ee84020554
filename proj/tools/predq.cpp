// Command-line surface for the predictive sequential-testing library:
// design planning, critical-value calibration, streaming monitors with
// checkpoints, operating-characteristic simulations, confidence sequences,
// and futility reports. Every run appends an audit JSONL; exit codes are
// 0 ok, 2 config error, 3 data error, 4 numerical failure.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "predq/predq.hpp"

namespace {

using predq::ConfigError;
using predq::DataError;
using predq::Family;
using predq::json;
using predq::NumericalError;

struct GlobalOpts {
  std::string config_path;
  std::string data_path;       // "-" or empty: stdin
  std::string checkpoint_path;
  std::string audit_path = "audit.jsonl";
  std::optional<uint64_t> seed_flag;
  std::optional<unsigned> threads_flag;
  std::optional<uint64_t> cadence_flag;
  std::optional<uint64_t> b_flag;
  bool conservative = false;
};

// Deterministic audit sink: truncated at open, one JSON object per line.
class Audit {
 public:
  explicit Audit(const std::string& path) : out_(path, std::ios::trunc) {
    if (!out_) throw ConfigError("audit: cannot open " + path);
  }
  void write(json record) { out_ << record.dump() << "\n"; }
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
};

json load_config(const std::string& path) {
  if (path.empty()) throw ConfigError("--config is required");
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse failure: ") + e.what());
  }
  if (cfg.value("schema_version", 0) != 1) {
    throw ConfigError("config: schema_version must be 1");
  }
  return cfg;
}

uint64_t resolve_seed(const GlobalOpts& g, const json& cfg) {
  if (g.seed_flag) return *g.seed_flag;
  if (const char* env = std::getenv("PREDQ_SEED")) {
    return std::stoull(env);
  }
  return cfg.value("seed", uint64_t{0});
}

unsigned resolve_threads(const GlobalOpts& g, const json& cfg) {
  if (g.threads_flag) return *g.threads_flag;
  if (const char* env = std::getenv("PREDQ_THREADS")) {
    return static_cast<unsigned>(std::stoul(env));
  }
  return cfg.value("threads", predq::default_threads());
}

predq::TestSpec spec_from_config(const json& cfg) {
  if (!cfg.contains("test")) throw ConfigError("config: missing test section");
  const json& t = cfg["test"];
  try {
    return predq::make_spec(
        predq::family_from_name(t.at("family").get<std::string>()),
        t.at("n_max").get<uint64_t>(), t.at("alpha").get<double>(),
        t.at("gamma").get<double>(), t.value("params", json::object()));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: test section: ") + e.what());
  }
}

std::optional<predq::FutilitySpec> futility_from_config(
    const json& cfg, const predq::TestSpec& spec) {
  if (!cfg.contains("futility")) return std::nullopt;
  const json& f = cfg["futility"];
  try {
    return predq::make_futility_spec(f.at("theta_star").get<double>(),
                                     f.value("gamma_f", 0.99), spec.n_max,
                                     spec.alpha_tilde);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: futility section: ") + e.what());
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("output: cannot open " + path);
  out << header << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << fmt(row[i]);
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// plan

int cmd_plan(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  if (!cfg.contains("plan")) throw ConfigError("config: missing plan section");
  const json& p = cfg["plan"];
  double alpha = p.value("alpha", 0.05);
  double gamma = p.value("gamma", 0.95);
  double power = p.value("power", 0.90);
  double alpha_tilde = predq::derive_predictive_level(alpha, gamma);

  uint64_t n_fixed;
  double theta_star;
  if (p.contains("n_fixed")) {
    n_fixed = p.at("n_fixed").get<uint64_t>();
    theta_star = p.contains("theta_star")
                     ? p.at("theta_star").get<double>()
                     : predq::effect_for_power(n_fixed, alpha, power);
  } else if (p.contains("theta_star")) {
    theta_star = p.at("theta_star").get<double>();
    // smallest N with the requested power at level alpha
    double z = (predq::norm_upper_quantile(alpha) +
                predq::norm_quantile(power)) /
               theta_star;
    n_fixed = static_cast<uint64_t>(std::ceil(z * z));
  } else {
    throw ConfigError("config: plan needs n_fixed or theta_star");
  }
  uint64_t n_inflated =
      gamma == 1.0 ? n_fixed
                   : predq::inflate_sample_size(n_fixed, alpha, gamma, power);
  double power_fixed_n = predq::power_fixed(theta_star, n_fixed, alpha);
  double power_seq =
      predq::power_bound_sequential(theta_star, n_inflated, alpha, gamma);

  json report{{"alpha", alpha},
              {"gamma", gamma},
              {"alpha_tilde", alpha_tilde},
              {"power_target", power},
              {"theta_star", theta_star},
              {"n_fixed", n_fixed},
              {"n_inflated", n_inflated},
              {"power_fixed_at_n", power_fixed_n},
              {"power_bound_sequential", power_seq}};
  if (p.contains("gamma_f")) {
    double gamma_f = p.at("gamma_f").get<double>();
    predq::FutilitySpec f = predq::make_futility_spec(theta_star, gamma_f,
                                                      n_inflated, alpha_tilde);
    report["q0_star"] = f.q0_star;
    report["futility_budget"] = f.error_budget();
  }

  std::cout << "alpha_tilde = " << fmt(alpha_tilde) << "\n"
            << "n_fixed = " << n_fixed << "  n_inflated = " << n_inflated
            << "\n"
            << "theta_star = " << fmt(theta_star) << "\n"
            << "power(fixed, N, alpha) = " << fmt(power_fixed_n) << "\n"
            << "power_bound(sequential, N', alpha~) = " << fmt(power_seq)
            << "\n";
  if (report.contains("futility_budget")) {
    std::cout << "q0_star = " << fmt(report["q0_star"].get<double>())
              << "  futility_budget = "
              << fmt(report["futility_budget"].get<double>()) << "\n";
  }
  std::string out_path = p.value("out", std::string("plan_report.json"));
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw ConfigError("output: cannot open " + out_path);
  out << report.dump(2) << "\n";

  Audit audit(g.audit_path);
  audit.write(json{{"cmd", "plan"}, {"event", "report"}, {"report", report}});
  return 0;
}

// ---------------------------------------------------------------------------
// calibrate

int cmd_calibrate(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  predq::TestSpec spec = spec_from_config(cfg);
  const json& c = cfg.value("calibrate", json::object());
  uint64_t seed = resolve_seed(g, cfg);
  uint64_t b_cal = c.value("b_cal", uint64_t{100000});

  predq::CalibrationResult res;
  predq::StreamKey key{seed, predq::stream::kCalibration, 0};
  switch (spec.family) {
    case Family::kPooledNormal:
      res = predq::calibrate_critical_value(
          [&](predq::RngStream& s, uint32_t& flags) {
            return predq::pooled_normal_null_stat(spec.n_max, s, flags);
          },
          spec.alpha_tilde, b_cal, key);
      break;
    case Family::kPooledBernoulli: {
      uint64_t n0 = spec.params.value("n0", uint64_t{5});
      res = predq::calibrate_critical_value(
          [&](predq::RngStream& s, uint32_t& flags) {
            predq::BernoulliPairs bp;
            bp.n0 = n0;
            return predq::pooled_bernoulli_completed_stat(bp, spec.n_max, s,
                                                          flags);
          },
          spec.alpha_tilde, b_cal, key);
      break;
    }
    case Family::kKsOne: {
      std::vector<double> sample(spec.n_max);
      res = predq::calibrate_critical_value(
          [&](predq::RngStream& s, uint32_t&) {
            for (auto& v : sample) v = s.unit();
            std::sort(sample.begin(), sample.end());
            return predq::ks_distance_uniform(sample);
          },
          spec.alpha_tilde, b_cal, key);
      break;
    }
    case Family::kContinuousEvent: {
      std::vector<double> xs(spec.n_max);
      std::vector<double> ys(spec.param_count("m_total"));
      res = predq::calibrate_critical_value(
          [&](predq::RngStream& s, uint32_t&) {
            for (auto& v : xs) v = s.unit();
            for (auto& v : ys) v = s.unit();
            std::sort(xs.begin(), xs.end());
            std::sort(ys.begin(), ys.end());
            return predq::ks_two_sample_distance(xs, ys);
          },
          spec.alpha_tilde, b_cal, key);
      break;
    }
    case Family::kDiscreteEvent: {
      predq::DiscreteEventInterim st;
      st.periods_total = spec.n_max;
      st.n_per_group = spec.param_count("n_per_group");
      res = predq::calibrate_critical_value(
          [&](predq::RngStream& s, uint32_t&) {
            return predq::discrete_event_completed_stat(st, s);
          },
          spec.alpha_tilde, b_cal, key);
      break;
    }
    case Family::kLogRank: {
      const json& law_j = c.value("law", json::object());
      predq::SurvivalLaw law;
      law.hazard_x = law_j.value("hazard_x", 0.02);
      law.hazard_y = law_j.value("hazard_y", law.hazard_x);
      law.censor_hazard = law_j.value("censor_hazard", 0.0);
      law.hazard_decay = law_j.value("hazard_decay", 1.0);
      uint64_t n_x = c.at("n_x").get<uint64_t>();
      uint64_t n_y = c.at("n_y").get<uint64_t>();
      uint64_t b = g.b_flag ? *g.b_flag : c.value("b", uint64_t{200});
      uint64_t replicates = c.value("replicates", uint64_t{600});
      res = predq::calibrate_logrank_anytime(law, n_x, n_y, spec.n_max,
                                             spec.gamma, b, spec.alpha,
                                             replicates, key);
      break;
    }
    default:
      throw ConfigError(
          "calibrate: family has a closed-form level, nothing to calibrate");
  }

  json artifact{{"family", predq::family_name(spec.family)},
                {"params", spec.params},
                {"alpha_tilde", res.target_level},
                {"c", res.c},
                {"achieved_level_estimate", res.achieved_level_estimate},
                {"b_cal", res.b_cal},
                {"seed", seed}};
  std::string out_path = c.value("out", std::string("calibration.json"));
  std::ofstream out(out_path, std::ios::trunc);
  if (!out) throw ConfigError("output: cannot open " + out_path);
  out << artifact.dump(2) << "\n";
  std::cout << "c = " << fmt(res.c)
            << "  achieved = " << fmt(res.achieved_level_estimate)
            << "  target = " << fmt(res.target_level) << "\n";

  Audit audit(g.audit_path);
  audit.write(
      json{{"cmd", "calibrate"}, {"event", "result"}, {"artifact", artifact}});
  return 0;
}

// ---------------------------------------------------------------------------
// monitor / replay

struct LineReader {
  std::istream& in;
  uint64_t line_no = 0;

  bool next(std::string& line) {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }
};

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double parse_num(const std::string& s, uint64_t line_no) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    }
    if (pos != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError("line " + std::to_string(line_no) + ": bad number '" + s +
                    "'");
  }
}

bool is_header_line(const std::string& line) {
  return line == "id,group,time,event" || line == "id,group,time,event,entry" ||
         line == "group,time";
}

// Feeds one data line into the monitor.
void feed_line(predq::Monitor& mon, Family family, const std::string& line,
               uint64_t line_no) {
  if (line[0] == '{') {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      switch (family) {
        case Family::kLogRank: {
          predq::SurvivalRecord r;
          r.id = j.value("id", std::string());
          r.group = j.at("group").get<int>();
          r.time = j.at("time").get<double>();
          r.event = j.at("event").get<int>() != 0;
          r.entry = j.value("entry", 0.0);
          mon.add_survival(std::move(r));
          return;
        }
        case Family::kContinuousEvent:
          mon.add_event_time(j.at("group").get<int>(),
                             j.at("time").get<double>());
          return;
        case Family::kDiscreteEvent:
          mon.add_period(j.at("events_x").get<uint64_t>(),
                         j.at("events_y").get<uint64_t>());
          return;
        case Family::kGroupMeans: {
          predq::GroupSummary gs;
          gs.mean_x = j.at("mean_x").get<double>();
          gs.s2_x = j.at("var_x").get<double>();
          gs.m_x = j.at("m_x").get<uint64_t>();
          gs.mean_y = j.at("mean_y").get<double>();
          gs.s2_y = j.at("var_y").get<double>();
          gs.m_y = j.at("m_y").get<uint64_t>();
          mon.add_group(gs);
          return;
        }
        default:
          if (j.contains("y")) {
            mon.add_pair(j.at("x").get<double>(), j.at("y").get<double>());
          } else {
            mon.add_scalar(j.at("x").get<double>());
          }
          return;
      }
    } catch (const json::exception& e) {
      throw DataError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  std::vector<std::string> f = split_csv(line);
  auto want = [&](size_t lo, size_t hi) {
    if (f.size() < lo || f.size() > hi) {
      throw DataError("line " + std::to_string(line_no) +
                      ": wrong field count for family");
    }
  };
  switch (family) {
    case Family::kLogRank: {
      want(4, 5);
      predq::SurvivalRecord r;
      r.id = f[0];
      r.group = static_cast<int>(parse_num(f[1], line_no));
      r.time = parse_num(f[2], line_no);
      r.event = parse_num(f[3], line_no) != 0.0;
      r.entry = f.size() == 5 ? parse_num(f[4], line_no) : 0.0;
      mon.add_survival(std::move(r));
      break;
    }
    case Family::kContinuousEvent:
      want(2, 2);
      mon.add_event_time(static_cast<int>(parse_num(f[0], line_no)),
                         parse_num(f[1], line_no));
      break;
    case Family::kDiscreteEvent: {
      want(2, 2);
      double ex = parse_num(f[0], line_no);
      double ey = parse_num(f[1], line_no);
      mon.add_period(static_cast<uint64_t>(ex), static_cast<uint64_t>(ey));
      break;
    }
    case Family::kGroupMeans: {
      want(6, 6);
      predq::GroupSummary gs;
      gs.mean_x = parse_num(f[0], line_no);
      gs.s2_x = parse_num(f[1], line_no);
      gs.m_x = static_cast<uint64_t>(parse_num(f[2], line_no));
      gs.mean_y = parse_num(f[3], line_no);
      gs.s2_y = parse_num(f[4], line_no);
      gs.m_y = static_cast<uint64_t>(parse_num(f[5], line_no));
      mon.add_group(gs);
      break;
    }
    case Family::kTwoSampleGauss:
    case Family::kPooledNormal:
    case Family::kPooledBernoulli:
      want(2, 2);
      mon.add_pair(parse_num(f[0], line_no), parse_num(f[1], line_no));
      break;
    default:
      want(1, 1);
      mon.add_scalar(parse_num(f[0], line_no));
      break;
  }
}

void emit_points(predq::Monitor& mon, Audit& audit) {
  for (const predq::QPoint& p : mon.drain_emitted()) {
    json rec{{"type", "q"},        {"n", p.n},
             {"q", p.q},           {"se", p.se},
             {"flags", p.flags},   {"final_look", p.final_look}};
    std::cout << rec.dump() << "\n";
    rec["cmd"] = "monitor";
    audit.write(std::move(rec));
  }
}

void emit_decision(const predq::Decision& d, Audit& audit) {
  json rec{{"type", "decision"},
           {"verdict", predq::verdict_name(d.verdict)},
           {"at_n", d.at_n},
           {"q", d.q_value},
           {"basis", predq::basis_name(d.basis)}};
  std::cout << rec.dump() << "\n";
  rec["cmd"] = "monitor";
  audit.write(std::move(rec));
}

void save_checkpoint(const predq::Monitor& mon, const std::string& path) {
  if (path.empty()) return;
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ConfigError("checkpoint: cannot open " + tmp);
    out << predq::checkpoint(mon.state()) << "\n";
  }
  std::filesystem::rename(tmp, path);
}

int cmd_monitor(const GlobalOpts& g, bool resume) {
  json cfg = load_config(g.config_path);
  uint64_t seed = resolve_seed(g, cfg);
  predq::EvalOptions opt;
  opt.b = g.b_flag ? *g.b_flag : cfg.value("b", uint64_t{10000});
  opt.conservative = g.conservative || cfg.value("conservative_stop", false);
  uint64_t cadence = g.cadence_flag ? *g.cadence_flag
                                    : cfg.value("cadence", uint64_t{1});

  std::optional<predq::Monitor> mon;
  uint64_t skip = 0;
  if (resume) {
    if (g.checkpoint_path.empty()) {
      throw ConfigError("replay: --checkpoint is required");
    }
    std::ifstream in(g.checkpoint_path);
    if (!in) throw DataError("replay: cannot open " + g.checkpoint_path);
    std::stringstream buf;
    buf << in.rdbuf();
    predq::MonitorState st = predq::restore(buf.str());
    predq::TestSpec spec = st.spec;
    // Snapshot families only checkpoint after their look walk, so a resumed
    // stream is never re-fed; every other family skips the records already
    // folded into the restored summary.
    bool snap = spec.family == Family::kLogRank ||
                spec.family == Family::kContinuousEvent;
    skip = snap ? 0 : st.n;
    mon.emplace(std::move(st), opt, cadence,
                futility_from_config(cfg, spec));
  } else {
    predq::TestSpec spec = spec_from_config(cfg);
    auto fut = futility_from_config(cfg, spec);
    mon.emplace(std::move(spec), seed, opt, cadence, std::move(fut));
  }
  Family family = mon->state().spec.family;

  Audit audit(g.audit_path);
  std::ifstream file_in;
  bool use_stdin = g.data_path.empty() || g.data_path == "-";
  if (!use_stdin) {
    file_in.open(g.data_path);
    if (!file_in) throw DataError("data: cannot open " + g.data_path);
  }
  LineReader reader{use_stdin ? std::cin : file_in};

  bool time_indexed = predq::is_time_indexed(family);
  bool snapshot = family == Family::kLogRank ||
                  family == Family::kContinuousEvent;
  uint64_t fed = 0;
  std::string line;
  // A resumed run still walks the skip region when the restored state is
  // terminal, so a stream shorter than the checkpoint is caught below.
  while ((mon->status() == predq::Status::kRunning || fed < skip) &&
         reader.next(line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.empty()) {
      if (!time_indexed && fed >= skip &&
          mon->status() == predq::Status::kRunning) {
        mon->evaluate_now();
        emit_points(*mon, audit);
        save_checkpoint(*mon, g.checkpoint_path);
      }
      continue;
    }
    if (is_header_line(line)) continue;
    ++fed;
    if (fed <= skip) continue;  // replay: records already in the summary
    feed_line(*mon, family, line, reader.line_no);
    if (!snapshot) {
      emit_points(*mon, audit);
      save_checkpoint(*mon, g.checkpoint_path);
    }
  }
  if (resume && !snapshot && fed < skip) {
    throw DataError("replay: data stream shorter than checkpointed n");
  }
  if (snapshot && mon->status() == predq::Status::kRunning) {
    mon->run_time_looks();
    emit_points(*mon, audit);
    save_checkpoint(*mon, g.checkpoint_path);
  }
  emit_decision(mon->decision(), audit);
  save_checkpoint(*mon, g.checkpoint_path);
  return 0;
}

// ---------------------------------------------------------------------------
// simulate

int cmd_simulate(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  if (!cfg.contains("simulate")) {
    throw ConfigError("config: missing simulate section");
  }
  const json& s = cfg["simulate"];
  std::string kind = s.value("kind", std::string("replicates"));
  uint64_t seed = resolve_seed(g, cfg);
  unsigned threads = resolve_threads(g, cfg);
  double alpha = s.value("alpha", 0.05);
  double gamma = s.value("gamma", 0.95);
  double power = s.value("power", 0.90);
  uint64_t replicates = s.value("replicates", uint64_t{10000});
  Audit audit(g.audit_path);

  auto theta_of = [&](const json& v, uint64_t n_fixed) {
    if (v.is_string() && v.get<std::string>() == "design") {
      return predq::effect_for_power(n_fixed, alpha, power);
    }
    return v.get<double>();
  };

  if (kind == "replicates" || kind == "stopping_cdf") {
    uint64_t n_fixed = s.at("n_fixed").get<uint64_t>();
    predq::Scenario sc;
    sc.design = predq::make_design(n_fixed, alpha, gamma, power);
    sc.theta = theta_of(s.value("theta", json(0.0)), n_fixed);
    sc.replicates = replicates;
    sc.seed = seed;
    sc.threads = threads;
    predq::OperatingCharacteristics oc = predq::run_replicates(sc);
    json summary{
        {"n_fixed", n_fixed},
        {"n_inflated", sc.design.n_inflated},
        {"theta", sc.theta},
        {"reject_predictive", oc.reject_predictive.rate},
        {"reject_predictive_se", oc.reject_predictive.se},
        {"reject_fixed", oc.reject_fixed.rate},
        {"reject_fixed_se", oc.reject_fixed.se},
        {"reject_eprocess", oc.reject_eprocess.rate},
        {"reject_eprocess_se", oc.reject_eprocess.se},
        {"stop_mean", oc.stop_predictive.mean},
        {"stop_mean_se", oc.stop_predictive.se_mean},
        {"stop_median", oc.stop_predictive.median},
        {"stop_q25", oc.stop_predictive.q25},
        {"stop_q75", oc.stop_predictive.q75}};
    std::cout << summary.dump(2) << "\n";
    audit.write(json{{"cmd", "simulate"}, {"event", kind}, {"oc", summary}});
    if (kind == "stopping_cdf") {
      std::vector<std::vector<double>> rows;
      for (const auto& p : predq::stopping_cdf(oc)) {
        rows.push_back({static_cast<double>(p.tau), p.cdf});
      }
      write_csv(s.value("out", std::string("fig3_stopping_cdf.csv")),
                "tau,cdf", rows);
    } else if (s.contains("out")) {
      write_csv(s.at("out").get<std::string>(),
                "n_fixed,n_inflated,theta,reject_predictive,se_predictive,"
                "reject_fixed,se_fixed,reject_eprocess,se_eprocess,"
                "stop_mean,stop_se,stop_median,stop_q25,stop_q75",
                {{static_cast<double>(n_fixed),
                  static_cast<double>(sc.design.n_inflated), sc.theta,
                  oc.reject_predictive.rate, oc.reject_predictive.se,
                  oc.reject_fixed.rate, oc.reject_fixed.se,
                  oc.reject_eprocess.rate, oc.reject_eprocess.se,
                  oc.stop_predictive.mean, oc.stop_predictive.se_mean,
                  oc.stop_predictive.median, oc.stop_predictive.q25,
                  oc.stop_predictive.q75}});
    }
    return 0;
  }

  if (kind == "power_curve") {
    uint64_t n_fixed = s.at("n_fixed").get<uint64_t>();
    predq::Scenario sc;
    sc.design = predq::make_design(n_fixed, alpha, gamma, power);
    sc.replicates = replicates;
    sc.seed = seed;
    sc.threads = threads;
    std::vector<double> grid;
    for (const json& v : s.at("theta_grid")) grid.push_back(theta_of(v, n_fixed));
    std::vector<std::vector<double>> rows;
    for (const auto& p : predq::power_curve(sc, grid)) {
      rows.push_back({p.theta, p.predictive.rate, p.predictive.se,
                      p.fixed.rate, p.fixed.se, p.eprocess.rate,
                      p.eprocess.se});
    }
    write_csv(s.value("out", std::string("fig4_power.csv")),
              "theta,predictive,se_predictive,fixed,se_fixed,eprocess,"
              "se_eprocess",
              rows);
    audit.write(json{{"cmd", "simulate"}, {"event", kind}, {"rows", rows.size()}});
    std::cout << "wrote " << rows.size() << " power rows\n";
    return 0;
  }

  if (kind == "gamma_tradeoff") {
    uint64_t n_fixed = s.at("n_fixed").get<uint64_t>();
    std::vector<double> grid = s.at("gamma_grid").get<std::vector<double>>();
    auto table = predq::gamma_tradeoff(n_fixed, alpha, power, grid, replicates,
                                       seed, threads);
    std::vector<std::vector<double>> rows;
    for (const auto& r : table) {
      rows.push_back({r.gamma, static_cast<double>(r.n_inflated), r.stop.mean,
                      r.stop.median, r.stop.q25, r.stop.q75});
    }
    write_csv(s.value("out", std::string("gamma_tradeoff.csv")),
              "gamma,n_inflated,stop_mean,stop_median,stop_q25,stop_q75",
              rows);
    audit.write(json{{"cmd", "simulate"}, {"event", kind}, {"rows", rows.size()}});
    std::cout << "wrote " << rows.size() << " tradeoff rows\n";
    return 0;
  }

  if (kind == "table_s1") {
    std::vector<uint64_t> n_grid =
        s.value("n_grid", std::vector<uint64_t>{10, 20, 50, 100, 500, 1000});
    std::vector<std::vector<double>> rows;
    for (uint64_t n_fixed : n_grid) {
      predq::Scenario sc;
      sc.design = predq::make_design(n_fixed, alpha, gamma, power);
      sc.theta = predq::effect_for_power(sc.design.n_inflated,
                                         alpha * gamma, power);
      sc.replicates = replicates;
      sc.seed = seed;
      sc.threads = threads;
      predq::OperatingCharacteristics oc = predq::run_replicates(sc);
      rows.push_back({static_cast<double>(n_fixed),
                      static_cast<double>(sc.design.n_inflated),
                      oc.stop_predictive.mean, oc.stop_predictive.median,
                      oc.stop_predictive.q25, oc.stop_predictive.q75});
    }
    write_csv(s.value("out", std::string("table_s1.csv")),
              "n_fixed,n_inflated,stop_mean,stop_median,stop_q25,stop_q75",
              rows);
    audit.write(json{{"cmd", "simulate"}, {"event", kind}, {"rows", rows.size()}});
    std::cout << "wrote " << rows.size() << " table rows\n";
    return 0;
  }

  throw ConfigError("simulate: unknown kind " + kind);
}

// ---------------------------------------------------------------------------
// ci

int cmd_ci(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  predq::TestSpec spec = spec_from_config(cfg);
  const json& c = cfg.value("ci", json::object());
  std::string mode = c.value("mode", std::string("one_sided"));
  std::string out_path = c.value("out", std::string("ci.csv"));
  Audit audit(g.audit_path);

  std::ifstream file_in;
  bool use_stdin = g.data_path.empty() || g.data_path == "-";
  if (!use_stdin) {
    file_in.open(g.data_path);
    if (!file_in) throw DataError("data: cannot open " + g.data_path);
  }
  LineReader reader{use_stdin ? std::cin : file_in};

  std::vector<double> xs;
  std::string line;
  while (reader.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    xs.push_back(parse_num(line, reader.line_no));
  }
  if (xs.empty()) throw DataError("ci: no observations");
  if (xs.size() > spec.n_max) {
    throw DataError("ci: more observations than n_max");
  }

  std::vector<uint64_t> looks;
  if (c.contains("looks")) {
    looks = c.at("looks").get<std::vector<uint64_t>>();
  } else {
    uint64_t step = mode == "df_band"
                        ? std::max<uint64_t>(1, spec.n_max / 10)
                        : 1;
    for (uint64_t n = step; n <= xs.size(); n += step) looks.push_back(n);
    if (looks.empty() || looks.back() != xs.size()) {
      looks.push_back(xs.size());
    }
  }

  std::vector<std::vector<double>> rows;
  if (mode == "one_sided") {
    double s_n = 0.0;
    uint64_t consumed = 0;
    for (uint64_t n : looks) {
      if (n > xs.size()) break;
      while (consumed < n) s_n += xs[consumed++];
      rows.push_back({static_cast<double>(n),
                      predq::ci_one_sided_mean(s_n, n, spec.n_max, spec.alpha,
                                               spec.gamma)});
    }
    write_csv(out_path, "n,lower", rows);
  } else if (mode == "two_sided") {
    double s_n = 0.0;
    uint64_t consumed = 0;
    for (uint64_t n : looks) {
      if (n > xs.size()) break;
      while (consumed < n) s_n += xs[consumed++];
      auto iv = predq::ci_two_sided_mean(s_n / static_cast<double>(n), n,
                                         spec.n_max, spec.alpha, spec.gamma);
      rows.push_back({static_cast<double>(n), iv.lower, iv.upper});
    }
    write_csv(out_path, "n,lower,upper", rows);
  } else if (mode == "df_band") {
    predq::KsNullTable table(resolve_seed(g, cfg),
                             c.value("g_draws", uint64_t{100000}));
    for (uint64_t n : looks) {
      if (n > xs.size()) break;
      rows.push_back({static_cast<double>(n),
                      predq::ecdf_band_halfwidth(n, spec.n_max, spec.alpha,
                                                 spec.gamma, table)});
    }
    write_csv(out_path, "n,halfwidth", rows);
  } else {
    throw ConfigError("ci: unknown mode " + mode);
  }
  audit.write(json{{"cmd", "ci"}, {"event", "emitted"}, {"mode", mode},
                   {"rows", rows.size()}});
  std::cout << "wrote " << rows.size() << " interval rows\n";
  return 0;
}

// ---------------------------------------------------------------------------
// futility

int cmd_futility(const GlobalOpts& g) {
  json cfg = load_config(g.config_path);
  predq::TestSpec spec = spec_from_config(cfg);
  if (spec.family != Family::kGaussOne) {
    throw ConfigError("futility: closed-form report needs family gauss_one");
  }
  auto fut = futility_from_config(cfg, spec);
  if (!fut) throw ConfigError("config: missing futility section");
  Audit audit(g.audit_path);

  std::ifstream file_in;
  bool use_stdin = g.data_path.empty() || g.data_path == "-";
  if (!use_stdin) {
    file_in.open(g.data_path);
    if (!file_in) throw DataError("data: cannot open " + g.data_path);
  }
  LineReader reader{use_stdin ? std::cin : file_in};

  std::cout << "q0_star = " << fmt(fut->q0_star)
            << "  budget = " << fmt(fut->error_budget()) << "\n";
  double t_n = 0.0;
  uint64_t n = 0;
  std::string line;
  std::vector<std::vector<double>> rows;
  std::string verdict = "continue";
  while (reader.next(line)) {
    if (line.empty() || line[0] == '#') continue;
    t_n += parse_num(line, reader.line_no);
    ++n;
    if (n >= spec.n_max) break;
    double q_n = predq::q_one_sided(t_n, n, spec.n_max, spec.alpha_tilde);
    bool needs = predq::screen_with_q(q_n, fut->gamma_f);
    double q_star =
        needs ? predq::q_star_gaussian(t_n, n, spec.n_max, spec.alpha_tilde,
                                       fut->theta_star)
              : 0.0;
    rows.push_back({static_cast<double>(n), q_n,
                    needs ? 1.0 : 0.0, q_star});
    if (needs && predq::futility_decide(q_star, fut->gamma_f) ==
                     predq::FutilityVerdict::kStopFutile) {
      verdict = "stop_futile";
      std::cout << "stop_futile at n = " << n << " (q_star = " << fmt(q_star)
                << ")\n";
      break;
    }
  }
  if (verdict != "stop_futile") std::cout << "no futility stop\n";
  write_csv(cfg.value("futility", json::object())
                .value("out", std::string("futility.csv")),
            "n,q,needs_q_star,q_star", rows);
  audit.write(json{{"cmd", "futility"},
                   {"event", "report"},
                   {"verdict", verdict},
                   {"rows", rows.size()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anytime-valid sequential testing via predictive rejection "
               "probabilities"};
  app.require_subcommand(1);
  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--data", g.data_path, "data file ('-' for stdin)");
  app.add_option("--checkpoint", g.checkpoint_path, "checkpoint file");
  app.add_option("--audit", g.audit_path, "audit JSONL path");
  uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "RNG seed override");
  unsigned threads_val = 0;
  auto* threads_opt =
      app.add_option("--threads", threads_val, "worker thread override");
  uint64_t cadence_val = 1;
  auto* cadence_opt =
      app.add_option("--cadence", cadence_val, "evaluate every k observations");
  uint64_t b_val = 0;
  auto* b_opt = app.add_option("--b", b_val, "MC completions per evaluation");
  app.add_flag("--conservative-stop", g.conservative,
               "require q - 2se >= gamma at interim looks");

  auto* plan = app.add_subcommand("plan", "design report: alpha~, N', bounds");
  auto* calibrate =
      app.add_subcommand("calibrate", "simulate a critical value");
  auto* monitor =
      app.add_subcommand("monitor", "sequential monitor over a data stream");
  auto* simulate =
      app.add_subcommand("simulate", "operating-characteristic tables");
  auto* ci = app.add_subcommand("ci", "confidence-sequence emission");
  auto* futility = app.add_subcommand("futility", "futility (Q*) report");
  auto* replay =
      app.add_subcommand("replay", "resume a monitor from a checkpoint");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (seed_opt->count()) g.seed_flag = seed_val;
    if (threads_opt->count()) g.threads_flag = threads_val;
    if (cadence_opt->count()) g.cadence_flag = cadence_val;
    if (b_opt->count()) g.b_flag = b_val;
    if (plan->parsed()) return cmd_plan(g);
    if (calibrate->parsed()) return cmd_calibrate(g);
    if (monitor->parsed()) return cmd_monitor(g, /*resume=*/false);
    if (replay->parsed()) return cmd_monitor(g, /*resume=*/true);
    if (simulate->parsed()) return cmd_simulate(g);
    if (ci->parsed()) return cmd_ci(g);
    if (futility->parsed()) return cmd_futility(g);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  }
}
