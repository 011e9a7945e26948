#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "dapper/analysis.hpp"
#include "dapper/experiment.hpp"
#include "dapper/simulator.hpp"

namespace dapper {

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols = {
      "config_hash",     "tracker",           "workload",       "n_rh",
      "n_m",             "seed",              "t_rrd_s_ns",     "activations",
      "makespan_ns",     "slowdown",          "mit_victim_refresh", "mit_drfm_sb",
      "mit_rfm_sb",      "mit_rank_reset",    "mit_channel_reset", "counter_reads",
      "counter_writes",  "victim_rows_refreshed", "full_resets", "blocked_ns_total",
      "max_hammer",      "violations",        "security_violation", "error",
  };
  return cols;
}

inline std::string csv_header() {
  std::string h;
  for (auto& c : csv_columns()) h += (h.empty() ? "" : ",") + c;
  return h;
}

namespace detail {
inline std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}
}  // namespace detail

inline std::string csv_row(const RunResult& r) {
  const SimReport& s = r.report;
  std::vector<std::string> f;
  f.push_back(hex64(config_hash(r.config)));
  f.push_back(s.tracker.empty() ? std::string(to_string(r.config.tracker)) : s.tracker);
  f.push_back(s.workload.empty() ? std::string(to_string(r.config.wp.kind)) : s.workload);
  f.push_back(std::to_string(r.config.n_rh));
  f.push_back(std::to_string(s.n_m));
  f.push_back(std::to_string(r.config.seed));
  f.push_back(format_ns(r.config.timing.t_rrd_s));
  f.push_back(std::to_string(s.activations));
  f.push_back(format_ns(s.makespan));
  f.push_back(r.has_baseline && r.error.empty() ? detail::fixed6(r.slowdown) : "");
  for (std::size_t k = 0; k < 5; ++k) f.push_back(std::to_string(s.actions[k]));
  f.push_back(std::to_string(s.count(ActionKind::CounterRead)));
  f.push_back(std::to_string(s.count(ActionKind::CounterWrite)));
  f.push_back(std::to_string(s.victim_rows_refreshed));
  f.push_back(std::to_string(s.full_resets));
  f.push_back(format_ns(s.blocked_total()));
  f.push_back(std::to_string(s.max_hammer));
  f.push_back(std::to_string(s.violations));
  f.push_back(s.security_violation ? "1" : "0");
  f.push_back(detail::csv_field(r.error));
  std::string line;
  for (auto& x : f) line += (line.empty() ? "" : ",") + x;
  return line;
}

inline void write_csv(const std::vector<RunResult>& rs, std::ostream& os) {
  os << csv_header() << '\n';
  for (auto& r : rs) os << csv_row(r) << '\n';
}

inline void write_text(const RunResult& r, std::ostream& os) {
  const SimReport& s = r.report;
  os << "config_hash        " << hex64(config_hash(r.config)) << '\n'
     << "tracker            " << s.tracker << '\n'
     << "workload           " << s.workload << '\n'
     << "n_rh / n_m         " << r.config.n_rh << " / " << s.n_m << '\n'
     << "seed               " << r.config.seed << '\n'
     << "t_rrd_s_ns         " << format_ns(r.config.timing.t_rrd_s) << '\n';
  if (!r.error.empty()) {
    os << "error              " << r.error << '\n';
    return;
  }
  os << "activations        " << s.activations << '\n'
     << "makespan_ns        " << format_ns(s.makespan) << '\n';
  if (r.has_baseline)
    os << "baseline_ns        " << format_ns(r.baseline.makespan) << '\n'
       << "slowdown           " << detail::fixed6(r.slowdown) << '\n';
  for (std::size_t k = 0; k < kActionKinds; ++k)
    os << "  " << kActionNames[k] << std::string(17 - std::string(kActionNames[k]).size(), ' ') << s.actions[k]
       << '\n';
  os << "victim_rows        " << s.victim_rows_refreshed << '\n'
     << "full_resets        " << s.full_resets << '\n'
     << "blocked_ns_total   " << format_ns(s.blocked_total()) << '\n'
     << "refs / windows     " << s.refs << " / " << s.windows << '\n'
     << "max_hammer         " << s.max_hammer << '\n'
     << "violations         " << s.violations << (s.security_violation ? "  SECURITY VIOLATION" : "") << '\n';
  if (!s.violation_log.empty()) {
    const Violation& v = s.violation_log.front();
    os << "  first at " << format_ns(v.time) << " ns, victim " << v.victim.rank << '/' << v.victim.bankgroup << '/'
       << v.victim.bank << '/' << v.victim.row << '\n';
  }
  for (auto& [k, v] : s.stats) {
    std::ostringstream ss;
    ss << v;
    os << "  " << k << std::string(k.size() < 28 ? 28 - k.size() : 1, ' ') << ss.str() << '\n';
  }
}

inline void write_vuln_table(const std::vector<VulnRow>& rows, Time t_rrd_s, std::ostream& os) {
  char buf[200];
  std::snprintf(buf, sizeof buf, "t_rrd_s = %s ns\n", format_ns(t_rrd_s).c_str());
  os << buf;
  std::snprintf(buf, sizeof buf, "%-10s %10s %8s %12s %14s %12s %14s\n", "t_reset", "t_left_ns", "act_max", "at_iter",
                "at_time_us", "ref_iter", "ref_time_us");
  os << buf;
  for (auto& r : rows) {
    std::string pi = r.ref_at_iter > 0 ? detail::fixed6(r.ref_at_iter) : "-";
    std::string pt = r.ref_at_time_ns > 0 ? detail::fixed6(r.ref_at_time_ns / 1000) : "-";
    std::snprintf(buf, sizeof buf, "%-10s %10s %8llu %12.3f %14.3f %12s %14s\n",
                  (format_ns(r.t_reset / 1000) + "us").c_str(), format_ns(r.computed.t_left).c_str(),
                  static_cast<unsigned long long>(r.computed.act_max), r.computed.at_iter,
                  r.computed.at_time_ns / 1000, pi.c_str(), pt.c_str());
    os << buf;
  }
}

}  // namespace dapper
