#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dapper/geometry.hpp"
#include "dapper/simulator.hpp"

namespace dapper {

struct AuditResult {
  bool ok = true;
  std::uint64_t acts = 0, refs = 0, blocks = 0;
  std::uint64_t windows_checked = 0;
  std::vector<std::string> errors;  // capped at kMaxErrors
  static constexpr std::size_t kMaxErrors = 32;

  void fail(std::string msg) {
    ok = false;
    if (errors.size() < kMaxErrors) errors.push_back(std::move(msg));
  }
};

struct AuditOptions {
  bool check_refresh = true;  // once-per-window REF completeness
};

namespace detail {

// "123.456" -> picoseconds, exactly.
inline bool parse_ps(const std::string& s, Time& out) {
  auto dot = s.find('.');
  std::string ip = s.substr(0, dot), fp = dot == std::string::npos ? "" : s.substr(dot + 1);
  if (ip.empty() || fp.size() > 3) return false;
  for (char c : ip + fp)
    if (c < '0' || c > '9') return false;
  while (fp.size() < 3) fp += '0';
  out = Time(std::stoll(ip)) * kPsPerNs + std::stoll(fp);
  return true;
}

struct Interval {
  Time start, end;
  std::size_t line;
};

// Intervals sorted by start, with a running max of ends so overlap
// queries stay logarithmic.
struct IntervalSet {
  std::vector<Interval> v;
  std::vector<Time> max_end;

  void finalize() {
    std::stable_sort(v.begin(), v.end(), [](const Interval& x, const Interval& y) { return x.start < y.start; });
    max_end.resize(v.size());
    Time m = 0;
    for (std::size_t i = 0; i < v.size(); ++i) max_end[i] = m = std::max(m, v[i].end);
  }
  const Interval* covering(Time t) const {
    auto it = std::upper_bound(v.begin(), v.end(), t, [](Time x, const Interval& i) { return x < i.start; });
    for (std::size_t k = std::size_t(it - v.begin()); k > 0 && max_end[k - 1] > t; --k)
      if (v[k - 1].end > t) return &v[k - 1];
    return nullptr;
  }
};

}  // namespace detail

// Replays a command log and checks the timing rules the engine promises.
inline AuditResult audit_log(std::istream& in, const Geometry& g, const TimingParams& tm, AuditOptions opt = {}) {
  AuditResult r;
  struct Act {
    Time t;
    std::uint32_t gbank, rank;
    std::size_t line;
  };
  std::vector<Act> acts;
  std::vector<detail::IntervalSet> blk(g.total_banks()), refw(g.ranks);
  std::vector<std::vector<std::pair<Time, std::uint32_t>>> refs(g.ranks);  // (time, first row)
  std::string line, kind;
  std::size_t n = 0;
  Time last = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string ts, ds;
    RowAddress a;
    if (!(ss >> ts >> a.rank >> a.bankgroup >> a.bank >> a.row >> kind)) {
      r.fail("line " + std::to_string(n) + ": malformed");
      continue;
    }
    Time t;
    if (!detail::parse_ps(ts, t)) {
      r.fail("line " + std::to_string(n) + ": bad time '" + ts + "'");
      continue;
    }
    try {
      check_bounds(a, g);
    } catch (const BoundsError& e) {
      r.fail("line " + std::to_string(n) + ": " + e.what());
      continue;
    }
    if (kind == "ACT") {
      if (t < last) r.fail("line " + std::to_string(n) + ": ACT out of time order");
      last = t;
      acts.push_back({t, global_bank(a, g), a.rank, n});
      ++r.acts;
    } else if (kind == "REF") {
      refw[a.rank].v.push_back({t, t + tm.t_rfc, n});
      refs[a.rank].push_back({t, a.row});
      ++r.refs;
    } else if (kind == "BLK") {
      Time d;
      if (!(ss >> ds) || !detail::parse_ps(ds, d)) {
        r.fail("line " + std::to_string(n) + ": BLK without duration");
        continue;
      }
      blk[global_bank(a, g)].v.push_back({t, t + d, n});
      ++r.blocks;
    } else {
      r.fail("line " + std::to_string(n) + ": unknown command '" + kind + "'");
    }
  }

  for (auto& v : blk) v.finalize();
  for (auto& v : refw) v.finalize();

  std::vector<const Act*> last_bank(g.total_banks(), nullptr), last_rank(g.ranks, nullptr);
  for (const Act& a : acts) {
    auto pair = [](const Act* x, const Act& y) {
      return " (lines " + std::to_string(x->line) + " and " + std::to_string(y.line) + ")";
    };
    if (const Act* p = last_bank[a.gbank]; p && a.t - p->t < tm.t_rc)
      r.fail("tRC violated in bank " + std::to_string(a.gbank) + pair(p, a));
    if (const Act* p = last_rank[a.rank]; p && a.t - p->t < tm.t_rrd_s)
      r.fail("tRRD_S violated in rank " + std::to_string(a.rank) + pair(p, a));
    if (auto* i = refw[a.rank].covering(a.t))
      r.fail("ACT during refresh at line " + std::to_string(a.line) + " (REF line " + std::to_string(i->line) + ")");
    if (auto* i = blk[a.gbank].covering(a.t))
      r.fail("ACT in blocked bank at line " + std::to_string(a.line) + " (BLK line " + std::to_string(i->line) + ")");
    last_bank[a.gbank] = &a;
    last_rank[a.rank] = &a;
  }

  if (opt.check_refresh && !acts.empty()) {
    // Only windows that end before the last ACT are complete.
    Time end = acts.back().t;
    std::uint32_t rpr = rows_per_ref(g, tm);
    for (std::uint32_t rank = 0; rank < g.ranks; ++rank) {
      std::map<std::uint64_t, std::vector<std::uint32_t>> per_window;
      for (auto& [t, first] : refs[rank]) per_window[std::uint64_t(t / tm.t_refw)].push_back(first);
      for (std::uint64_t w = 0; Time(w + 1) * tm.t_refw <= end; ++w) {
        auto& firsts = per_window[w];
        std::sort(firsts.begin(), firsts.end());
        bool good = firsts.size() == tm.refs_per_window;
        for (std::size_t k = 0; good && k < firsts.size(); ++k) good = firsts[k] == std::uint64_t(k) * rpr;
        if (good && std::uint64_t(tm.refs_per_window) * rpr < g.rows_per_bank) good = false;
        if (!good)
          r.fail("rank " + std::to_string(rank) + " window " + std::to_string(w) + ": " +
                 std::to_string(firsts.size()) + " REFs do not cover every row once");
        if (rank == 0) ++r.windows_checked;
      }
    }
  }
  return r;
}

inline AuditResult audit_log_file(const std::string& path, const Geometry& g, const TimingParams& tm,
                                  AuditOptions opt = {}) {
  std::ifstream in(path);
  if (!in) {
    AuditResult r;
    r.fail("cannot read '" + path + "'");
    return r;
  }
  return audit_log(in, g, tm, opt);
}

}  // namespace dapper
