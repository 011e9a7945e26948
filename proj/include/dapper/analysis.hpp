#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dapper/geometry.hpp"

namespace dapper {

struct AttackModelParams {
  Time t_reset = from_ns(32'000'000);
  Time t_rc = from_ns(48);
  Time t_rrd_s = from_ns(2.5);
  std::uint32_t n_m = 250;
  std::uint64_t n_rg = 8192;
  std::uint64_t trials = 0;
};

// Time left in a reset period after hammering a row to N_M - 1.
// Clamped at zero when the hammering alone does not fit.
inline Time t_left(const AttackModelParams& p) {
  Time used = p.t_rc * Time(p.n_m > 0 ? p.n_m - 1 : 0);
  return p.t_reset > used ? p.t_reset - used : 0;
}

inline std::uint64_t act_max(const AttackModelParams& p) {
  if (p.t_rrd_s <= 0) return 0;
  return std::uint64_t(t_left(p) / p.t_rrd_s);
}

struct CaptureSResult {
  Time t_left = 0;
  std::uint64_t act_max = 0;
  double p_s = 0;
  double at_iter = std::numeric_limits<double>::infinity();  // inf: attack never succeeds
  double at_time_ns = std::numeric_limits<double>::infinity();
};

inline CaptureSResult capture_success_s(const AttackModelParams& p) {
  CaptureSResult r;
  r.t_left = t_left(p);
  r.act_max = act_max(p);
  if (r.act_max == 0 || p.n_rg == 0) return r;
  if (p.n_rg == 1) r.p_s = 1.0;
  else r.p_s = -std::expm1(double(r.act_max) * std::log1p(-1.0 / double(p.n_rg)));
  r.at_iter = 1.0 / r.p_s;
  r.at_time_ns = to_ns(p.t_reset) * r.at_iter;
  return r;
}

struct CaptureHResult {
  double p_trial = 0;
  double p_s = 0;
};

// Per-trial probability (1 - (1 - 1/N)^2)^2 and the overall probability
// over T trials, in log space so tiny p does not vanish.
inline CaptureHResult capture_success_h(std::uint64_t n, std::uint64_t trials) {
  CaptureHResult r;
  if (n == 0) return r;
  double one_group = -std::expm1(2.0 * std::log1p(-1.0 / double(n)));
  r.p_trial = n == 1 ? 1.0 : one_group * one_group;
  if (trials == 0) return r;
  r.p_s = r.p_trial >= 1.0 ? 1.0 : -std::expm1(double(trials) * std::log1p(-r.p_trial));
  return r;
}

// Upper estimate of a group's bit-vector-filtered count under a streaming
// attack: every row of the rank is activated budget/rows times, and a group
// holds group_size/banks rows of each bank.
inline std::uint64_t streaming_bound(const Geometry& g, const TimingParams& t, std::uint32_t group_size) {
  if (group_size == 0 || t.t_rrd_s <= 0) return 0;
  std::uint64_t budget = std::uint64_t(t.t_refw / t.t_rrd_s);
  std::uint64_t per_row = budget / g.rows_per_rank();
  return per_row * (group_size / g.banks_per_rank());
}

struct StorageOverhead {
  std::uint64_t groups = 0;           // per table per rank
  std::uint64_t table_bytes = 0;      // both tables
  std::uint64_t bitvector_bytes = 0;  // Table-1 bank bits
  std::uint64_t per_rank = 0;
  std::uint64_t per_32gb = 0;
};

// Two one-byte counter tables plus one bank bit per Table-1 entry.
inline StorageOverhead storage_overhead(const Geometry& g, std::uint32_t group_size,
                                        std::uint32_t ranks_per_32gb = 2) {
  StorageOverhead s;
  if (group_size == 0) return s;
  s.groups = g.rows_per_rank() / group_size;
  s.table_bytes = 2 * s.groups;
  s.bitvector_bytes = s.groups * g.banks_per_rank() / 8;
  s.per_rank = s.table_bytes + s.bitvector_bytes;
  s.per_32gb = s.per_rank * ranks_per_32gb;
  return s;
}

struct VulnRow {
  Time t_reset = 0;
  CaptureSResult computed;
  double ref_at_iter = 0;  // 0 when there is no published value
  double ref_at_time_ns = 0;
};

// Published attack iterations / times for the three reset periods.
inline bool published_vuln(Time t_reset, double& at_iter, double& at_time_ns) {
  if (t_reset == from_us(36)) { at_iter = 1.8; at_time_ns = 64'000; return true; }
  if (t_reset == from_us(24)) { at_iter = 3.0; at_time_ns = 71'000; return true; }
  if (t_reset == from_us(12)) { at_iter = 630.6; at_time_ns = 7'600'000; return true; }
  return false;
}

inline std::vector<VulnRow> vulnerability_table(const std::vector<Time>& resets, AttackModelParams base) {
  std::vector<VulnRow> rows;
  for (Time tr : resets) {
    VulnRow r;
    r.t_reset = tr;
    base.t_reset = tr;
    r.computed = capture_success_s(base);
    published_vuln(tr, r.ref_at_iter, r.ref_at_time_ns);
    rows.push_back(r);
  }
  return rows;
}

// Worst ratio max(a/b, b/a) between computed and published AT_iter.
inline double vuln_worst_ratio(const std::vector<VulnRow>& rows) {
  double worst = 1.0;
  for (auto& r : rows) {
    if (r.ref_at_iter <= 0) continue;
    double a = r.computed.at_iter, b = r.ref_at_iter;
    if (!std::isfinite(a)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::max(a / b, b / a));
  }
  return worst;
}

struct TrrdFit {
  Time t_rrd_s = 0;
  double worst_ratio = std::numeric_limits<double>::infinity();
};

// Scans tRRD_S over [lo, hi] in `step` increments for the value whose
// table lies closest to the published one.
inline TrrdFit fit_t_rrd_s(const std::vector<Time>& resets, AttackModelParams base, Time lo, Time hi, Time step) {
  TrrdFit best;
  for (Time t = lo; t <= hi; t += step) {
    base.t_rrd_s = t;
    double w = vuln_worst_ratio(vulnerability_table(resets, base));
    if (w < best.worst_ratio) best = {t, w};
  }
  return best;
}

}  // namespace dapper
