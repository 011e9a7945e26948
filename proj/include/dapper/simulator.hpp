#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dapper/actions.hpp"
#include "dapper/config.hpp"
#include "dapper/geometry.hpp"
#include "dapper/ground_truth.hpp"

namespace dapper {

// "t_ns" with picosecond precision, e.g. 1234.500.
inline std::string format_ns(Time t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(t / kPsPerNs),
                static_cast<long long>(t % kPsPerNs));
  return buf;
}

// Command log lines: "t_ns rank bankgroup bank row KIND [duration_ns]".
// KIND is ACT, REF (row = first row of the refreshed chunk) or BLK
// (a bank blocked from t_ns for duration_ns by a mitigation).
class CommandLog {
 public:
  explicit CommandLog(std::ostream& os) : os_(os) {}
  void act(Time t, const RowAddress& a) { line(t, a.rank, a.bankgroup, a.bank, a.row, "ACT"); }
  void ref(Time t, std::uint32_t rank, std::uint32_t first_row) { line(t, rank, 0, 0, first_row, "REF"); }
  void block(Time t, std::uint32_t rank, std::uint32_t bg, std::uint32_t bank, Time dur) {
    os_ << format_ns(t) << ' ' << rank << ' ' << bg << ' ' << bank << " 0 BLK " << format_ns(dur) << '\n';
  }

 private:
  void line(Time t, std::uint32_t r, std::uint32_t bg, std::uint32_t b, std::uint32_t row, const char* k) {
    os_ << format_ns(t) << ' ' << r << ' ' << bg << ' ' << b << ' ' << row << ' ' << k << '\n';
  }
  std::ostream& os_;
};

struct ActResult {
  bool issued = false;
  Time time = 0;
  // The abstracted timing side channel: this ACT caused a refresh.
  bool mitigated = false;
};

struct SimReport {
  std::string tracker;
  std::string workload;
  std::uint32_t n_rh = 0;
  std::uint32_t n_m = 0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  Time t_rrd_s = 0;

  Time makespan = 0;  // issue time of the last ACT
  std::uint64_t activations = 0;
  std::array<std::uint64_t, kActionKinds> actions{};
  std::uint64_t victim_rows_refreshed = 0;
  std::uint64_t full_resets = 0;
  std::vector<Time> blocked;  // mitigation blocking per channel bank
  std::uint64_t refs = 0;
  std::uint64_t windows = 0;
  std::uint32_t max_hammer = 0;
  std::uint32_t max_cumulative = 0;
  std::uint64_t violations = 0;
  bool security_violation = false;
  std::vector<Violation> violation_log;
  StatMap stats;

  std::uint64_t count(ActionKind k) const { return actions[std::size_t(k)]; }
  Time blocked_total() const {
    Time s = 0;
    for (Time b : blocked) s += b;
    return s;
  }
};

// Command-level engine for one channel. Activations are issued in request
// order at the earliest time allowed by tRC, tRRD_S, refresh and
// mitigation blocking.
template <Tracker T>
class Engine {
 public:
  Engine(const ExperimentConfig& c, T& tracker, std::ostream* log = nullptr)
      : cfg_(c),
        geo_(c.geometry),
        tm_(c.timing),
        tracker_(tracker),
        gt_(c.geometry, c.n_rh, c.timing.blast_radius, c.hammer_model),
        rpr_(rows_per_ref(c.geometry, c.timing)),
        reset_dur_(full_reset_duration(c.timing)) {
    c.validate();
    if (log) log_.emplace(*log);
    bank_ready_.assign(geo_.total_banks(), 0);
    rank_ready_.assign(geo_.ranks, 0);
    drfm_ready_.assign(geo_.ranks, 0);
    blocked_.assign(geo_.total_banks(), 0);
    next_window_ = tm_.t_refw;
    next_ref_ = cfg_.auto_refresh ? tm_.t_refi : kNever;
  }

  // Issues one ACT no earlier than `not_before`. Nothing is issued when the
  // earliest legal time is at or beyond `deadline`.
  ActResult activate(const RowAddress& a, Time not_before = 0, Time deadline = kNever) {
    check_bounds(a, geo_);
    std::uint32_t gb = global_bank(a, geo_);
    Time t = earliest(gb, a.rank, not_before);
    while (std::min(next_window_, next_ref_) <= t) {
      step_event();
      t = earliest(gb, a.rank, not_before);
    }
    if (t >= deadline) return {};

    cursor_ = cursor_last_act_ = t;
    bank_ready_[gb] = t + tm_.t_rc;
    rank_ready_[a.rank] = t + tm_.t_rrd_s;
    ++acts_;
    if (log_) log_->act(t, a);
    gt_.on_activate(a, t);

    actions_.clear();
    tracker_.activate(a, t, actions_);
    bool refreshed = false;
    for (const MitigationAction& m : actions_) refreshed |= apply(m, t);
    return {true, t, refreshed};
  }

  // Lets time pass with no activation (the issue cursor moves to `t`).
  void idle_until(Time t) {
    while (std::min(next_window_, next_ref_) <= t) step_event();
    cursor_ = std::max(cursor_, t);
  }

  Time now() const { return cursor_; }
  std::uint64_t activations() const { return acts_; }
  const GroundTruth& ground_truth() const { return gt_; }
  T& tracker() { return tracker_; }
  Time bank_ready(std::uint32_t gbank) const { return bank_ready_[gbank]; }

  SimReport report() const {
    SimReport r;
    r.tracker = std::string(tracker_.name());
    r.n_rh = cfg_.n_rh;
    r.n_m = effective_n_m(cfg_);
    r.seed = cfg_.seed;
    r.config_hash = config_hash(cfg_);
    r.t_rrd_s = tm_.t_rrd_s;
    r.makespan = acts_ ? cursor_last_act_ : 0;
    r.activations = acts_;
    r.actions = counts_;
    r.victim_rows_refreshed = victim_rows_;
    r.full_resets = counts_[std::size_t(ActionKind::RankReset)] + counts_[std::size_t(ActionKind::ChannelReset)];
    r.blocked = blocked_;
    r.refs = refs_;
    r.windows = window_;
    r.max_hammer = gt_.max_hammer();
    r.max_cumulative = gt_.max_cumulative();
    r.violations = gt_.violations();
    r.security_violation = gt_.violations() > 0;
    r.violation_log = gt_.violation_log();
    tracker_.collect_stats(r.stats);
    return r;
  }

 private:
  Time earliest(std::uint32_t gb, std::uint32_t rank, Time not_before) const {
    return std::max({cursor_, not_before, bank_ready_[gb], rank_ready_[rank]});
  }

  void step_event() {
    if (next_ref_ <= next_window_) {
      Time tr = next_ref_;
      for (std::uint32_t r = 0; r < geo_.ranks; ++r) {
        for (std::uint32_t b = 0; b < geo_.banks_per_rank(); ++b) {
          Time& ready = bank_ready_[r * geo_.banks_per_rank() + b];
          ready = std::max(ready, tr + tm_.t_rfc);
        }
        gt_.refresh_chunk(r, ref_index_ * rpr_, rpr_);
        if (log_) log_->ref(tr, r, ref_index_ * rpr_);
      }
      ++refs_;
      ++ref_index_;
      next_ref_ = ref_index_ < tm_.refs_per_window ? tr + tm_.t_refi : kNever;
      return;
    }
    Time tw = next_window_;
    ++window_;
    next_window_ += tm_.t_refw;
    ref_index_ = 0;
    if (cfg_.auto_refresh) next_ref_ = tw + tm_.t_refi;
    tracker_.on_window(window_, tw);
  }

  void block_bank(std::uint32_t gb, Time now, Time dur) {
    Time start = std::max(bank_ready_[gb], now);
    bank_ready_[gb] = start + dur;
    blocked_[gb] += dur;
    if (log_) {
      RowAddress a = bank_row(gb, 0, geo_);
      log_->block(start, a.rank, a.bankgroup, a.bank, dur);
    }
  }

  // Blocks the bank with the same number in every bank group of the rank.
  void block_same_bank(const RowAddress& a, Time now, Time dur, bool rate_limited) {
    if (rate_limited) {
      now = std::max(now, drfm_ready_[a.rank]);
      drfm_ready_[a.rank] = now + 2 * tm_.t_refi;
    }
    for (std::uint32_t bg = 0; bg < geo_.bankgroups; ++bg)
      block_bank(a.rank * geo_.banks_per_rank() + bg * geo_.banks_per_group + a.bank, now, dur);
  }

  // Returns true when the action refreshed rows.
  bool apply(const MitigationAction& m, Time now) {
    ActionKind kind = m.kind;
    if (kind == ActionKind::VictimRefresh && cfg_.mitigation == MitigationCommand::DrfmSb)
      kind = ActionKind::DrfmSb;
    ++counts_[std::size_t(kind)];
    const RowAddress& a = m.target;
    switch (kind) {
      case ActionKind::VictimRefresh:
        gt_.refresh_victims(a, tm_.blast_radius);
        victim_rows_ += 2 * tm_.blast_radius;
        block_bank(global_bank(a, geo_), now, Time(2 * tm_.blast_radius) * tm_.vrr_per_victim);
        return true;
      case ActionKind::DrfmSb:
        gt_.refresh_victims(a, std::max<std::uint32_t>(2, tm_.blast_radius));
        victim_rows_ += 2 * std::max<std::uint32_t>(2, tm_.blast_radius);
        block_same_bank(a, now, tm_.drfm_sb, cfg_.drfm_rate_limit);
        return true;
      case ActionKind::RfmSb:
        block_same_bank(a, now, tm_.rfm_sb, false);
        return false;
      case ActionKind::RankReset:
        gt_.refresh_rank(a.rank);
        for (std::uint32_t b = 0; b < geo_.banks_per_rank(); ++b)
          block_bank(a.rank * geo_.banks_per_rank() + b, now, reset_dur_);
        return true;
      case ActionKind::ChannelReset:
        for (std::uint32_t r = 0; r < geo_.ranks; ++r) gt_.refresh_rank(r);
        for (std::uint32_t b = 0; b < geo_.total_banks(); ++b) block_bank(b, now, reset_dur_);
        return true;
      case ActionKind::CounterRead:
      case ActionKind::CounterWrite:
        block_bank(global_bank(a, geo_), now, tm_.counter_access);
        return false;
    }
    throw std::logic_error("unknown mitigation kind");
  }

  ExperimentConfig cfg_;
  Geometry geo_;
  TimingParams tm_;
  T& tracker_;
  GroundTruth gt_;
  std::optional<CommandLog> log_;
  std::uint32_t rpr_;
  Time reset_dur_;

  std::vector<Time> bank_ready_, rank_ready_, drfm_ready_, blocked_;
  Time cursor_ = 0;
  Time cursor_last_act_ = 0;
  Time next_window_ = 0, next_ref_ = 0;
  std::uint32_t ref_index_ = 0;
  std::uint64_t window_ = 0, refs_ = 0, acts_ = 0, victim_rows_ = 0;
  std::array<std::uint64_t, kActionKinds> counts_{};
  ActionList actions_;
};

}  // namespace dapper
