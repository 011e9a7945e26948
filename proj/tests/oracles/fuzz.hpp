#pragma once
// Adversarial activation streams for the security property suite. The
// generator knows the tracker's key (the strongest attacker) and mixes
// single-row hammering, hot sets, group collisions, the bit-vector
// interleave, epoch-boundary straddles and noise.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "dapper/experiment.hpp"
#include "oracles/reference.hpp"

namespace oracle {

using namespace dapper;

inline ExperimentConfig fuzz_config(TrackerKind k, std::uint64_t seed, std::uint32_t n_m = 0) {
  ExperimentConfig c;
  apply_preset(c, "desk");
  c.geometry = Geometry{1, 2, 2, 4096};
  c.tracker = k;
  c.seed = seed;
  c.tp.n_m = n_m;
  static constexpr std::uint32_t sizes[] = {16, 64, 256};
  c.tp.group_size = sizes[seed % 3];
  return c;
}

class FuzzWorkload final : public Workload {
 public:
  FuzzWorkload(const ExperimentConfig& c) : c_(c), g_(c.geometry), rng_(make_rng(c.seed, Stream::Fuzz)) {
    h_ = c.tracker == TrackerKind::DapperH;
    t_reset_ = h_ ? c.timing.t_refw : effective_dapper_s_reset(c);
  }

  std::optional<Request> next(Time now) override {
    if (left_ == 0) plan(now);
    --left_;
    Request r{unflatten(0, rows_[i_ % rows_.size()], g_)};
    ++i_;
    if (start_) {
      r.not_before = start_;
      start_ = 0;
    }
    return r;
  }
  std::string name() const override { return "fuzz"; }

 private:
  std::uint64_t pick(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_); }

  RgcTable table(std::uint64_t id, Time now) const {
    RgcTable t(g_.row_bits(), c_.tp.group_size, c_.seed, id);
    t.reset(std::uint64_t(now / t_reset_));
    return t;
  }

  std::uint32_t bank(std::uint64_t x) const { return std::uint32_t(x / g_.rows_per_bank); }

  void plan(Time now) {
    rows_.clear();
    i_ = 0;
    left_ = 50 + pick(3000);
    std::uint64_t rpr = g_.rows_per_rank();
    std::uint64_t x = pick(rpr);
    switch (pick(6)) {
      case 0:  // one aggressor, or both neighbours of a victim
        rows_.push_back(x);
        if (pick(2) && x % g_.rows_per_bank >= 2) rows_.push_back(x - 2);
        break;
      case 1: {  // hot set
        std::uint64_t k = 2 + pick(15);
        for (std::uint64_t i = 0; i < k; ++i) rows_.push_back(pick(rpr));
        break;
      }
      case 2: {  // members of one group
        RgcTable t = table(h_ ? 1 + pick(2) : 0, now);
        std::vector<std::uint64_t> m;
        t.members(t.group_of(x), m);
        std::shuffle(m.begin(), m.end(), rng_);
        m.resize(std::min<std::size_t>(m.size(), 2 + pick(8)));
        rows_ = m;
        break;
      }
      case 3: {  // y, y, x, z: x and y share a Table-1 group in different banks, z keeps y's Table-2 group hot
        RgcTable t1 = table(h_ ? 1 : 0, now), t2 = table(h_ ? 2 : 0, now);
        std::vector<std::uint64_t> m1, m2;
        t1.members(t1.group_of(x), m1);
        std::uint64_t y = x;
        for (auto r : m1)
          if (bank(r) != bank(x)) y = r;
        t2.members(t2.group_of(y), m2);
        std::uint64_t z = m2[0] == y ? m2.back() : m2[0];
        rows_ = {y, y, x, z};
        break;
      }
      case 4: {  // straddle an epoch boundary with a short hot set
        Time boundary = (now / t_reset_ + 1) * t_reset_;
        Time lead = Time(pick(4000)) * c_.timing.t_rc;
        start_ = std::max(now, boundary - lead);
        rows_.push_back(x);
        if (pick(2)) rows_.push_back(pick(rpr));
        break;
      }
      default:  // noise
        for (int i = 0; i < 64; ++i) rows_.push_back(pick(rpr));
        break;
    }
  }

  ExperimentConfig c_;
  Geometry g_;
  std::mt19937_64 rng_;
  bool h_ = false;
  Time t_reset_ = 0;
  std::vector<std::uint64_t> rows_;
  std::uint64_t i_ = 0, left_ = 0;
  Time start_ = 0;
};

// Independent ground truth for single-rank runs: replays activations,
// the auto-refresh schedule (derived from timing alone) and the tracker's
// refresh actions into its own per-aggressor counters.
class ShadowCheck {
 public:
  ShadowCheck(const ExperimentConfig& c)
      : g_(c.geometry), tm_(c.timing), n_rh_(c.n_rh), sh_(c.geometry.rows_per_rank()) {
    rpr_ = std::uint32_t((g_.rows_per_bank + tm_.refs_per_window - 1) / tm_.refs_per_window);
  }

  void on_act(const RowAddress& a, Time now, const MitigationAction* first, const MitigationAction* last) {
    while (next_ref_time() <= now) refresh_next();
    std::uint64_t x = flat_of(a, g_);
    sh_.activate(x, g_.rows_per_bank);
    for (std::uint64_t v : {x - 1, x + 1}) {
      if (v >= g_.rows_per_rank() || v / g_.rows_per_bank != x / g_.rows_per_bank) continue;
      std::uint32_t h = sh_.hammer(v);
      max_ = std::max(max_, h);
      if (h == n_rh_) ++violations_;
    }
    for (auto* m = first; m != last; ++m) {
      if (m->kind == ActionKind::VictimRefresh) {
        std::uint64_t t = flat_of(m->target, g_);
        if (t % g_.rows_per_bank > 0) sh_.refresh_row(t - 1);
        if (t % g_.rows_per_bank + 1 < g_.rows_per_bank) sh_.refresh_row(t + 1);
      } else if (m->kind == ActionKind::RankReset || m->kind == ActionKind::ChannelReset) {
        for (std::uint64_t v = 0; v < g_.rows_per_rank(); ++v) sh_.refresh_row(v);
      }
    }
  }
  std::uint32_t max_hammer() const { return max_; }
  std::uint64_t violations() const { return violations_; }

 private:
  Time next_ref_time() const { return Time(window_) * tm_.t_refw + Time(ref_ + 1) * tm_.t_refi; }
  void refresh_next() {
    for (std::uint32_t b = 0; b < g_.banks_per_rank(); ++b)
      for (std::uint32_t i = 0; i < rpr_; ++i) {
        std::uint64_t row = std::uint64_t(ref_) * rpr_ + i;
        if (row < g_.rows_per_bank) sh_.refresh_row(std::uint64_t(b) * g_.rows_per_bank + row);
      }
    if (++ref_ == tm_.refs_per_window) {
      ref_ = 0;
      ++window_;
    }
  }

  Geometry g_;
  TimingParams tm_;
  std::uint32_t n_rh_, rpr_;
  ShadowCounters sh_;
  std::uint64_t window_ = 0;
  std::uint32_t ref_ = 0;
  std::uint32_t max_ = 0;
  std::uint64_t violations_ = 0;
};

// Forwards to the real tracker and feeds every issued ACT to the shadow.
class Checked {
 public:
  Checked(AnyTracker t, ShadowCheck& s) : t_(std::move(t)), s_(s) {}
  void activate(const RowAddress& a, Time now, ActionList& out) {
    std::size_t before = out.size();
    std::visit([&](auto& tr) { tr.activate(a, now, out); }, t_);
    s_.on_act(a, now, out.data() + before, out.data() + out.size());
  }
  void on_window(std::uint64_t w, Time now) {
    std::visit([&](auto& tr) { tr.on_window(w, now); }, t_);
  }
  std::string_view name() const {
    return std::visit([](const auto& tr) { return tr.name(); }, t_);
  }
  void collect_stats(StatMap& m) const {
    std::visit([&](const auto& tr) { tr.collect_stats(m); }, t_);
  }

 private:
  AnyTracker t_;
  ShadowCheck& s_;
};

struct FuzzOutcome {
  SimReport report;
  std::uint32_t shadow_max = 0;
  std::uint64_t shadow_violations = 0;
};

inline FuzzOutcome run_fuzz(const ExperimentConfig& c, std::uint64_t acts) {
  ShadowCheck shadow(c);
  Checked t(make_tracker(c), shadow);
  FuzzWorkload w(c);
  FuzzOutcome o;
  o.report = simulate(c, t, w, RunLimits{kNever, acts});
  o.shadow_max = shadow.max_hammer();
  o.shadow_violations = shadow.violations();
  return o;
}

}  // namespace oracle
