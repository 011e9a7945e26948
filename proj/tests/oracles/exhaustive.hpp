#pragma once
// Depth-first enumeration of activation sequences. One state copy per
// depth; copy-assignment reuses buffers so the inner loop does not allocate.

#include <algorithm>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "dapper/baselines.hpp"
#include "dapper/dapper.hpp"
#include "oracles/reference.hpp"

namespace oracle {

using namespace dapper;

struct ExhaustiveResult {
  std::uint64_t sequences = 0;
  std::uint64_t divergences = 0;
  std::uint64_t bound_failures = 0;
  std::uint64_t mitigations = 0;
  std::uint32_t max_spill = 0;
  std::string first, first_bound;
};

namespace detail {

inline std::string show(const std::vector<int>& seq) {
  std::ostringstream os;
  os << "sequence [";
  for (std::size_t i = 0; i < seq.size(); ++i) os << (i ? " " : "") << seq[i];
  os << "]";
  return os.str();
}

inline std::vector<std::uint64_t> refreshed_flat(const ActionList& out, const Geometry& g) {
  std::vector<std::uint64_t> v;
  for (auto& m : out) v.push_back(flat_of(m.target, g));
  std::sort(v.begin(), v.end());
  return v;
}

// epoch_at > 0: the tracker epoch advances every `epoch_at` steps.
inline Time step_time(int depth) { return Time(depth) * 10; }
inline Time reset_for(int epoch_at) { return epoch_at > 0 ? Time(epoch_at) * 10 : Time(1) << 40; }

}  // namespace detail

// 16 rows in one bank, groups of 4, N_M = 4.
inline ExhaustiveResult exhaustive_dapper_s(int max_len, int epoch_at) {
  const Geometry g{1, 1, 1, 16};
  DapperParams p;
  p.geometry = g;
  p.n_m = 4;
  p.group_size = 4;
  p.seed = 11;
  p.t_reset = detail::reset_for(epoch_at);

  struct State {
    DapperS t;
    RefDapperS r;
    std::uint64_t epoch;
  };
  std::vector<State> st(max_len + 1, State{DapperS(p), RefDapperS(g, p.n_m, p.group_size, p.seed), 0});
  ExhaustiveResult res;
  std::vector<int> seq;
  ActionList out;

  auto rec = [&](auto&& self, int d) -> void {
    for (int sym = 0; sym < 16; ++sym) {
      State& s = st[d + 1];
      s = st[d];
      seq.push_back(sym);
      ++res.sequences;
      Time now = detail::step_time(d);
      std::uint64_t e = std::uint64_t(now / p.t_reset);
      if (e != s.epoch) {
        s.r.new_epoch(e);
        s.epoch = e;
      }
      RowAddress a = unflatten(0, std::uint64_t(sym), g);
      out.clear();
      s.t.activate(a, now, out);
      auto want = s.r.activate(a);
      bool ok = detail::refreshed_flat(out, g) == want;
      for (std::uint64_t x = 0; ok && x < 16; ++x) ok = s.t.counter(unflatten(0, x, g)) == s.r.counter_of(x);
      if (!want.empty()) ++res.mitigations;
      if (!ok) {
        if (!res.divergences++) res.first = detail::show(seq);
      } else if (d + 1 < max_len) {
        self(self, d + 1);
      }
      seq.pop_back();
    }
  };
  rec(rec, 0);
  return res;
}

// 2 banks x 8 rows, groups of 4. Besides step-by-step agreement, every row
// must satisfy: activations since its last refresh <= min(RGC1, RGC2) + 1.
inline ExhaustiveResult exhaustive_dapper_h(int max_len, std::uint32_t n_m, int epoch_at) {
  const Geometry g{1, 1, 2, 8};
  DapperParams p;
  p.geometry = g;
  p.n_m = n_m;
  p.group_size = 4;
  p.seed = 5;
  p.t_reset = detail::reset_for(epoch_at);

  struct State {
    DapperH t;
    RefDapperH r;
    ShadowCounters sh;
    std::uint64_t epoch;
  };
  std::vector<State> st(max_len + 1, State{DapperH(p), RefDapperH(g, n_m, p.group_size, p.seed), ShadowCounters(16), 0});
  ExhaustiveResult res;
  std::vector<int> seq;
  ActionList out;

  auto rec = [&](auto&& self, int d) -> void {
    for (int sym = 0; sym < 16; ++sym) {
      State& s = st[d + 1];
      s = st[d];
      seq.push_back(sym);
      ++res.sequences;
      Time now = detail::step_time(d);
      std::uint64_t e = std::uint64_t(now / p.t_reset);
      if (e != s.epoch) {
        s.r.new_epoch(e);
        s.sh.clear_acts();
        s.epoch = e;
      }
      RowAddress a = unflatten(0, std::uint64_t(sym), g);
      out.clear();
      s.t.activate(a, now, out);
      s.sh.activate(std::uint64_t(sym), g.rows_per_bank);
      auto want = s.r.activate(a);
      auto got = detail::refreshed_flat(out, g);
      for (auto x : got) s.sh.reset_acts(x);
      if (!want.empty()) ++res.mitigations;

      bool ok = got == want, bound = true;
      for (std::uint64_t x = 0; x < 16; ++x) {
        RowAddress r = unflatten(0, x, g);
        std::uint32_t c1 = s.t.counter1(r), c2 = s.t.counter2(r);
        ok = ok && c1 == s.r.c1_of(x) && c2 == s.r.c2_of(x);
        bound = bound && s.sh.acts(x) <= std::min(c1, c2) + 1;
      }
      if (!ok && !res.divergences++) res.first = detail::show(seq);
      if (!bound && !res.bound_failures++) res.first_bound = detail::show(seq);
      if (ok && bound && d + 1 < max_len) self(self, d + 1);
      seq.pop_back();
    }
  };
  rec(rec, 0);
  return res;
}

// Misra-Gries deficit: for every row id, the largest per-bank activation
// count since the row id was last refreshed, minus the tracker estimate,
// never exceeds the spillover counter (+ slack). Row ids are enumerated up
// to relabeling (restricted growth strings): the tracker never looks at a
// row id's value, only at equality, so this covers every sequence.
inline ExhaustiveResult exhaustive_abacus(std::uint32_t banks, std::uint32_t row_ids, int max_len, std::uint32_t n_m,
                                          std::uint32_t slack = 0) {
  const Geometry g{1, 1, banks, row_ids};
  AbacusParams p;
  p.geometry = g;
  p.n_m = n_m;
  p.entries = 4;

  struct State {
    AbacusTracker t;
    std::vector<std::uint32_t> per_bank;  // [bank * row_ids + row]
    std::uint32_t labels;
  };
  std::vector<State> st(max_len + 1, State{AbacusTracker(p), std::vector<std::uint32_t>(banks * row_ids, 0), 0});
  ExhaustiveResult res;
  std::vector<int> seq;
  ActionList out;

  auto rec = [&](auto&& self, int d) -> void {
    std::uint32_t labels = st[d].labels;
    for (std::uint32_t row = 0; row < std::min(row_ids, labels + 1); ++row) {
      for (std::uint32_t b = 0; b < banks; ++b) {
        State& s = st[d + 1];
        s = st[d];
        s.labels = std::max(labels, row + 1);
        seq.push_back(int(b * row_ids + row));
        ++res.sequences;
        out.clear();
        s.t.activate(bank_row(b, row, g), 0, out);
        ++s.per_bank[b * row_ids + row];
        for (auto& m : out) {
          if (m.kind == ActionKind::ChannelReset) std::fill(s.per_bank.begin(), s.per_bank.end(), 0);
          if (m.kind == ActionKind::VictimRefresh) s.per_bank[global_bank(m.target, g) * row_ids + m.target.row] = 0;
        }
        if (!out.empty() && out[0].kind == ActionKind::VictimRefresh) ++res.mitigations;
        res.max_spill = std::max(res.max_spill, s.t.spillover());

        bool bound = true;
        for (std::uint32_t r = 0; r < row_ids; ++r) {
          std::uint32_t truth = 0;
          for (std::uint32_t bb = 0; bb < banks; ++bb) truth = std::max(truth, s.per_bank[bb * row_ids + r]);
          std::uint32_t est = s.t.estimate(r);
          bound = bound && truth <= est + s.t.spillover() + slack;
        }
        if (!bound && !res.bound_failures++) res.first_bound = detail::show(seq);
        if (bound && d + 1 < max_len) self(self, d + 1);
        seq.pop_back();
      }
    }
  };
  rec(rec, 0);
  return res;
}

}  // namespace oracle
