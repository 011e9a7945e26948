#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dapper/actions.hpp"
#include "dapper/geometry.hpp"
#include "dapper/random.hpp"

namespace dapper {

// ---------------------------------------------------------------- PARA

class ParaTracker {
 public:
  ParaTracker(double p, std::uint64_t seed) : p_(p), rng_(make_rng(seed, Stream::Para)) {
    if (!(p_ > 0.0 && p_ <= 1.0)) throw std::invalid_argument("PARA probability must be in (0, 1]");
  }

  void activate(const RowAddress& a, Time, ActionList& out) {
    if (p_ >= 1.0 || coin_(rng_) < p_) {
      out.push_back({ActionKind::VictimRefresh, a});
      ++mitigations_;
    }
  }
  void on_window(std::uint64_t, Time) {}
  std::string_view name() const { return "para"; }
  void collect_stats(StatMap& s) const {
    s["para_p"] = p_;
    s["para_mitigations"] = double(mitigations_);
  }
  double p() const { return p_; }

 private:
  double p_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> coin_{0.0, 1.0};
  std::uint64_t mitigations_ = 0;
};

// p = min(1, k / N_RH).
inline double para_probability(std::uint32_t n_rh, double k) {
  return std::min(1.0, k / double(n_rh));
}

// --------------------------------------------------------------- Hydra

struct HydraParams {
  Geometry geometry;
  std::uint32_t n_m = 250;
  std::uint32_t group_rows = 128;
  double gc_fraction = 0.8;
  std::uint32_t rcc_entries = 4096;  // per rank
  std::uint32_t rcc_ways = 32;
  std::uint64_t seed = 1;
};

// Group counters per 128 consecutive rows of a bank; once a group reaches
// N_GC its rows get per-row counters kept in DRAM and cached in the RCC.
class HydraTracker {
 public:
  explicit HydraTracker(const HydraParams& p) : p_(p), rng_(make_rng(p.seed, Stream::Hydra)) {
    p_.geometry.validate();
    if (p_.group_rows == 0 || p_.geometry.rows_per_bank % p_.group_rows != 0)
      throw std::invalid_argument("hydra group size must divide rows_per_bank");
    if (p_.rcc_ways == 0 || p_.rcc_entries % p_.rcc_ways != 0)
      throw std::invalid_argument("hydra RCC entries must be a multiple of its ways");
    n_gc_ = std::max<std::uint32_t>(1, std::uint32_t(p_.gc_fraction * p_.n_m));
    sets_ = p_.rcc_entries / p_.rcc_ways;
    ranks_.resize(p_.geometry.ranks);
    for (auto& r : ranks_) {
      r.gct.assign(p_.geometry.rows_per_rank() / p_.group_rows, 0);
      r.rct.assign(p_.geometry.rows_per_rank(), 0);
      r.rcc.assign(p_.rcc_entries, Way{});
    }
  }

  void activate(const RowAddress& a, Time, ActionList& out) {
    Rank& rk = ranks_[a.rank];
    std::uint64_t flat = flat_unchecked(a, p_.geometry);
    std::uint16_t& gc = rk.gct[flat / p_.group_rows];
    if (gc < n_gc_) {
      if (++gc == n_gc_) {
        // Per-row counters start from the group count, an upper bound on
        // every member's activations so far.
        std::uint64_t base = flat / p_.group_rows * p_.group_rows;
        std::fill_n(rk.rct.begin() + std::ptrdiff_t(base), p_.group_rows, std::uint16_t(n_gc_));
        ++group_promotions_;
      }
      return;
    }

    ++rcc_accesses_;
    Way* set = &rk.rcc[(flat % sets_) * p_.rcc_ways];
    Way* hit = nullptr;
    for (std::uint32_t w = 0; w < p_.rcc_ways; ++w)
      if (set[w].valid && set[w].row == flat) {
        hit = &set[w];
        break;
      }
    if (!hit) {
      ++rcc_misses_;
      Way* victim = nullptr;
      for (std::uint32_t w = 0; w < p_.rcc_ways && !victim; ++w)
        if (!set[w].valid) victim = &set[w];
      if (!victim) victim = &set[std::uniform_int_distribution<std::uint32_t>(0, p_.rcc_ways - 1)(rng_)];
      if (victim->valid && victim->dirty) {
        out.push_back({ActionKind::CounterWrite, unflatten(a.rank, victim->row, p_.geometry)});
        ++counter_writes_;
      }
      out.push_back({ActionKind::CounterRead, a});
      ++counter_reads_;
      *victim = Way{flat, true, false};
      hit = victim;
    }
    hit->dirty = true;
    std::uint16_t& c = rk.rct[flat];
    ++c;
    if (c >= p_.n_m) {
      out.push_back({ActionKind::VictimRefresh, a});
      c = 0;
      ++mitigations_;
    }
  }

  void on_window(std::uint64_t, Time) {
    for (auto& r : ranks_) {
      std::fill(r.gct.begin(), r.gct.end(), 0);
      std::fill(r.rct.begin(), r.rct.end(), 0);
      std::fill(r.rcc.begin(), r.rcc.end(), Way{});
    }
  }

  std::string_view name() const { return "hydra"; }

  void collect_stats(StatMap& s) const {
    s["hydra_rcc_accesses"] = double(rcc_accesses_);
    s["hydra_rcc_misses"] = double(rcc_misses_);
    s["hydra_group_promotions"] = double(group_promotions_);
    s["hydra_mitigations"] = double(mitigations_);
  }

  std::uint32_t n_gc() const { return n_gc_; }
  std::uint32_t sets() const { return sets_; }
  std::uint64_t rcc_accesses() const { return rcc_accesses_; }
  std::uint64_t rcc_misses() const { return rcc_misses_; }
  std::uint64_t counter_reads() const { return counter_reads_; }
  std::uint64_t counter_writes() const { return counter_writes_; }
  std::size_t rcc_occupancy(std::uint32_t rank) const {
    return std::size_t(std::count_if(ranks_[rank].rcc.begin(), ranks_[rank].rcc.end(),
                                     [](const Way& w) { return w.valid; }));
  }
  std::uint32_t row_counter(const RowAddress& a) const {
    return ranks_[a.rank].rct[flat_unchecked(a, p_.geometry)];
  }
  std::uint32_t group_counter(const RowAddress& a) const {
    return ranks_[a.rank].gct[flat_unchecked(a, p_.geometry) / p_.group_rows];
  }

 private:
  struct Way {
    std::uint64_t row = 0;
    bool dirty = false;
    bool valid = false;
    Way() = default;
    Way(std::uint64_t r, bool v, bool d) : row(r), dirty(d), valid(v) {}
  };
  struct Rank {
    std::vector<std::uint16_t> gct, rct;
    std::vector<Way> rcc;
  };

  HydraParams p_;
  std::mt19937_64 rng_;
  std::uint32_t n_gc_ = 0, sets_ = 0;
  std::vector<Rank> ranks_;
  std::uint64_t rcc_accesses_ = 0, rcc_misses_ = 0, group_promotions_ = 0;
  std::uint64_t counter_reads_ = 0, counter_writes_ = 0, mitigations_ = 0;
};

// --------------------------------------------------------------- CoMeT

struct CometParams {
  Geometry geometry;
  std::uint32_t threshold = 125;  // N_RH / 4
  std::uint32_t hashes = 4;
  std::uint32_t counters = 512;
  std::uint32_t rat_entries = 128;
  std::uint32_t history = 256;
  double miss_rate_limit = 0.25;
  Time reset_period = from_ns(32'000'000) / 3;
  // Periodic resets also refresh the rank, as the evaluated configuration
  // does. Turning this off keeps only the structure clear.
  bool periodic_refresh = true;
  std::uint64_t seed = 1;
};

// Per-bank count-min sketch plus a small LRU table of recent aggressors
// with exact counters.
class CometTracker {
 public:
  explicit CometTracker(const CometParams& p) : p_(p) {
    p_.geometry.validate();
    if (p_.hashes == 0 || p_.counters == 0 || p_.rat_entries == 0 || p_.history == 0)
      throw std::invalid_argument("CoMeT structure sizes must be positive");
    if (p_.threshold == 0) throw std::invalid_argument("CoMeT threshold must be positive");
    for (std::uint32_t h = 0; h < p_.hashes; ++h) salts_.push_back(derive(p_.seed, std::uint64_t(Stream::Comet), h));
    banks_.resize(p_.geometry.total_banks());
    for (auto& b : banks_) {
      b.ct.assign(std::size_t(p_.hashes) * p_.counters, 0);
      b.rat.assign(p_.rat_entries, Rat{});
      b.hist.assign(p_.history, 0);
    }
    next_periodic_.assign(p_.geometry.ranks, p_.reset_period);
  }

  void activate(const RowAddress& a, Time now, ActionList& out) {
    while (now >= next_periodic_[a.rank]) {
      next_periodic_[a.rank] += p_.reset_period;
      clear_rank(a.rank);
      ++periodic_resets_;
      if (p_.periodic_refresh) out.push_back({ActionKind::RankReset, a});
    }
    Bank& b = banks_[global_bank(a, p_.geometry)];
    std::uint32_t est = UINT32_MAX;
    for (std::uint32_t h = 0; h < p_.hashes; ++h) {
      std::uint16_t& c = b.ct[std::size_t(h) * p_.counters + slot(a.row, h)];
      if (c < UINT16_MAX) ++c;
      est = std::min<std::uint32_t>(est, c);
    }
    if (est < p_.threshold) return;

    ++rat_lookups_;
    ++b.tick;
    Rat* e = nullptr;
    for (auto& r : b.rat)
      if (r.valid && r.row == a.row) {
        e = &r;
        break;
      }
    if (e) {
      e->stamp = b.tick;
      if (++e->count >= p_.threshold) {
        out.push_back({ActionKind::VictimRefresh, a});
        e->count = 0;
        ++mitigations_;
      }
      record(b, false);
    } else {
      // The sketch cannot be decremented, so a row it flags that is not in
      // the RAT is refreshed now and tracked exactly from here on.
      ++rat_misses_;
      out.push_back({ActionKind::VictimRefresh, a});
      ++mitigations_;
      Rat* v = &b.rat[0];
      for (auto& r : b.rat) {
        if (!r.valid) {
          v = &r;
          break;
        }
        if (r.stamp < v->stamp) v = &r;
      }
      *v = Rat{a.row, 0, b.tick, true};
      record(b, true);
    }
    if (b.filled == p_.history && double(b.misses) > p_.miss_rate_limit * p_.history) {
      clear_rank(a.rank);
      ++early_resets_;
      out.push_back({ActionKind::RankReset, a});
    }
  }

  void on_window(std::uint64_t, Time) {}

  std::string_view name() const { return "comet"; }

  void collect_stats(StatMap& s) const {
    s["comet_rat_lookups"] = double(rat_lookups_);
    s["comet_rat_misses"] = double(rat_misses_);
    s["comet_early_resets"] = double(early_resets_);
    s["comet_periodic_resets"] = double(periodic_resets_);
    s["comet_mitigations"] = double(mitigations_);
  }

  std::uint32_t estimate(const RowAddress& a) const {
    const Bank& b = banks_[global_bank(a, p_.geometry)];
    std::uint32_t est = UINT32_MAX;
    for (std::uint32_t h = 0; h < p_.hashes; ++h)
      est = std::min<std::uint32_t>(est, b.ct[std::size_t(h) * p_.counters + slot(a.row, h)]);
    return est;
  }
  std::uint64_t rat_lookups() const { return rat_lookups_; }
  std::uint64_t rat_misses() const { return rat_misses_; }
  std::uint64_t early_resets() const { return early_resets_; }
  std::uint64_t periodic_resets() const { return periodic_resets_; }

 private:
  struct Rat {
    std::uint32_t row = 0;
    std::uint32_t count = 0;
    std::uint64_t stamp = 0;
    bool valid = false;
  };
  struct Bank {
    std::vector<std::uint16_t> ct;
    std::vector<Rat> rat;
    std::vector<std::uint8_t> hist;  // ring of the last `history` lookups, 1 = miss
    std::uint32_t head = 0, filled = 0, misses = 0;
    std::uint64_t tick = 0;
  };

  std::uint32_t slot(std::uint32_t row, std::uint32_t h) const {
    return std::uint32_t(splitmix64(row ^ salts_[h]) % p_.counters);
  }

  void record(Bank& b, bool miss) {
    if (b.filled == p_.history) b.misses -= b.hist[b.head];
    else ++b.filled;
    b.hist[b.head] = miss;
    b.misses += miss;
    b.head = (b.head + 1) % p_.history;
  }

  void clear_rank(std::uint32_t rank) {
    std::uint32_t n = p_.geometry.banks_per_rank();
    for (std::uint32_t i = 0; i < n; ++i) {
      Bank& b = banks_[rank * n + i];
      std::fill(b.ct.begin(), b.ct.end(), 0);
      std::fill(b.rat.begin(), b.rat.end(), Rat{});
      std::fill(b.hist.begin(), b.hist.end(), 0);
      b.head = b.filled = b.misses = 0;
    }
  }

  CometParams p_;
  std::vector<std::uint64_t> salts_;
  std::vector<Bank> banks_;
  std::vector<Time> next_periodic_;
  std::uint64_t rat_lookups_ = 0, rat_misses_ = 0, early_resets_ = 0, periodic_resets_ = 0;
  std::uint64_t mitigations_ = 0;
};

// -------------------------------------------------------------- ABACUS

// Misra-Gries entries sized for the worst-case aggressor count of one bank.
inline std::uint32_t abacus_entries(std::uint32_t n_rh, const TimingParams& t) {
  switch (n_rh) {
    case 4000: return 309;
    case 2000: return 617;
    case 1000: return 1233;
    case 500: return 2466;
    case 250: return 4931;
    case 125: return 9783;
    default: break;
  }
  std::uint64_t n_m = std::max<std::uint32_t>(1, n_rh / 2);
  return std::uint32_t((max_acts_per_bank_refresh_adjusted(t) + n_m - 1) / n_m);
}

struct AbacusParams {
  Geometry geometry;
  std::uint32_t n_m = 250;
  std::uint32_t entries = 2466;
};

// One Misra-Gries table keyed by row id (row index inside its bank),
// shared by every bank in the channel.
class AbacusTracker {
 public:
  explicit AbacusTracker(const AbacusParams& p) : p_(p) {
    p_.geometry.validate();
    if (p_.entries == 0 || p_.n_m == 0) throw std::invalid_argument("ABACUS sizes must be positive");
    entries_.resize(p_.entries);
    index_.assign(p_.geometry.rows_per_bank, kNone);
    buckets_.assign(p_.n_m + 2, kNone);
    clear();
  }

  void activate(const RowAddress& a, Time, ActionList& out) {
    std::uint64_t bit = 1ULL << global_bank(a, p_.geometry);
    std::uint32_t i = index_[a.row];
    if (i != kNone) {
      Entry& e = entries_[i];
      if (e.bits & bit) {
        move(i, e.count + 1);
        e.bits = bit;
      } else {
        e.bits |= bit;
      }
    } else if (spill_ + 1 >= p_.n_m) {
      // An insertion would start at the threshold, so the spillover is
      // exhausted. Mitigating the newcomer instead would drop it straight
      // back to the floor and the reset would never come.
      out.push_back({ActionKind::ChannelReset, a});
      ++channel_resets_;
      max_spill_ = std::max(max_spill_, spill_ + 1);
      clear();
      return;
    } else if (buckets_[spill_] != kNone) {
      // Reuse an entry sitting at the spillover floor.
      i = buckets_[spill_];
      Entry& e = entries_[i];
      if (e.valid) index_[e.row] = kNone;
      e.valid = true;
      e.row = a.row;
      e.bits = bit;
      index_[a.row] = i;
      move(i, spill_ + 1);
    } else {
      ++spill_;
      max_spill_ = std::max(max_spill_, spill_);
      if (spill_ >= p_.n_m) {
        out.push_back({ActionKind::ChannelReset, a});
        ++channel_resets_;
        clear();
      }
      return;
    }
    Entry& e = entries_[i];
    if (e.count >= p_.n_m) {
      // Siblings in every bank may carry the count, so all are refreshed.
      for (std::uint32_t b = 0; b < p_.geometry.total_banks(); ++b)
        out.push_back({ActionKind::VictimRefresh, bank_row(b, a.row, p_.geometry)});
      ++mitigations_;
      move(i, spill_);
      e.bits = 0;
    }
  }

  void on_window(std::uint64_t, Time) { clear(); }

  std::string_view name() const { return "abacus"; }

  void collect_stats(StatMap& s) const {
    s["abacus_entries"] = double(p_.entries);
    s["abacus_channel_resets"] = double(channel_resets_);
    s["abacus_mitigations"] = double(mitigations_);
    s["abacus_max_spillover"] = double(max_spill_);
  }

  std::uint32_t spillover() const { return spill_; }
  std::uint64_t channel_resets() const { return channel_resets_; }
  // Counter for `row`, or 0 when it holds no entry.
  std::uint32_t estimate(std::uint32_t row) const {
    std::uint32_t i = index_[row];
    return i == kNone ? 0 : entries_[i].count;
  }
  bool tracked(std::uint32_t row) const { return index_[row] != kNone; }
  std::uint64_t bits(std::uint32_t row) const {
    std::uint32_t i = index_[row];
    return i == kNone ? 0 : entries_[i].bits;
  }

 private:
  static constexpr std::uint32_t kNone = UINT32_MAX;

  struct Entry {
    std::uint32_t row = 0;
    std::uint32_t count = 0;
    std::uint64_t bits = 0;
    std::uint32_t prev = kNone, next = kNone;
    bool valid = false;
  };

  // Entries are kept in per-count intrusive lists so "find an entry whose
  // count equals the spillover" is O(1).
  void unlink(std::uint32_t i) {
    Entry& e = entries_[i];
    if (e.prev != kNone) entries_[e.prev].next = e.next;
    else buckets_[e.count] = e.next;
    if (e.next != kNone) entries_[e.next].prev = e.prev;
    e.prev = e.next = kNone;
  }
  void link(std::uint32_t i, std::uint32_t count) {
    Entry& e = entries_[i];
    e.count = std::min(count, p_.n_m + 1);
    e.prev = kNone;
    e.next = buckets_[e.count];
    if (e.next != kNone) entries_[e.next].prev = i;
    buckets_[e.count] = i;
  }
  void move(std::uint32_t i, std::uint32_t count) {
    unlink(i);
    link(i, count);
  }

  void clear() {
    for (auto& e : entries_)
      if (e.valid) index_[e.row] = kNone;
    std::fill(buckets_.begin(), buckets_.end(), kNone);
    // Link in reverse so entry 0 is the first reused.
    for (std::uint32_t i = p_.entries; i-- > 0;) {
      entries_[i] = Entry{};
      link(i, 0);
    }
    spill_ = 0;
  }

  AbacusParams p_;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> index_;
  std::vector<std::uint32_t> buckets_;
  std::uint32_t spill_ = 0, max_spill_ = 0;
  std::uint64_t channel_resets_ = 0, mitigations_ = 0;
};

}  // namespace dapper
