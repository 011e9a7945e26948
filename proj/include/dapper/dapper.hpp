#pragma once

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dapper/actions.hpp"
#include "dapper/geometry.hpp"
#include "dapper/llbc.hpp"

namespace dapper {

// One table of row-group counters behind its own cipher. Groups are
// contiguous blocks of `group_size` randomized indices.
class RgcTable {
 public:
  RgcTable() = default;
  RgcTable(unsigned width, std::uint32_t group_size, std::uint64_t seed, std::uint64_t table_id)
      : cipher_(width, seed, table_id), group_size_(group_size) {
    std::uint64_t rows = width >= 64 ? 0 : (1ULL << width);
    if (group_size_ == 0 || rows % group_size_ != 0 || group_size_ > rows)
      throw std::invalid_argument("group_size must divide the randomized row space");
    counters_.assign(rows / group_size_, 0);
  }

  std::uint32_t group_of(std::uint64_t flat) const {
    return std::uint32_t(cipher_.encrypt(flat) / group_size_);
  }

  // Original row indices of every member of group g, in randomized order.
  void members(std::uint32_t g, std::vector<std::uint64_t>& out) const {
    out.resize(group_size_);
    std::uint64_t base = std::uint64_t(g) * group_size_;
    for (std::uint32_t i = 0; i < group_size_; ++i) out[i] = cipher_.decrypt(base + i);
  }

  void reset(std::uint64_t epoch) {
    std::fill(counters_.begin(), counters_.end(), 0);
    cipher_.rekey(epoch);
  }

  std::uint16_t& operator[](std::uint32_t g) { return counters_[g]; }
  std::uint16_t operator[](std::uint32_t g) const { return counters_[g]; }
  std::uint32_t groups() const { return std::uint32_t(counters_.size()); }
  std::uint32_t group_size() const { return group_size_; }
  const LlbcCipher& cipher() const { return cipher_; }
  const std::vector<std::uint16_t>& counters() const { return counters_; }

 private:
  LlbcCipher cipher_;
  std::uint32_t group_size_ = 256;
  std::vector<std::uint16_t> counters_;
};

struct DapperParams {
  Geometry geometry;
  std::uint32_t n_m = 250;
  std::uint32_t group_size = 256;
  Time t_reset = from_ns(32'000'000);
  std::uint64_t seed = 1;
  // Clamp propagated reset values to n_m - 1 (DAPPER-H only). Off by
  // default: with the clamp a row sharing a Table-1 group with a hot row
  // in another bank can be hammered without ever being refreshed.
  bool reset_clamp = false;
};

namespace detail {
inline void check_dapper_params(const DapperParams& p) {
  p.geometry.validate();
  if (p.n_m < 1 || p.n_m > 65535) throw std::invalid_argument("n_m must be in [1, 65535]");
  if (p.t_reset <= 0) throw std::invalid_argument("t_reset must be positive");
}
}  // namespace detail

class DapperS {
 public:
  explicit DapperS(const DapperParams& p) : p_(p) {
    detail::check_dapper_params(p_);
    for (std::uint32_t r = 0; r < p_.geometry.ranks; ++r)
      tables_.emplace_back(p_.geometry.row_bits(), p_.group_size, p_.seed, r * 4 + 0);
  }

  void activate(const RowAddress& a, Time now, ActionList& out) {
    roll(now);
    RgcTable& t = tables_[a.rank];
    std::uint32_t g = t.group_of(flat_unchecked(a, p_.geometry));
    std::uint16_t& c = t[g];
    if (c < p_.n_m) ++c;
    max_counter_ = std::max<std::uint32_t>(max_counter_, c);
    if (c >= p_.n_m) {
      t.members(g, scratch_);
      for (std::uint64_t m : scratch_)
        out.push_back({ActionKind::VictimRefresh, unflatten(a.rank, m, p_.geometry)});
      c = 0;
      ++mitigations_;
      rows_refreshed_ += scratch_.size();
    }
  }

  void on_window(std::uint64_t, Time now) { roll(now); }

  std::string_view name() const { return "dapper-s"; }

  void collect_stats(StatMap& s) const {
    s["dapper_mitigations"] = double(mitigations_);
    s["dapper_rows_refreshed"] = double(rows_refreshed_);
    s["dapper_max_counter"] = double(max_counter_);
  }

  std::uint64_t epoch() const { return epoch_; }
  const RgcTable& table(std::uint32_t rank) const { return tables_[rank]; }
  std::uint32_t group_of(const RowAddress& a) const {
    return tables_[a.rank].group_of(flat_unchecked(a, p_.geometry));
  }
  std::uint32_t counter(const RowAddress& a) const { return tables_[a.rank][group_of(a)]; }
  const DapperParams& params() const { return p_; }
  std::uint64_t mitigations() const { return mitigations_; }

 private:
  void roll(Time now) {
    std::uint64_t e = std::uint64_t(now / p_.t_reset);
    if (e == epoch_) return;
    epoch_ = e;
    for (auto& t : tables_) t.reset(e);
  }

  DapperParams p_;
  std::vector<RgcTable> tables_;
  std::vector<std::uint64_t> scratch_;
  std::uint64_t epoch_ = 0;
  std::uint64_t mitigations_ = 0, rows_refreshed_ = 0;
  std::uint32_t max_counter_ = 0;
};

class DapperH {
 public:
  explicit DapperH(const DapperParams& p) : p_(p) {
    detail::check_dapper_params(p_);
    for (std::uint32_t r = 0; r < p_.geometry.ranks; ++r) {
      Rank rk;
      rk.t1 = RgcTable(p_.geometry.row_bits(), p_.group_size, p_.seed, r * 4 + 1);
      rk.t2 = RgcTable(p_.geometry.row_bits(), p_.group_size, p_.seed, r * 4 + 2);
      rk.bits.assign(rk.t1.groups(), 0);
      ranks_.push_back(std::move(rk));
    }
  }

  void activate(const RowAddress& a, Time now, ActionList& out) {
    roll(now);
    Rank& rk = ranks_[a.rank];
    std::uint64_t flat = flat_unchecked(a, p_.geometry);
    std::uint32_t g1 = rk.t1.group_of(flat), g2 = rk.t2.group_of(flat);
    std::uint64_t bit = 1ULL << bank_in_rank(a, p_.geometry);
    std::uint16_t& c1 = rk.t1[g1];
    std::uint16_t& c2 = rk.t2[g2];
    if (!(rk.bits[g1] & bit)) {
      rk.bits[g1] |= bit;
      if (c2 < p_.n_m) ++c2;
    } else {
      if (c1 < p_.n_m) ++c1;
      if (c2 < p_.n_m) ++c2;
      rk.bits[g1] = bit;
    }
    max_t1_ = std::max<std::uint32_t>(max_t1_, c1);
    max_t2_ = std::max<std::uint32_t>(max_t2_, c2);
    if (c1 >= p_.n_m && c2 >= p_.n_m) mitigate(a.rank, g1, g2, out);
  }

  void on_window(std::uint64_t, Time now) { roll(now); }

  std::string_view name() const { return "dapper-h"; }

  void collect_stats(StatMap& s) const {
    s["dapper_mitigations"] = double(mitigations_);
    s["dapper_rows_refreshed"] = double(rows_refreshed_);
    s["dapper_single_row_mitigations"] = double(single_row_);
    s["dapper_max_table1"] = double(max_t1_);
    s["dapper_max_table2"] = double(max_t2_);
  }

  std::uint64_t epoch() const { return epoch_; }
  const RgcTable& table1(std::uint32_t rank) const { return ranks_[rank].t1; }
  const RgcTable& table2(std::uint32_t rank) const { return ranks_[rank].t2; }
  std::uint64_t bits(std::uint32_t rank, std::uint32_t g1) const { return ranks_[rank].bits[g1]; }
  std::uint32_t group1(const RowAddress& a) const {
    return ranks_[a.rank].t1.group_of(flat_unchecked(a, p_.geometry));
  }
  std::uint32_t group2(const RowAddress& a) const {
    return ranks_[a.rank].t2.group_of(flat_unchecked(a, p_.geometry));
  }
  std::uint32_t counter1(const RowAddress& a) const { return ranks_[a.rank].t1[group1(a)]; }
  std::uint32_t counter2(const RowAddress& a) const { return ranks_[a.rank].t2[group2(a)]; }
  const DapperParams& params() const { return p_; }
  std::uint64_t mitigations() const { return mitigations_; }
  std::uint64_t single_row_mitigations() const { return single_row_; }
  std::uint32_t max_table1() const { return max_t1_; }
  std::uint32_t max_table2() const { return max_t2_; }

 private:
  struct Rank {
    RgcTable t1, t2;
    std::vector<std::uint64_t> bits;
  };

  void mitigate(std::uint32_t rank, std::uint32_t g1, std::uint32_t g2, ActionList& out) {
    Rank& rk = ranks_[rank];
    rk.t1.members(g1, m1_);
    rk.t2.members(g2, m2_);
    std::sort(m1_.begin(), m1_.end());
    std::sort(m2_.begin(), m2_.end());
    shared_.clear();
    std::set_intersection(m1_.begin(), m1_.end(), m2_.begin(), m2_.end(),
                          std::back_inserter(shared_));

    // Each reset counter tracks the largest opposite-table count among the
    // members that were not refreshed.
    auto is_shared = [&](std::uint64_t r) {
      return std::binary_search(shared_.begin(), shared_.end(), r);
    };
    std::uint32_t reset1 = 0, reset2 = 0;
    for (std::uint64_t x : m1_)
      if (!is_shared(x)) reset1 = std::max<std::uint32_t>(reset1, rk.t2[rk.t2.group_of(x)]);
    for (std::uint64_t y : m2_)
      if (!is_shared(y)) reset2 = std::max<std::uint32_t>(reset2, rk.t1[rk.t1.group_of(y)]);
    if (p_.reset_clamp) {
      reset1 = std::min(reset1, p_.n_m - 1);
      reset2 = std::min(reset2, p_.n_m - 1);
    }
    rk.t1[g1] = std::uint16_t(reset1);
    rk.t2[g2] = std::uint16_t(reset2);
    rk.bits[g1] = 0;

    for (std::uint64_t r : shared_)
      out.push_back({ActionKind::VictimRefresh, unflatten(rank, r, p_.geometry)});
    ++mitigations_;
    rows_refreshed_ += shared_.size();
    if (shared_.size() == 1) ++single_row_;
  }

  void roll(Time now) {
    std::uint64_t e = std::uint64_t(now / p_.t_reset);
    if (e == epoch_) return;
    epoch_ = e;
    for (auto& rk : ranks_) {
      rk.t1.reset(e);
      rk.t2.reset(e);
      std::fill(rk.bits.begin(), rk.bits.end(), 0);
    }
  }

  DapperParams p_;
  std::vector<Rank> ranks_;
  std::vector<std::uint64_t> m1_, m2_, shared_;
  std::uint64_t epoch_ = 0;
  std::uint64_t mitigations_ = 0, rows_refreshed_ = 0, single_row_ = 0;
  std::uint32_t max_t1_ = 0, max_t2_ = 0;
};

}  // namespace dapper
