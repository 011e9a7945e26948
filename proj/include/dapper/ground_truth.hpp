#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "dapper/geometry.hpp"

namespace dapper {

enum class HammerModel : std::uint8_t {
  PerAggressor,  // each (victim, aggressor) pair counted separately
  Cumulative,    // all aggressors within the blast radius summed
};

struct Violation {
  Time time = 0;
  RowAddress victim;
  std::uint32_t count = 0;
};

// Exact disturbance counters for every row since that row was last
// refreshed. Both models are maintained; `model` selects which one
// decides a violation.
class GroundTruth {
 public:
  GroundTruth(const Geometry& g, std::uint32_t n_rh, std::uint32_t blast_radius, HammerModel model)
      : geo_(g), n_rh_(n_rh), br_(blast_radius), model_(model) {
    pairs_.assign(g.total_rows() * 2 * br_, 0);
    cum_.assign(g.total_rows(), 0);
  }

  void on_activate(const RowAddress& a, Time now) {
    std::uint64_t base = std::uint64_t(global_bank(a, geo_)) * geo_.rows_per_bank;
    for (std::uint32_t d = 1; d <= br_; ++d) {
      if (a.row >= d) hit(base, a.row - d, a, now, br_ + d - 1);   // aggressor above victim
      if (a.row + d < geo_.rows_per_bank) hit(base, a.row + d, a, now, br_ - d);
    }
  }

  void refresh_row(std::uint32_t gbank, std::uint32_t row) {
    std::uint64_t v = std::uint64_t(gbank) * geo_.rows_per_bank + row;
    std::fill_n(pairs_.begin() + std::ptrdiff_t(v * 2 * br_), 2 * br_, 0);
    cum_[v] = 0;
  }

  // Refreshes the rows within `radius` of `aggressor`, clipped at the bank edges.
  void refresh_victims(const RowAddress& aggressor, std::uint32_t radius) {
    std::uint32_t gb = global_bank(aggressor, geo_);
    for (std::uint32_t d = 1; d <= radius; ++d) {
      if (aggressor.row >= d) refresh_row(gb, aggressor.row - d);
      if (aggressor.row + d < geo_.rows_per_bank) refresh_row(gb, aggressor.row + d);
    }
  }

  // Rows [first, first + count) of every bank in `rank`.
  void refresh_chunk(std::uint32_t rank, std::uint32_t first, std::uint32_t count) {
    std::uint32_t end = std::min(first + count, geo_.rows_per_bank);
    if (first >= end) return;
    for (std::uint32_t b = 0; b < geo_.banks_per_rank(); ++b) {
      std::uint64_t v0 = std::uint64_t(rank * geo_.banks_per_rank() + b) * geo_.rows_per_bank;
      std::fill(pairs_.begin() + std::ptrdiff_t((v0 + first) * 2 * br_),
                pairs_.begin() + std::ptrdiff_t((v0 + end) * 2 * br_), 0);
      std::fill(cum_.begin() + std::ptrdiff_t(v0 + first), cum_.begin() + std::ptrdiff_t(v0 + end), 0);
    }
  }

  void refresh_rank(std::uint32_t rank) { refresh_chunk(rank, 0, geo_.rows_per_bank); }

  std::uint64_t violations() const { return violations_; }
  const std::vector<Violation>& violation_log() const { return log_; }
  std::uint32_t max_hammer() const { return model_ == HammerModel::PerAggressor ? max_pair_ : max_cum_; }
  std::uint32_t max_pair() const { return max_pair_; }
  std::uint32_t max_cumulative() const { return max_cum_; }
  std::uint32_t n_rh() const { return n_rh_; }

  // Current counts for a victim: the largest single-aggressor count, and the sum.
  std::uint32_t pair_count(const RowAddress& victim) const {
    std::uint64_t v = std::uint64_t(global_bank(victim, geo_)) * geo_.rows_per_bank + victim.row;
    return *std::max_element(pairs_.begin() + std::ptrdiff_t(v * 2 * br_),
                             pairs_.begin() + std::ptrdiff_t((v + 1) * 2 * br_));
  }
  std::uint32_t cumulative_count(const RowAddress& victim) const {
    return cum_[std::uint64_t(global_bank(victim, geo_)) * geo_.rows_per_bank + victim.row];
  }

  static constexpr std::size_t kLogLimit = 64;

 private:
  void hit(std::uint64_t base, std::uint32_t vrow, const RowAddress& a, Time now, std::uint32_t slot) {
    std::uint64_t v = base + vrow;
    std::uint16_t& p = pairs_[v * 2 * br_ + slot];
    std::uint16_t& c = cum_[v];
    if (p < UINT16_MAX) ++p;
    if (c < UINT16_MAX) ++c;
    max_pair_ = std::max<std::uint32_t>(max_pair_, p);
    max_cum_ = std::max<std::uint32_t>(max_cum_, c);
    std::uint32_t val = model_ == HammerModel::PerAggressor ? p : c;
    if (val == n_rh_) {
      ++violations_;
      if (log_.size() < kLogLimit) {
        RowAddress victim = a;
        victim.row = vrow;
        log_.push_back({now, victim, val});
      }
    }
  }

  Geometry geo_;
  std::uint32_t n_rh_, br_;
  HammerModel model_;
  std::vector<std::uint16_t> pairs_;
  std::vector<std::uint16_t> cum_;
  std::uint64_t violations_ = 0;
  std::uint32_t max_pair_ = 0, max_cum_ = 0;
  std::vector<Violation> log_;
};

}  // namespace dapper
