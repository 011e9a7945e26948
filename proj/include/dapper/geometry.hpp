#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dapper {

// All simulated time is kept in integer picoseconds so that fractional
// timing parameters (tRRD_S = 2.5 ns) stay exact.
using Time = std::int64_t;

inline constexpr Time kPsPerNs = 1000;
inline constexpr Time kNever = INT64_MAX;

inline Time from_ns(double ns) { return static_cast<Time>(std::llround(ns * kPsPerNs)); }
inline Time from_us(double us) { return from_ns(us * 1000.0); }
inline double to_ns(Time t) { return static_cast<double>(t) / kPsPerNs; }

struct BoundsError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct Geometry {
  std::uint32_t ranks = 2;
  std::uint32_t bankgroups = 8;
  std::uint32_t banks_per_group = 4;
  std::uint32_t rows_per_bank = 65536;

  constexpr std::uint32_t banks_per_rank() const { return bankgroups * banks_per_group; }
  constexpr std::uint32_t total_banks() const { return ranks * banks_per_rank(); }
  constexpr std::uint64_t rows_per_rank() const {
    return std::uint64_t(banks_per_rank()) * rows_per_bank;
  }
  constexpr std::uint64_t total_rows() const { return ranks * rows_per_rank(); }
  // Width of the per-rank randomized space.
  constexpr unsigned row_bits() const { return unsigned(std::countr_zero(rows_per_rank())); }

  void validate() const {
    auto pow2 = [](std::uint64_t v) { return v >= 1 && std::has_single_bit(v); };
    if (!pow2(ranks) || !pow2(bankgroups) || !pow2(banks_per_group) || !pow2(rows_per_bank))
      throw std::invalid_argument("geometry counts must be powers of two and >= 1");
    if (banks_per_rank() > 64)
      throw std::invalid_argument("at most 64 banks per rank are supported");
    if (total_banks() > 64)
      throw std::invalid_argument("at most 64 banks per channel are supported");
  }

  bool operator==(const Geometry&) const = default;
};

struct RowAddress {
  std::uint32_t rank = 0;
  std::uint32_t bankgroup = 0;
  std::uint32_t bank = 0;
  std::uint32_t row = 0;

  bool operator==(const RowAddress&) const = default;
};

inline void check_bounds(const RowAddress& a, const Geometry& g) {
  if (a.rank >= g.ranks || a.bankgroup >= g.bankgroups || a.bank >= g.banks_per_group ||
      a.row >= g.rows_per_bank)
    throw BoundsError("row address outside geometry");
}

// Bank index inside its rank, bank-group major.
inline std::uint32_t bank_in_rank(const RowAddress& a, const Geometry& g) {
  return a.bankgroup * g.banks_per_group + a.bank;
}

inline std::uint32_t global_bank(const RowAddress& a, const Geometry& g) {
  return a.rank * g.banks_per_rank() + bank_in_rank(a, g);
}

inline std::uint64_t flat_unchecked(const RowAddress& a, const Geometry& g) {
  return std::uint64_t(bank_in_rank(a, g)) * g.rows_per_bank + a.row;
}

inline std::uint64_t flatten(const RowAddress& a, const Geometry& g) {
  check_bounds(a, g);
  return flat_unchecked(a, g);
}

inline RowAddress unflatten(std::uint32_t rank, std::uint64_t flat, const Geometry& g) {
  if (rank >= g.ranks || flat >= g.rows_per_rank()) throw BoundsError("flat index outside rank");
  RowAddress a;
  a.rank = rank;
  a.row = std::uint32_t(flat % g.rows_per_bank);
  std::uint32_t b = std::uint32_t(flat / g.rows_per_bank);
  a.bankgroup = b / g.banks_per_group;
  a.bank = b % g.banks_per_group;
  return a;
}

// Address of `row` in the bank with channel-wide index `gbank`.
inline RowAddress bank_row(std::uint32_t gbank, std::uint32_t row, const Geometry& g) {
  RowAddress a;
  a.rank = gbank / g.banks_per_rank();
  std::uint32_t b = gbank % g.banks_per_rank();
  a.bankgroup = b / g.banks_per_group;
  a.bank = b % g.banks_per_group;
  a.row = row;
  return a;
}

// Bank order that alternates bank groups first, so consecutive entries
// are tRRD_S apart rather than tRRD_L.
inline std::uint32_t interleaved_bank(std::uint32_t i, const Geometry& g) {
  std::uint32_t k = i % g.banks_per_rank();
  std::uint32_t bg = k % g.bankgroups;
  std::uint32_t bank = k / g.bankgroups;
  return bg * g.banks_per_group + bank;
}

struct TimingParams {
  Time t_rc = from_ns(48);
  Time t_rrd_s = from_ns(2.5);
  Time t_refw = from_ns(32'000'000);
  Time t_refi = from_ns(3900);
  Time t_rfc = from_ns(295);
  std::uint32_t refs_per_window = 8192;
  Time vrr_per_victim = from_ns(48);
  Time drfm_sb = from_ns(240);
  Time rfm_sb = from_ns(190);
  Time counter_access = from_ns(16);
  // Multiplier on the sequential full-refresh time charged for a rank or
  // channel reset (refs_per_window x tRFC).
  double reset_cost_scale = 1.0;
  std::uint32_t blast_radius = 1;

  void validate() const {
    if (t_rc <= 0 || t_rrd_s <= 0 || t_refw <= 0 || t_refi <= 0 || t_rfc < 0)
      throw std::invalid_argument("timing parameters must be positive");
    if (refs_per_window == 0) throw std::invalid_argument("refs_per_window must be >= 1");
    if (Time(refs_per_window) * t_refi > t_refw)
      throw std::invalid_argument("refs_per_window x tREFI exceeds tREFW");
    if (blast_radius < 1 || blast_radius > 2) throw std::invalid_argument("blast_radius must be 1 or 2");
    if (reset_cost_scale < 0) throw std::invalid_argument("reset_cost_scale must be >= 0");
  }

  bool operator==(const TimingParams&) const = default;
};

inline std::uint64_t max_acts_per_bank(const TimingParams& t) {
  if (t.t_refw <= 0 || t.t_rc <= 0) return 0;
  return std::uint64_t(t.t_refw / t.t_rc);
}

// Same budget after subtracting the time the bank spends in auto-refresh.
inline std::uint64_t max_acts_per_bank_refresh_adjusted(const TimingParams& t) {
  Time usable = t.t_refw - Time(t.refs_per_window) * t.t_rfc;
  if (usable <= 0 || t.t_rc <= 0) return 0;
  return std::uint64_t(usable / t.t_rc);
}

inline std::uint32_t rows_per_ref(const Geometry& g, const TimingParams& t) {
  return std::uint32_t((g.rows_per_bank + t.refs_per_window - 1) / t.refs_per_window);
}

inline Time full_reset_duration(const TimingParams& t) {
  return Time(std::llround(t.reset_cost_scale * double(t.refs_per_window) * double(t.t_rfc)));
}

}  // namespace dapper
