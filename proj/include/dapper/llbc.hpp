#pragma once

#include <array>
#include <cstdint>

#include "dapper/geometry.hpp"
#include "dapper/random.hpp"

namespace dapper {

struct LlbcKey {
  std::array<std::uint16_t, 4> round_keys{};
  std::uint64_t epoch = 0;
  bool operator==(const LlbcKey&) const = default;
};

// Four-round unbalanced Feistel permutation of [0, 2^n). The high half is
// ceil(n/2) bits, the low half floor(n/2); rounds alternate which half is
// rewritten, so any width (odd included) stays a bijection.
class LlbcCipher {
 public:
  LlbcCipher() = default;

  LlbcCipher(unsigned width_bits, std::uint64_t seed, std::uint64_t table_id, std::uint64_t epoch = 0)
      : width_(width_bits), seed_(seed), table_(table_id) {
    lo_bits_ = width_ / 2;
    hi_bits_ = width_ - lo_bits_;
    lo_mask_ = lo_bits_ ? (~0ULL >> (64 - lo_bits_)) : 0;
    hi_mask_ = hi_bits_ ? (~0ULL >> (64 - hi_bits_)) : 0;
    // The seed-derived extension is fixed per table; only the 16-bit round
    // keys change with the epoch.
    for (unsigned i = 0; i < 4; ++i) ext_[i] = derive(seed_, table_, 0xe47e45, i);
    rekey(epoch);
  }

  void rekey(std::uint64_t epoch) {
    key_.epoch = epoch;
    std::uint64_t k = derive(seed_, table_, epoch + 1);
    for (unsigned i = 0; i < 4; ++i) {
      key_.round_keys[i] = std::uint16_t(k >> (16 * i));
      round_[i] = ext_[i] ^ (std::uint64_t(key_.round_keys[i]) * 0x9e3779b97f4a7c15ULL);
    }
  }

  std::uint64_t encrypt(std::uint64_t x) const {
    if (x > max()) throw BoundsError("llbc input outside cipher width");
    std::uint64_t hi = x >> lo_bits_, lo = x & lo_mask_;
    hi ^= f(lo, 0) & hi_mask_;
    lo ^= f(hi, 1) & lo_mask_;
    hi ^= f(lo, 2) & hi_mask_;
    lo ^= f(hi, 3) & lo_mask_;
    return (hi << lo_bits_) | lo;
  }

  std::uint64_t decrypt(std::uint64_t y) const {
    if (y > max()) throw BoundsError("llbc input outside cipher width");
    std::uint64_t hi = y >> lo_bits_, lo = y & lo_mask_;
    lo ^= f(hi, 3) & lo_mask_;
    hi ^= f(lo, 2) & hi_mask_;
    lo ^= f(hi, 1) & lo_mask_;
    hi ^= f(lo, 0) & hi_mask_;
    return (hi << lo_bits_) | lo;
  }

  unsigned width_bits() const { return width_; }
  std::uint64_t max() const { return width_ >= 64 ? ~0ULL : (1ULL << width_) - 1; }
  const LlbcKey& key() const { return key_; }
  std::uint64_t table_id() const { return table_; }

 private:
  std::uint64_t f(std::uint64_t half, unsigned r) const {
    std::uint64_t z = half + round_[r];
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  unsigned width_ = 0, hi_bits_ = 0, lo_bits_ = 0;
  std::uint64_t hi_mask_ = 0, lo_mask_ = 0;
  std::uint64_t seed_ = 0, table_ = 0;
  std::array<std::uint64_t, 4> ext_{};
  std::array<std::uint64_t, 4> round_{};
  LlbcKey key_;
};

}  // namespace dapper
