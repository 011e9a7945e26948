#include <gtest/gtest.h>

#include <bit>
#include <random>

#include "dapper/dapper.hpp"
#include "dapper/llbc.hpp"

using namespace dapper;

TEST(Llbc, BijectionExhaustiveSmallWidths) {
  for (unsigned w = 1; w <= 14; ++w) {
    LlbcCipher c(w, 42, 1, 3);
    std::vector<bool> seen(1ULL << w);
    for (std::uint64_t x = 0; x < (1ULL << w); ++x) {
      std::uint64_t y = c.encrypt(x);
      ASSERT_LE(y, c.max()) << "w=" << w;
      ASSERT_FALSE(seen[y]) << "w=" << w << " x=" << x;
      seen[y] = true;
      ASSERT_EQ(c.decrypt(y), x);
    }
  }
}

TEST(Llbc, DecryptInvertsAtFullWidth) {
  LlbcCipher c(21, 7, 2, 11);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200'000; ++i) {
    std::uint64_t x = rng() & c.max();
    ASSERT_EQ(c.decrypt(c.encrypt(x)), x);
  }
}

TEST(Llbc, SampledInjectivityAtFullWidth) {
  LlbcCipher c(21, 3, 1);
  std::vector<bool> seen(1ULL << 21);
  for (std::uint64_t x = 0; x < (1ULL << 21); ++x) {
    std::uint64_t y = c.encrypt(x);
    ASSERT_FALSE(seen[y]);
    seen[y] = true;
  }
}

TEST(Llbc, RejectsOutOfRangeInput) {
  LlbcCipher c(10, 1, 1);
  EXPECT_THROW(c.encrypt(1024), BoundsError);
  EXPECT_THROW(c.decrypt(1u << 12), BoundsError);
}

TEST(Llbc, AvalancheOnSingleBitFlips) {
  // A flipped input bit should change close to half the output bits.
  LlbcCipher c(21, 9, 1);
  std::mt19937_64 rng(1);
  double total = 0;
  int n = 0;
  for (int i = 0; i < 20'000; ++i) {
    std::uint64_t x = rng() & c.max();
    unsigned bit = unsigned(rng() % 21);
    total += std::popcount(c.encrypt(x) ^ c.encrypt(x ^ (1ULL << bit)));
    ++n;
  }
  double mean = total / n;
  EXPECT_GT(mean, 0.4 * 21);
  EXPECT_LT(mean, 0.6 * 21);
}

TEST(Llbc, RekeyChangesAlmostEveryMapping) {
  LlbcCipher a(21, 5, 1, 0), b(21, 5, 1, 0);
  b.rekey(1);
  EXPECT_NE(a.key(), b.key());
  std::uint64_t differ = 0, n = 1ULL << 16;
  for (std::uint64_t x = 0; x < n; ++x) differ += a.encrypt(x) != b.encrypt(x);
  EXPECT_GE(double(differ) / double(n), 0.99);
}

TEST(Llbc, DeterministicPerSeedTableEpoch) {
  LlbcCipher a(16, 5, 1, 4), b(16, 5, 1, 4), c(16, 5, 2, 4), d(16, 6, 1, 4);
  int same_table = 0, same_seed = 0;
  for (std::uint64_t x = 0; x < 1000; ++x) {
    ASSERT_EQ(a.encrypt(x), b.encrypt(x));
    same_table += a.encrypt(x) == c.encrypt(x);
    same_seed += a.encrypt(x) == d.encrypt(x);
  }
  EXPECT_LT(same_table, 10);
  EXPECT_LT(same_seed, 10);
}

TEST(Llbc, GroupsPartitionTheRowSpace) {
  RgcTable t(12, 64, 3, 1);
  ASSERT_EQ(t.groups(), 64u);
  std::vector<int> owner(1 << 12, -1);
  std::vector<std::uint64_t> m;
  for (std::uint32_t g = 0; g < t.groups(); ++g) {
    t.members(g, m);
    ASSERT_EQ(m.size(), 64u);
    for (auto x : m) {
      ASSERT_EQ(owner[x], -1);
      owner[x] = int(g);
      ASSERT_EQ(t.group_of(x), g);
    }
  }
  EXPECT_EQ(std::count(owner.begin(), owner.end(), -1), 0);
}

TEST(Llbc, GroupSizeMustDivideRowSpace) {
  EXPECT_THROW(RgcTable(10, 3, 1, 1), std::invalid_argument);
  EXPECT_THROW(RgcTable(4, 32, 1, 1), std::invalid_argument);
}
