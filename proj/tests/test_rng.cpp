#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "docnade/common.hpp"
#include "docnade/rng.hpp"

using namespace docnade;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, NamedStreamsAreDistinct) {
  const char* names[] = {"tree", "init", "init-head", "shuffle", "split", "dropout", "perplexity", "validation"};
  std::vector<std::uint64_t> first;
  for (const char* n : names) first.push_back(Rng::stream(7, n).next_u64());
  std::sort(first.begin(), first.end());
  EXPECT_EQ(std::adjacent_find(first.begin(), first.end()), first.end());
  EXPECT_EQ(Rng::stream(7, "tree").next_u64(), Rng::stream(7, "tree").next_u64());
  EXPECT_NE(Rng::stream(7, "tree").next_u64(), Rng::stream(8, "tree").next_u64());
}

TEST(Rng, StateRoundTrip) {
  Rng a(3);
  for (int i = 0; i < 17; ++i) a.next_u64();
  Rng b(999);
  b.load_state(a.save_state());
  EXPECT_EQ(a, b);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.uniform(), b.uniform());
  EXPECT_THROW(b.load_state("garbage"), DataError);
}

TEST(Rng, UniformRange) {
  Rng r(5);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.01);
}

TEST(Rng, BelowIsUnbiased) {
  Rng r(6);
  std::vector<int> hist(7, 0);
  const int n = 70000;
  for (int i = 0; i < n; ++i) ++hist[r.below(7)];
  double chi2 = 0.0;
  for (int h : hist) chi2 += (h - n / 7.0) * (h - n / 7.0) / (n / 7.0);
  EXPECT_LT(chi2, 22.46);  // 6 dof, p = 0.001
  EXPECT_THROW(r.below(0), UsageError);
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(8);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto s = v;
  r.shuffle(s);
  EXPECT_NE(s, v);
  std::sort(s.begin(), s.end());
  EXPECT_EQ(s, v);
}
