#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <set>

#include "docnade/rng.hpp"
#include "docnade/word_tree.hpp"
#include "support/oracles.hpp"

using namespace docnade;
using namespace docnade::testing;

namespace {

std::uint32_t ceil_log2(std::uint32_t q) { return q <= 1 ? 0 : std::bit_width(q - 1); }

Vector random_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.uniform(-scale, scale);
  return v;
}

RowMatrix random_rows(Eigen::Index r, Eigen::Index c, Rng& rng) {
  RowMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.uniform(-1, 1);
  return m;
}

}  // namespace

TEST(WordTree, TwoLeaves) {
  const auto t = WordTree::build(2, 0);
  EXPECT_EQ(t.num_internal(), 1u);
  for (WordId w = 0; w < 2; ++w) {
    EXPECT_EQ(t.path(w).depth, 1u);
    EXPECT_EQ(t.path(w).nodes[0], 0u);
  }
  EXPECT_NE(t.path(0).bits[0], t.path(1).bits[0]);
}

TEST(WordTree, EightLeavesPerfect) {
  const auto t = WordTree::build(8, 5);
  EXPECT_EQ(t.num_internal(), 7u);
  for (WordId w = 0; w < 8; ++w) EXPECT_EQ(t.path(w).depth, 3u);
}

TEST(WordTree, FiveLeavesShape) {
  // Internal 0..3, leaves at heap positions 4..8: 4 under node 1, 5 and 6
  // under node 2 (depth 2), 7 and 8 under node 3 (depth 3).
  const auto t = WordTree::build(5, 9);
  EXPECT_EQ(t.num_internal(), 4u);
  std::multiset<std::size_t> depths;
  for (WordId w = 0; w < 5; ++w) depths.insert(t.path(w).depth);
  EXPECT_EQ(depths, (std::multiset<std::size_t>{2, 2, 2, 3, 3}));
  EXPECT_EQ(t.max_depth(), 3u);
}

TEST(WordTree, PathsStartAtRootAndFollowHeapArithmetic) {
  for (std::uint32_t q : {1u, 2u, 3u, 7u, 64u, 100u, 257u}) {
    const auto t = WordTree::build(q, q);
    std::set<std::uint32_t> slots;
    for (WordId w = 0; w < q; ++w) {
      const auto p = t.path(w);
      EXPECT_LE(p.depth, ceil_log2(q));
      std::uint32_t pos = 0;
      for (std::size_t k = 0; k < p.depth; ++k) {
        EXPECT_EQ(p.nodes[k], pos);
        EXPECT_LT(p.nodes[k], t.num_internal());
        pos = 2 * pos + 1 + p.bits[k];
      }
      EXPECT_EQ(pos, q - 1 + t.slot_of(w));
      EXPECT_EQ(t.word_at_slot(t.slot_of(w)), w);
      slots.insert(t.slot_of(w));
    }
    EXPECT_EQ(slots.size(), q);
  }
}

TEST(WordTree, DeterministicAndSeedDependent) {
  EXPECT_EQ(WordTree::build(50, 3), WordTree::build(50, 3));
  EXPECT_FALSE(WordTree::build(50, 3) == WordTree::build(50, 4));
  EXPECT_THROW(WordTree::build(0, 1), UsageError);
}

TEST(WordTree, UniformAtZeroParameters) {
  for (std::uint32_t q : {2u, 4u}) {
    const auto t = WordTree::build(q, 1);
    const RowMatrix V = RowMatrix::Zero(q - 1, 3);
    const Vector b = Vector::Zero(q - 1), h = Vector::Ones(3);
    for (WordId w = 0; w < q; ++w) EXPECT_NEAR(word_log_prob(t, h, w, V, b), std::log(1.0 / q), 1e-15);
  }
}

TEST(WordTree, NormalizesOverLeaves) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = static_cast<std::uint32_t>(1 + rng.below(256));
    const auto h = static_cast<Eigen::Index>(1 + rng.below(8));
    const auto t = WordTree::build(q, rng.next_u64());
    const RowMatrix V = random_rows(q - 1, h, rng);
    const Vector b = random_vector(q - 1, rng), x = random_vector(h, rng, 2.0);
    double total = 0.0;
    for (WordId w = 0; w < q; ++w) total += std::exp(word_log_prob(t, x, w, V, b));
    EXPECT_NEAR(total, 1.0, 1e-10) << "Q=" << q;
  }
}

TEST(WordTree, MatchesExplicitBranchProduct) {
  Rng rng(2);
  const auto t = WordTree::build(6, 4);
  const RowMatrix V = random_rows(5, 3, rng);
  const Vector b = random_vector(5, rng), x = random_vector(3, rng);
  for (WordId w = 0; w < 6; ++w)
    EXPECT_NEAR(std::exp(word_log_prob(t, x, w, V, b)), naive_word_prob(t, x, w, V, b), 1e-14);
}

TEST(WordTree, SigmoidCountWithinLogQ) {
  for (std::uint32_t q : {2u, 16u, 1024u}) {
    const auto t = WordTree::build(q, 0);
    const RowMatrix V = RowMatrix::Zero(q - 1, 2);
    const Vector b = Vector::Zero(q - 1), x = Vector::Zero(2);
    for (WordId w = 0; w < q; ++w) {
      SigmoidCounter counter;
      word_log_prob(t, x, w, V, b, &counter);
      EXPECT_LE(counter.evaluations, ceil_log2(q));
    }
  }
}

TEST(WordTree, MillionLeafPathsAreShort) {
  const std::uint32_t q = 1'000'000;
  const auto t = WordTree::build(q, 0);
  EXPECT_EQ(t.max_depth(), ceil_log2(q));
  for (WordId w : {0u, 1u, 524'287u, 999'999u}) EXPECT_LE(t.path(w).depth, ceil_log2(q));
}

TEST(TreeGradients, ZeroScaleGivesZero) {
  Rng rng(3);
  const auto t = WordTree::build(9, 1);
  const RowMatrix V = random_rows(8, 4, rng);
  const Vector b = random_vector(8, rng), x = random_vector(4, rng);
  RowMatrix dV = RowMatrix::Zero(8, 4);
  Vector db = Vector::Zero(8), dh = Vector::Zero(4);
  tree_gradients(t, x, 3, V, b, 0.0, dV, db, dh);
  EXPECT_EQ(dV.squaredNorm() + db.squaredNorm() + dh.squaredNorm(), 0.0);
}

TEST(TreeGradients, BiasGradientAtZero) {
  const auto t = WordTree::build(7, 2);
  const RowMatrix V = RowMatrix::Zero(6, 2);
  const Vector b = Vector::Zero(6), x = Vector::Ones(2);
  const double scale = 0.7;
  for (WordId w = 0; w < 7; ++w) {
    RowMatrix dV = RowMatrix::Zero(6, 2);
    Vector db = Vector::Zero(6), dh = Vector::Zero(2);
    tree_gradients(t, x, w, V, b, scale, dV, db, dh);
    const auto p = t.path(w);
    Vector expected = Vector::Zero(6);
    for (std::size_t k = 0; k < p.depth; ++k) expected[p.nodes[k]] = scale * (0.5 - p.bits[k]);
    EXPECT_EQ(db, expected);
  }
}

TEST(TreeGradients, MatchFiniteDifferences) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto q = static_cast<std::uint32_t>(2 + rng.below(30));
    const auto hdim = static_cast<Eigen::Index>(1 + rng.below(6));
    const auto t = WordTree::build(q, rng.next_u64());
    RowMatrix V = random_rows(q - 1, hdim, rng);
    Vector b = random_vector(q - 1, rng), x = random_vector(hdim, rng);
    const auto w = static_cast<WordId>(rng.below(q));
    const double scale = rng.uniform(0.1, 3.0);
    RowMatrix dV = RowMatrix::Zero(q - 1, hdim);
    Vector db = Vector::Zero(q - 1), dh = Vector::Zero(hdim);
    const double lp = tree_gradients(t, x, w, V, b, scale, dV, db, dh);
    EXPECT_NEAR(lp, word_log_prob(t, x, w, V, b), 1e-14);

    // Touched rows only.
    const auto p = t.path(w);
    std::set<std::uint32_t> on_path(p.nodes.begin(), p.nodes.begin() + p.depth);
    for (std::uint32_t n = 0; n + 1 < q; ++n)
      if (!on_path.count(n)) {
        EXPECT_EQ(db[n], 0.0);
        EXPECT_EQ(dV.row(n).squaredNorm(), 0.0);
      }

    const double eps = 1e-5;
    const auto f = [&] { return -scale * word_log_prob(t, x, w, V, b); };
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + eps;
      const double up = f();
      param = saved - eps;
      const double down = f();
      param = saved;
      EXPECT_LT(relative_error(analytic, (up - down) / (2 * eps)), 1e-5);
    };
    for (std::uint32_t n = 0; n + 1 < q; ++n) {
      check(b[n], db[n]);
      for (Eigen::Index j = 0; j < hdim; ++j) check(V(n, j), dV(n, j));
    }
    for (Eigen::Index j = 0; j < hdim; ++j) check(x[j], dh[j]);
  }
}

TEST(Sigmoid, StableAtExtremes) {
  EXPECT_NEAR(log_sigmoid(-800.0), -800.0, 1e-12);
  EXPECT_EQ(log_sigmoid(800.0), 0.0);
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_TRUE(std::isfinite(log_sigmoid(-1e308)));
}
