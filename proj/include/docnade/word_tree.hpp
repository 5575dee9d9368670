#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "docnade/common.hpp"

namespace docnade {

// Root-to-leaf route for one word: internal node ids and the branch taken at
// each (0 = left child, 1 = right child).
struct TreePath {
  static constexpr std::size_t kMaxDepth = 64;
  std::array<std::uint32_t, kMaxDepth> nodes{};
  std::array<std::uint8_t, kMaxDepth> bits{};
  std::size_t depth = 0;

  std::span<const std::uint32_t> node_span() const { return {nodes.data(), depth}; }
  std::span<const std::uint8_t> bit_span() const { return {bits.data(), depth}; }
};

// Complete binary tree over Q leaves in heap layout: node i has children
// 2i+1 (left) and 2i+2 (right); internal nodes are 0..Q-2, leaf slots occupy
// heap positions Q-1..2Q-2. Words are assigned to leaf slots by a seeded
// permutation. Paths are derived on demand, so memory is O(Q).
class WordTree {
 public:
  WordTree() = default;

  // Throws UsageError for Q = 0.
  static WordTree build(std::uint32_t num_leaves, std::uint64_t seed);

  std::uint32_t num_leaves() const { return num_leaves_; }
  std::uint32_t num_internal() const { return num_leaves_ == 0 ? 0 : num_leaves_ - 1; }
  std::uint64_t seed() const { return seed_; }

  TreePath path(WordId word) const;
  // Word stored at leaf slot s (0-based, in heap order).
  WordId word_at_slot(std::uint32_t slot) const { return slot_word_[slot]; }
  std::uint32_t slot_of(WordId word) const { return word_slot_[word]; }
  std::uint32_t max_depth() const;

  friend bool operator==(const WordTree& a, const WordTree& b) {
    return a.num_leaves_ == b.num_leaves_ && a.seed_ == b.seed_ && a.word_slot_ == b.word_slot_;
  }

 private:
  std::uint32_t num_leaves_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> word_slot_;
  std::vector<WordId> slot_word_;
};

// log(sigmoid(x)) without overflow.
double log_sigmoid(double x);
double sigmoid(double x);

// Counts logistic (sigmoid) evaluations; attach to an evaluation to
// instrument its cost.
struct SigmoidCounter {
  std::uint64_t evaluations = 0;
};

// log p(w | h) = sum_k log p(bit_k | h) along the path of w, using node
// logistic regressors (V row, b entry). V is T x H, b has length T.
double word_log_prob(const WordTree& tree, const Vector& h, WordId word, const RowMatrix& V,
                     const Vector& b, SigmoidCounter* counter = nullptr);

// Accumulates gradients of -scale * log p(w | h) into the touched rows of
// dV, entries of db, and into dh. Returns log p(w | h).
double tree_gradients(const WordTree& tree, const Vector& h, WordId word, const RowMatrix& V,
                      const Vector& b, double scale, RowMatrix& dV, Vector& db, Vector& dh);

}  // namespace docnade
