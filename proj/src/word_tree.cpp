#include "docnade/word_tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "docnade/rng.hpp"

namespace docnade {

WordTree WordTree::build(std::uint32_t num_leaves, std::uint64_t seed) {
  require(num_leaves >= 1, "word tree needs at least one leaf");
  require(num_leaves <= (1u << 31), "word tree too large");
  WordTree tree;
  tree.num_leaves_ = num_leaves;
  tree.seed_ = seed;
  tree.slot_word_.resize(num_leaves);
  std::iota(tree.slot_word_.begin(), tree.slot_word_.end(), WordId{0});
  Rng rng = Rng::stream(seed, "tree");
  rng.shuffle(tree.slot_word_);
  tree.word_slot_.resize(num_leaves);
  for (std::uint32_t s = 0; s < num_leaves; ++s) tree.word_slot_[tree.slot_word_[s]] = s;
  return tree;
}

TreePath WordTree::path(WordId word) const {
  if (word >= num_leaves_)
    throw DataError("word id " + std::to_string(word) + " >= Q=" + std::to_string(num_leaves_));
  TreePath p;
  std::uint64_t node = std::uint64_t{num_leaves_} - 1 + word_slot_[word];
  // Walk up, then reverse into root-first order.
  while (node > 0) {
    const std::uint64_t parent = (node - 1) / 2;
    p.nodes[p.depth] = static_cast<std::uint32_t>(parent);
    p.bits[p.depth] = static_cast<std::uint8_t>(node == 2 * parent + 2);
    ++p.depth;
    node = parent;
  }
  std::reverse(p.nodes.begin(), p.nodes.begin() + static_cast<std::ptrdiff_t>(p.depth));
  std::reverse(p.bits.begin(), p.bits.begin() + static_cast<std::ptrdiff_t>(p.depth));
  return p;
}

std::uint32_t WordTree::max_depth() const {
  // Deepest heap position 2Q-2 sits at level floor(log2(2Q-1)).
  const std::uint64_t last = 2 * std::uint64_t{num_leaves_} - 2;
  return static_cast<std::uint32_t>(std::bit_width(last + 1) - 1);
}

double log_sigmoid(double x) {
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_shapes(const WordTree& tree, const Vector& h, const RowMatrix& V, const Vector& b) {
  require_dims(V.rows() == tree.num_internal(), "tree weights have " + std::to_string(V.rows()) +
                                                    " rows, tree has " + std::to_string(tree.num_internal()) +
                                                    " internal nodes");
  require_dims(b.size() == V.rows(), "tree bias length differs from internal node count");
  require_dims(V.cols() == h.size(), "tree weights width " + std::to_string(V.cols()) + " != hidden size " +
                                         std::to_string(h.size()));
}

}  // namespace

double word_log_prob(const WordTree& tree, const Vector& h, WordId word, const RowMatrix& V,
                     const Vector& b, SigmoidCounter* counter) {
  check_shapes(tree, h, V, b);
  const TreePath p = tree.path(word);
  double log_p = 0.0;
  for (std::size_t k = 0; k < p.depth; ++k) {
    const auto node = p.nodes[k];
    const double a = b[node] + V.row(node).dot(h);
    // bit 1 has probability sigm(a), bit 0 has probability sigm(-a)
    log_p += log_sigmoid(p.bits[k] ? a : -a);
  }
  if (counter) counter->evaluations += p.depth;
  return log_p;
}

double tree_gradients(const WordTree& tree, const Vector& h, WordId word, const RowMatrix& V,
                      const Vector& b, double scale, RowMatrix& dV, Vector& db, Vector& dh) {
  check_shapes(tree, h, V, b);
  require_dims(dV.rows() == V.rows() && dV.cols() == V.cols() && db.size() == b.size() &&
                   dh.size() == h.size(),
               "tree gradient accumulators");
  const TreePath p = tree.path(word);
  double log_p = 0.0;
  for (std::size_t k = 0; k < p.depth; ++k) {
    const auto node = p.nodes[k];
    const double a = b[node] + V.row(node).dot(h);
    log_p += log_sigmoid(p.bits[k] ? a : -a);
    const double dt = scale * (sigmoid(a) - p.bits[k]);
    if (dt == 0.0) continue;
    db[node] += dt;
    dV.row(node) += dt * h.transpose();
    dh += dt * V.row(node).transpose();
  }
  return log_p;
}

}  // namespace docnade
