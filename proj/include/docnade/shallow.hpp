#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "docnade/common.hpp"
#include "docnade/ranking.hpp"
#include "docnade/rng.hpp"
#include "docnade/word_tree.hpp"

namespace docnade {

// Single-hidden-layer DocNADE / SupDocNADE weights. The hidden activation is
// the rectifier g(a) = max(0, a).
struct ShallowParams {
  Matrix W;     // H x Q, word input weights
  Vector c;     // H, hidden bias
  RowMatrix V;  // T x H, tree node logistic weights
  Vector b;     // T, tree node biases
  RowMatrix U;  // C x H, class weights (C = 0 for unsupervised DocNADE)
  Vector d;     // C, class biases

  static ShallowParams zeros(Eigen::Index hidden, Eigen::Index vocab_size, Eigen::Index num_classes);

  Eigen::Index hidden() const { return W.rows(); }
  Eigen::Index vocab_size() const { return W.cols(); }
  Eigen::Index num_classes() const { return U.rows(); }

  // Throws DataError when shapes disagree with each other or with the tree.
  void check(const WordTree& tree) const;

  template <typename F>
  void for_each_array(F&& f) {
    f("W", W);
    f("c", c);
    f("V", V);
    f("b", b);
    f("U", U);
    f("d", d);
  }
  template <typename F>
  void for_each_array(F&& f) const {
    f("W", W);
    f("c", c);
    f("V", V);
    f("b", b);
    f("U", U);
    f("d", d);
  }
};

// An explicit ordering of a document's tokens.
struct OrderedDocument {
  std::vector<WordId> tokens;
  std::size_t size() const { return tokens.size(); }
};

// Tokens in ascending id order.
OrderedDocument expand_counts(const SparseCounts& counts);
// Fresh uniform random ordering of the token multiset.
OrderedDocument random_ordering(const SparseCounts& counts, Rng& rng);

inline Vector relu(const Vector& a) { return a.cwiseMax(0.0); }

struct HiddenStateCounter {
  std::uint64_t column_additions = 0;
};

// Columns h_1 .. h_{D+1}, h_i = g(c + sum_{k<i} W(:, v_k)), computed by
// carrying the running pre-activation. The last column is the
// whole-document representation.
Matrix hidden_states(const OrderedDocument& doc, const ShallowParams& params,
                     HiddenStateCounter* counter = nullptr);

// sum_i log p(v_i | v_<i) under the tree conditionals; 0 for an empty document.
double doc_log_likelihood(const OrderedDocument& doc, const ShallowParams& params, const WordTree& tree);

// softmax(d + U h_y).
Vector class_posterior(const Vector& representation, const ShallowParams& params);
Vector class_posterior(const OrderedDocument& doc, const ShallowParams& params);

// log p(v, y) = log p(v) + log p(y | v).
double joint_log_prob(const OrderedDocument& doc, std::uint32_t label, const ShallowParams& params,
                      const WordTree& tree);

// Hybrid loss -log p(y|v) - lambda * sum_i log p(v_i|v_<i). Without a label
// only the generative term is present.
double supdocnade_loss(const OrderedDocument& doc, std::optional<std::uint32_t> label,
                       const ShallowParams& params, const WordTree& tree, double lambda);

// Adds the gradients of supdocnade_loss to `grads` (same shapes as params)
// using the reverse-order backward recurrence over token positions. Returns
// the loss.
double supdocnade_gradients(const OrderedDocument& doc, std::optional<std::uint32_t> label,
                            const ShallowParams& params, const WordTree& tree, double lambda,
                            ShallowParams& grads);

enum class RepresentationScope { VisualOnly, AllWords };

// g(c + sum_w counts[w] W(:, w)). VisualOnly drops ids >= n_visual_slots.
Vector represent(const SparseCounts& counts, const ShallowParams& params, RepresentationScope scope,
                 std::uint32_t n_visual_slots);

// Ranks annotation ids [n_visual_slots, Q) by p(next word = a | visual
// words), returning the top k with probabilities.
RankedPrediction predict_annotations(const SparseCounts& counts, const ShallowParams& params,
                                     const WordTree& tree, std::size_t k, std::uint32_t n_visual_slots);

}  // namespace docnade
