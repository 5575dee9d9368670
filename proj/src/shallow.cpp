#include "docnade/shallow.hpp"

#include <cmath>

namespace docnade {

ShallowParams ShallowParams::zeros(Eigen::Index hidden, Eigen::Index vocab_size, Eigen::Index num_classes) {
  require(hidden >= 1 && vocab_size >= 1 && num_classes >= 0, "invalid shallow model dimensions");
  ShallowParams p;
  p.W = Matrix::Zero(hidden, vocab_size);
  p.c = Vector::Zero(hidden);
  p.V = RowMatrix::Zero(vocab_size - 1, hidden);
  p.b = Vector::Zero(vocab_size - 1);
  p.U = RowMatrix::Zero(num_classes, hidden);
  p.d = Vector::Zero(num_classes);
  return p;
}

void ShallowParams::check(const WordTree& tree) const {
  const auto h = hidden();
  require_dims(c.size() == h, "hidden bias length");
  require_dims(vocab_size() == tree.num_leaves(),
               "W has " + std::to_string(vocab_size()) + " columns, tree has " +
                   std::to_string(tree.num_leaves()) + " leaves");
  require_dims(V.rows() == tree.num_internal() && V.cols() == h, "tree weight matrix shape");
  require_dims(b.size() == V.rows(), "tree bias length");
  require_dims(U.cols() == h || U.rows() == 0, "class weight matrix width");
  require_dims(d.size() == U.rows(), "class bias length");
}

OrderedDocument expand_counts(const SparseCounts& counts) {
  OrderedDocument doc;
  for (const auto& [id, count] : counts) doc.tokens.insert(doc.tokens.end(), count, id);
  return doc;
}

OrderedDocument random_ordering(const SparseCounts& counts, Rng& rng) {
  OrderedDocument doc = expand_counts(counts);
  rng.shuffle(doc.tokens);
  return doc;
}

namespace {

void check_tokens(const OrderedDocument& doc, const ShallowParams& params) {
  for (auto w : doc.tokens)
    if (w >= params.vocab_size())
      throw DataError("word id " + std::to_string(w) + " >= Q=" + std::to_string(params.vocab_size()));
}

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

}  // namespace

Matrix hidden_states(const OrderedDocument& doc, const ShallowParams& params, HiddenStateCounter* counter) {
  check_tokens(doc, params);
  const auto n = static_cast<Eigen::Index>(doc.size());
  Matrix states(params.hidden(), n + 1);
  Vector act = params.c;
  for (Eigen::Index i = 0; i < n; ++i) {
    states.col(i) = relu(act);
    act += params.W.col(doc.tokens[static_cast<std::size_t>(i)]);
  }
  states.col(n) = relu(act);
  if (counter) counter->column_additions += static_cast<std::uint64_t>(n);
  return states;
}

double doc_log_likelihood(const OrderedDocument& doc, const ShallowParams& params, const WordTree& tree) {
  params.check(tree);
  check_tokens(doc, params);
  double log_p = 0.0;
  Vector act = params.c;
  Vector h(params.hidden());
  for (auto w : doc.tokens) {
    h = relu(act);
    log_p += word_log_prob(tree, h, w, params.V, params.b);
    act += params.W.col(w);
  }
  return log_p;
}

Vector class_posterior(const Vector& representation, const ShallowParams& params) {
  require(params.num_classes() >= 1, "class_posterior requires a supervised model");
  require_dims(representation.size() == params.hidden(), "representation length");
  return log_softmax(params.d + params.U * representation).array().exp();
}

Vector class_posterior(const OrderedDocument& doc, const ShallowParams& params) {
  check_tokens(doc, params);
  Vector act = params.c;
  for (auto w : doc.tokens) act += params.W.col(w);
  return class_posterior(relu(act), params);
}

double joint_log_prob(const OrderedDocument& doc, std::uint32_t label, const ShallowParams& params,
                      const WordTree& tree) {
  require(label < params.num_classes(), "label out of range");
  const double log_pv = doc_log_likelihood(doc, params, tree);
  Vector act = params.c;
  for (auto w : doc.tokens) act += params.W.col(w);
  return log_pv + log_softmax(params.d + params.U * relu(act))[label];
}

double supdocnade_loss(const OrderedDocument& doc, std::optional<std::uint32_t> label,
                       const ShallowParams& params, const WordTree& tree, double lambda) {
  double loss = 0.0;
  if (lambda != 0.0) loss -= lambda * doc_log_likelihood(doc, params, tree);
  if (label) {
    require(*label < params.num_classes(), "label out of range");
    Vector act = params.c;
    for (auto w : doc.tokens) act += params.W.col(w);
    loss -= log_softmax(params.d + params.U * relu(act))[*label];
  }
  return loss;
}

double supdocnade_gradients(const OrderedDocument& doc, std::optional<std::uint32_t> label,
                            const ShallowParams& params, const WordTree& tree, double lambda,
                            ShallowParams& grads) {
  params.check(tree);
  require_dims(grads.W.rows() == params.W.rows() && grads.W.cols() == params.W.cols() &&
                   grads.U.rows() == params.U.rows(),
               "gradient accumulator shapes");
  const Matrix states = hidden_states(doc, params);
  const auto n = static_cast<Eigen::Index>(doc.size());
  const auto hidden = params.hidden();

  double loss = 0.0;
  Vector d_act = Vector::Zero(hidden);

  if (label) {
    require(*label < params.num_classes(), "label out of range");
    const auto h_doc = states.col(n);
    const Vector log_p = log_softmax(params.d + params.U * h_doc);
    loss -= log_p[*label];
    Vector d_logits = log_p.array().exp();
    d_logits[*label] -= 1.0;
    grads.d += d_logits;
    grads.U.noalias() += d_logits * h_doc.transpose();
    d_act = (params.U.transpose() * d_logits).cwiseProduct((h_doc.array() > 0.0).cast<double>().matrix());
    grads.c += d_act;
  }

  Vector d_h(hidden);
  for (Eigen::Index i = n - 1; i >= 0; --i) {
    const WordId w = doc.tokens[static_cast<std::size_t>(i)];
    // W(:, v_i) feeds every later position and the whole-document state, so
    // its gradient is taken before position i's own contribution is added.
    grads.W.col(w) += d_act;
    if (lambda == 0.0) continue;
    d_h.setZero();
    const Vector h_i = states.col(i);
    loss -= lambda * tree_gradients(tree, h_i, w, params.V, params.b, lambda, grads.V, grads.b, d_h);
    const Vector d_a = d_h.cwiseProduct((h_i.array() > 0.0).cast<double>().matrix());
    d_act += d_a;
    grads.c += d_a;
  }
  return loss;
}

Vector represent(const SparseCounts& counts, const ShallowParams& params, RepresentationScope scope,
                 std::uint32_t n_visual_slots) {
  Vector act = params.c;
  for (const auto& [id, count] : counts) {
    if (id >= params.vocab_size())
      throw DataError("word id " + std::to_string(id) + " >= Q=" + std::to_string(params.vocab_size()));
    if (scope == RepresentationScope::VisualOnly && id >= n_visual_slots) continue;
    act += static_cast<double>(count) * params.W.col(id);
  }
  return relu(act);
}

RankedPrediction predict_annotations(const SparseCounts& counts, const ShallowParams& params,
                                     const WordTree& tree, std::size_t k, std::uint32_t n_visual_slots) {
  params.check(tree);
  const auto q = static_cast<std::uint32_t>(params.vocab_size());
  require(n_visual_slots <= q, "visual slot count exceeds vocabulary");
  const std::size_t n_annotation = q - n_visual_slots;
  if (k > n_annotation)
    throw UsageError("requested " + std::to_string(k) + " annotations but the vocabulary has " +
                     std::to_string(n_annotation));
  const Vector h = represent(counts, params, RepresentationScope::VisualOnly, n_visual_slots);
  std::vector<std::uint32_t> ids(n_annotation);
  std::vector<double> probs(n_annotation);
  for (std::size_t i = 0; i < n_annotation; ++i) {
    ids[i] = n_visual_slots + static_cast<std::uint32_t>(i);
    probs[i] = std::exp(word_log_prob(tree, h, ids[i], params.V, params.b));
  }
  return rank_top_k(ids, probs, k);
}

}  // namespace docnade
