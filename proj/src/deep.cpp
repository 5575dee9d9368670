#include "docnade/deep.hpp"

#include <algorithm>
#include <cmath>

#include "docnade/word_tree.hpp"

namespace docnade {

DeepParams DeepParams::zeros(Eigen::Index vocab_size, const std::vector<Eigen::Index>& hidden_sizes,
                             Eigen::Index num_classes, Eigen::Index num_features) {
  require(!hidden_sizes.empty(), "deep model needs at least one hidden layer");
  require(vocab_size >= 1 && num_classes >= 0 && num_features >= 0, "invalid deep model dimensions");
  DeepParams p;
  Eigen::Index fan_in = vocab_size;
  for (auto h : hidden_sizes) {
    require(h >= 1, "hidden layer sizes must be positive");
    p.layers.push_back({Matrix::Zero(h, fan_in), Vector::Zero(h)});
    fan_in = h;
  }
  p.P = Matrix::Zero(hidden_sizes.front(), num_features);
  p.V_out = RowMatrix::Zero(vocab_size, fan_in);
  p.b_out = Vector::Zero(vocab_size);
  p.U = RowMatrix::Zero(num_classes, fan_in);
  p.d = Vector::Zero(num_classes);
  return p;
}

std::vector<Eigen::Index> DeepParams::hidden_sizes() const {
  std::vector<Eigen::Index> sizes;
  for (const auto& layer : layers) sizes.push_back(layer.W.rows());
  return sizes;
}

void DeepParams::check() const {
  require_dims(!layers.empty(), "deep model has no layers");
  Eigen::Index fan_in = layers.front().W.cols();
  for (std::size_t n = 0; n < layers.size(); ++n) {
    require_dims(layers[n].W.cols() == fan_in, "layer " + std::to_string(n + 1) + " input width");
    require_dims(layers[n].c.size() == layers[n].W.rows(), "layer " + std::to_string(n + 1) + " bias length");
    fan_in = layers[n].W.rows();
  }
  require_dims(P.rows() == layers.front().W.rows(), "global feature matrix rows");
  require_dims(V_out.rows() == vocab_size() && V_out.cols() == top_size(), "output weight shape");
  require_dims(b_out.size() == vocab_size(), "output bias length");
  require_dims(U.cols() == top_size() || U.rows() == 0, "class weight width");
  require_dims(d.size() == U.rows(), "class bias length");
  require(settings.dropout_rate >= 0.0 && settings.dropout_rate < 1.0, "dropout rate must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Split

std::optional<HistogramSplit> split_histogram(const SparseCounts& counts, Rng& rng, SplitMode mode) {
  std::uint64_t total = 0;
  for (const auto& [id, count] : counts) total += count;
  if (total == 0) return std::nullopt;

  HistogramSplit split;
  split.total = total;

  if (mode == SplitMode::UniformPrefix) {
    split.d = 1 + rng.below(total);
    // Selection sampling over the token sequence: each token joins the input
    // with probability needed/remaining, giving a uniform (d-1)-subset.
    std::uint64_t needed = split.d - 1;
    std::uint64_t remaining = total;
    for (const auto& [id, count] : counts) {
      std::uint32_t taken = 0;
      for (std::uint32_t j = 0; j < count; ++j, --remaining) {
        if (needed == 0) break;
        if (needed == remaining || static_cast<double>(remaining) * rng.uniform() < static_cast<double>(needed)) {
          ++taken;
          --needed;
        }
      }
      if (taken > 0) split.input.emplace_back(id, taken);
      if (taken < count) split.output.emplace_back(id, count - taken);
    }
    return split;
  }

  for (;;) {
    split.input.clear();
    split.output.clear();
    std::uint64_t left = 0;
    for (const auto& [id, count] : counts) {
      const auto taken = static_cast<std::uint32_t>(rng.below(std::uint64_t{count} + 1));
      left += taken;
      if (taken > 0) split.input.emplace_back(id, taken);
      if (taken < count) split.output.emplace_back(id, count - taken);
    }
    if (!split.output.empty()) {
      split.d = left + 1;
      return split;
    }
  }
}

Vector preprocess_histogram(const SparseCounts& counts, const WeightVector& omega, const DeepSettings& settings) {
  Vector x = to_weighted_histogram(counts, omega);
  if (!settings.unit_variance || x.size() == 0) return x;
  const double q = static_cast<double>(x.size());
  const double mean = x.sum() / q;
  const double var = (x.array() - mean).square().sum() / q;
  const double sd = std::sqrt(var);
  if (sd >= 1e-12) x /= sd;
  return x;
}

// ---------------------------------------------------------------------------
// Forward

DropoutMasks draw_dropout_masks(const DeepParams& params, Rng& rng) {
  DropoutMasks masks;
  const double keep = 1.0 - params.settings.dropout_rate;
  for (const auto& layer : params.layers) {
    Vector m(layer.W.rows());
    for (Eigen::Index i = 0; i < m.size(); ++i) m[i] = rng.uniform() < keep ? 1.0 : 0.0;
    masks.push_back(std::move(m));
  }
  return masks;
}

DeepActivations deep_forward(const Vector& input, const std::optional<Vector>& features, const DeepParams& params,
                             const DropoutMasks* masks) {
  require_dims(input.size() == params.vocab_size(), "input histogram length " + std::to_string(input.size()) +
                                                        " != Q=" + std::to_string(params.vocab_size()));
  if (features)
    require_dims(features->size() == params.num_features(),
                 "global feature length " + std::to_string(features->size()) + " != N_f=" +
                     std::to_string(params.num_features()));
  if (masks) {
    require_dims(masks->size() == params.depth(), "dropout mask count");
    for (std::size_t n = 0; n < params.depth(); ++n)
      require_dims((*masks)[n].size() == params.layers[n].W.rows(), "dropout mask length");
  }
  const double keep = 1.0 - params.settings.dropout_rate;

  DeepActivations acts;
  acts.input = input;
  acts.features = features;
  for (std::size_t n = 0; n < params.depth(); ++n) {
    const auto& layer = params.layers[n];
    Vector a = layer.c;
    if (n == 0) {
      for (Eigen::Index j = 0; j < input.size(); ++j)
        if (input[j] != 0.0) a.noalias() += input[j] * layer.W.col(j);
      if (features && params.num_features() > 0) a.noalias() += params.P * *features;
    } else {
      a.noalias() += layer.W * acts.hidden.back();
    }
    Vector h = a.cwiseMax(0.0);
    if (masks)
      h = h.cwiseProduct((*masks)[n]);
    else if (keep != 1.0)
      h *= keep;
    acts.pre.push_back(std::move(a));
    acts.hidden.push_back(std::move(h));
  }
  return acts;
}

namespace {

Vector log_softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  const double lse = m + std::log((logits.array() - m).exp().sum());
  return logits.array() - lse;
}

// Backpropagates d_top through the hidden stack into grads.
void backprop_stack(const DeepActivations& acts, const DeepParams& params, const DropoutMasks* masks,
                    Vector d_top, DeepParams& grads) {
  const double keep = 1.0 - params.settings.dropout_rate;
  Vector delta = std::move(d_top);
  for (std::size_t n = params.depth(); n-- > 0;) {
    if (masks)
      delta = delta.cwiseProduct((*masks)[n]);
    else if (keep != 1.0)
      delta *= keep;
    const Vector d_pre = delta.cwiseProduct((acts.pre[n].array() > 0.0).cast<double>().matrix());
    grads.layers[n].c += d_pre;
    if (n > 0) {
      grads.layers[n].W.noalias() += d_pre * acts.hidden[n - 1].transpose();
      delta.noalias() = params.layers[n].W.transpose() * d_pre;
    } else {
      for (Eigen::Index j = 0; j < acts.input.size(); ++j)
        if (acts.input[j] != 0.0) grads.layers[0].W.col(j).noalias() += acts.input[j] * d_pre;
      if (acts.features && params.num_features() > 0) grads.P.noalias() += d_pre * acts.features->transpose();
    }
  }
}

}  // namespace

Vector output_log_probs(const Vector& top, const DeepParams& params) {
  return log_softmax(params.b_out + params.V_out * top);
}

LossTerm generative_loss(const Vector& top, const SparseCounts& output, const WeightVector& omega, std::uint64_t d,
                         std::uint64_t total, const DeepParams& params) {
  require(total >= 1 && d >= 1 && d <= total, "split position must satisfy 1 <= d <= D");
  require_dims(omega.size() == params.vocab_size(), "weight vector length");
  const double factor = static_cast<double>(total) / static_cast<double>(total - d + 1);
  const Vector log_p = output_log_probs(top, params);
  LossTerm term;
  double mass = 0.0;
  Vector target = Vector::Zero(params.vocab_size());
  for (const auto& [id, count] : output) {
    require_dims(id < params.vocab_size(), "output word id");
    const double weight = static_cast<double>(count) * omega[id];
    term.loss -= weight * log_p[id];
    target[id] = weight;
    mass += weight;
  }
  term.loss *= factor;
  term.d_logits = factor * (mass * log_p.array().exp().matrix() - target);
  return term;
}

LossTerm supervised_loss(const Vector& top, const std::vector<std::uint32_t>& labels, const DeepParams& params,
                         SupervisedHead head) {
  require(params.num_classes() >= 1, "supervised loss requires a supervised model");
  const Vector logits = params.d + params.U * top;
  LossTerm term;
  if (head == SupervisedHead::Softmax) {
    if (labels.size() != 1)
      throw DataError("softmax head needs exactly one label, document has " + std::to_string(labels.size()));
    require_dims(labels[0] < params.num_classes(), "label out of range");
    const Vector log_p = log_softmax(logits);
    term.loss = -log_p[labels[0]];
    term.d_logits = log_p.array().exp();
    term.d_logits[labels[0]] -= 1.0;
    return term;
  }
  Vector target = Vector::Zero(params.num_classes());
  for (auto y : labels) {
    require_dims(y < params.num_classes(), "label out of range");
    target[y] = 1.0;
  }
  term.d_logits.resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    term.loss -= target[i] * log_sigmoid(z) + (1.0 - target[i]) * log_sigmoid(-z);
    term.d_logits[i] = sigmoid(z) - target[i];
  }
  return term;
}

// ---------------------------------------------------------------------------
// Hybrid

StochasticDraw draw_stochastic(const MultimodalDocument& doc, const DeepParams& params, SplitMode mode,
                               Rng& split_rng, Rng& dropout_rng) {
  StochasticDraw draw;
  draw.split = split_histogram(doc.counts, split_rng, mode);
  if (params.settings.dropout_rate > 0.0) {
    draw.generative_masks = draw_dropout_masks(params, dropout_rng);
    draw.supervised_masks = draw_dropout_masks(params, dropout_rng);
  }
  return draw;
}

namespace {

template <bool WithGradients>
double hybrid_impl(const MultimodalDocument& doc, const StochasticDraw& draw, const DeepParams& params,
                   const HybridOptions& options, DeepParams* grads) {
  const WeightVector omega(options.n_visual_slots, static_cast<std::uint32_t>(params.vocab_size()), options.rho);
  double loss = 0.0;

  if (options.lambda != 0.0 && draw.split) {
    const auto& split = *draw.split;
    const DropoutMasks* masks = draw.generative_masks ? &*draw.generative_masks : nullptr;
    const Vector input = preprocess_histogram(split.input, omega, params.settings);
    const auto acts = deep_forward(input, doc.global_features, params, masks);
    LossTerm gen = generative_loss(acts.top(), split.output, omega, split.d, split.total, params);
    loss += options.lambda * gen.loss;
    if constexpr (WithGradients) {
      const Vector d_logits = options.lambda * gen.d_logits;
      grads->b_out += d_logits;
      grads->V_out.noalias() += d_logits * acts.top().transpose();
      backprop_stack(acts, params, masks, params.V_out.transpose() * d_logits, *grads);
    }
  }

  if (options.supervised) {
    const DropoutMasks* masks = draw.supervised_masks ? &*draw.supervised_masks : nullptr;
    const Vector input = preprocess_histogram(doc.counts, omega, params.settings);
    const auto acts = deep_forward(input, doc.global_features, params, masks);
    LossTerm sup = supervised_loss(acts.top(), doc.labels, params, options.head);
    loss += sup.loss;
    if constexpr (WithGradients) {
      grads->d += sup.d_logits;
      grads->U.noalias() += sup.d_logits * acts.top().transpose();
      backprop_stack(acts, params, masks, params.U.transpose() * sup.d_logits, *grads);
    }
  }
  return loss;
}

}  // namespace

double hybrid_loss(const MultimodalDocument& doc, const StochasticDraw& draw, const DeepParams& params,
                   const HybridOptions& options) {
  return hybrid_impl<false>(doc, draw, params, options, nullptr);
}

double hybrid_gradients(const MultimodalDocument& doc, const StochasticDraw& draw, const DeepParams& params,
                        const HybridOptions& options, DeepParams& grads) {
  return hybrid_impl<true>(doc, draw, params, options, &grads);
}

double hybrid_gradients(const MultimodalDocument& doc, const DeepParams& params, const HybridOptions& options,
                        Rng& split_rng, Rng& dropout_rng, DeepParams& grads) {
  const StochasticDraw draw = draw_stochastic(doc, params, options.split_mode, split_rng, dropout_rng);
  return hybrid_gradients(doc, draw, params, options, grads);
}

// ---------------------------------------------------------------------------
// Inference

namespace {

SparseCounts counts_of(const std::vector<WordId>& tokens, std::size_t prefix) {
  std::vector<std::pair<WordId, std::uint32_t>> raw;
  for (std::size_t i = 0; i < prefix; ++i) raw.emplace_back(tokens[i], 1);
  return normalize_counts(std::move(raw));
}

}  // namespace

double exhaustive_ordering_loss(const MultimodalDocument& doc, const DeepParams& params, const WeightVector& omega) {
  std::vector<WordId> tokens;
  for (const auto& [id, count] : doc.counts) tokens.insert(tokens.end(), count, id);
  if (tokens.size() > 6)
    throw UsageError("exhaustive ordering loss is limited to 6 tokens, document has " +
                     std::to_string(tokens.size()));
  if (tokens.empty()) return 0.0;

  // Distinct multiset permutations each stand for the same number of token
  // permutations, so a plain average over them is the uniform expectation.
  double total = 0.0;
  std::size_t orderings = 0;
  std::sort(tokens.begin(), tokens.end());
  do {
    double loss = 0.0;
    for (std::size_t pos = 0; pos < tokens.size(); ++pos) {
      const Vector input = preprocess_histogram(counts_of(tokens, pos), omega, params.settings);
      const auto acts = deep_forward(input, doc.global_features, params);
      loss -= omega[tokens[pos]] * output_log_probs(acts.top(), params)[tokens[pos]];
    }
    total += loss;
    ++orderings;
  } while (std::next_permutation(tokens.begin(), tokens.end()));
  return total / static_cast<double>(orderings);
}

double deep_doc_log_likelihood(const std::vector<WordId>& ordering, const std::optional<Vector>& features,
                               const DeepParams& params, const WeightVector& omega) {
  double log_p = 0.0;
  std::vector<std::pair<WordId, std::uint32_t>> prefix;
  for (std::size_t pos = 0; pos < ordering.size(); ++pos) {
    const Vector input = preprocess_histogram(normalize_counts(prefix), omega, params.settings);
    const auto acts = deep_forward(input, features, params);
    require_dims(ordering[pos] < params.vocab_size(), "word id");
    log_p += output_log_probs(acts.top(), params)[ordering[pos]];
    prefix.emplace_back(ordering[pos], 1);
  }
  return log_p;
}

Vector deep_represent(const SparseCounts& counts, const std::optional<Vector>& features, const DeepParams& params,
                      const WeightVector& omega) {
  const Vector input = preprocess_histogram(counts, omega, params.settings);
  return deep_forward(input, features, params).top();
}

}  // namespace docnade
