#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "docnade/common.hpp"
#include "docnade/corpus.hpp"
#include "docnade/rng.hpp"

namespace docnade {

enum class SupervisedHead { Softmax, Sigmoid };

struct DeepLayer {
  Matrix W;  // H_n x H_{n-1}, H_0 = Q
  Vector c;  // H_n
};

// Non-trainable settings that change how inputs and activations are formed.
struct DeepSettings {
  double dropout_rate = 0.0;  // inference scales activations by 1 - rate
  bool unit_variance = true;  // per-document rescale of the input histogram
};

// DeepDocNADE / SupDeepDocNADE weights with a softmax output over the joint
// vocabulary.
struct DeepParams {
  std::vector<DeepLayer> layers;
  Matrix P;         // H_1 x N_f, global feature weights (N_f may be 0)
  RowMatrix V_out;  // Q x H_N
  Vector b_out;     // Q
  RowMatrix U;      // C x H_N (C = 0 for unsupervised)
  Vector d;         // C
  DeepSettings settings;

  // hidden_sizes = {H_1, ..., H_N}, N >= 1.
  static DeepParams zeros(Eigen::Index vocab_size, const std::vector<Eigen::Index>& hidden_sizes,
                          Eigen::Index num_classes, Eigen::Index num_features);

  std::size_t depth() const { return layers.size(); }
  Eigen::Index vocab_size() const { return layers.front().W.cols(); }
  Eigen::Index top_size() const { return layers.back().W.rows(); }
  Eigen::Index num_classes() const { return U.rows(); }
  Eigen::Index num_features() const { return P.cols(); }
  std::vector<Eigen::Index> hidden_sizes() const;

  void check() const;

  template <typename F>
  void for_each_array(F&& f) {
    for (std::size_t n = 0; n < layers.size(); ++n) {
      f("W" + std::to_string(n + 1), layers[n].W);
      f("c" + std::to_string(n + 1), layers[n].c);
    }
    f(std::string("P"), P);
    f(std::string("V_out"), V_out);
    f(std::string("b_out"), b_out);
    f(std::string("U"), U);
    f(std::string("d"), d);
  }
  template <typename F>
  void for_each_array(F&& f) const {
    for (std::size_t n = 0; n < layers.size(); ++n) {
      f("W" + std::to_string(n + 1), layers[n].W);
      f("c" + std::to_string(n + 1), layers[n].c);
    }
    f(std::string("P"), P);
    f(std::string("V_out"), V_out);
    f(std::string("b_out"), b_out);
    f(std::string("U"), U);
    f(std::string("d"), d);
  }
};

// ---------------------------------------------------------------------------
// Histogram split

enum class SplitMode {
  // d uniform on {1..D}, then a uniformly random (d-1)-token sub-multiset as
  // input: exactly the prefix distribution of a uniform random ordering.
  UniformPrefix,
  // Per word, the number of tokens placed on the input side is uniform on
  // {0..count}; splits leaving the output empty are redrawn. Faster but not
  // distributed like ordering prefixes.
  PerWordUniform,
};

struct HistogramSplit {
  SparseCounts input;   // tokens v_{o<d}
  SparseCounts output;  // tokens v_{o>=d}, never empty
  std::uint64_t d = 1;  // split position, 1-based
  std::uint64_t total = 0;
};

// Returns nullopt for an empty document (nothing to predict).
std::optional<HistogramSplit> split_histogram(const SparseCounts& counts, Rng& rng,
                                              SplitMode mode = SplitMode::UniformPrefix);

// Weighted histogram, divided by the standard deviation of its Q components
// when settings.unit_variance is set and that deviation is >= 1e-12.
Vector preprocess_histogram(const SparseCounts& counts, const WeightVector& omega,
                            const DeepSettings& settings);

// ---------------------------------------------------------------------------
// Forward pass

using DropoutMasks = std::vector<Vector>;  // one 0/1 vector per hidden layer

struct DeepActivations {
  Vector input;
  std::optional<Vector> features;
  std::vector<Vector> pre;     // a^(n)
  std::vector<Vector> hidden;  // h^(n), after mask (training) or keep scaling (inference)
  const Vector& top() const { return hidden.back(); }
};

// h^(1) = g(c^(1) + W^(1) x + P f), h^(n) = g(c^(n) + W^(n) h^(n-1)).
// With masks, each h^(n) is multiplied by its mask; without, by the keep
// probability 1 - settings.dropout_rate.
DeepActivations deep_forward(const Vector& input, const std::optional<Vector>& features,
                             const DeepParams& params, const DropoutMasks* masks = nullptr);

DropoutMasks draw_dropout_masks(const DeepParams& params, Rng& rng);

// ---------------------------------------------------------------------------
// Loss terms

Vector output_log_probs(const Vector& top, const DeepParams& params);

struct LossTerm {
  double loss = 0.0;
  Vector d_logits;  // gradient of loss w.r.t. the pre-softmax/sigmoid logits
};

// (D/(D-d+1)) * sum_w output[w] * Phi_w(rho) * (-log softmax(b_out + V_out h)[w]).
LossTerm generative_loss(const Vector& top, const SparseCounts& output, const WeightVector& omega,
                         std::uint64_t d, std::uint64_t total, const DeepParams& params);

// Softmax head: -log softmax(d + U h)[y] (exactly one label required).
// Sigmoid head: sum_i cross-entropy of sigm(d_i + U_i h) against label i.
LossTerm supervised_loss(const Vector& top, const std::vector<std::uint32_t>& labels,
                         const DeepParams& params, SupervisedHead head);

// ---------------------------------------------------------------------------
// Hybrid objective

struct HybridOptions {
  double lambda = 1.0;     // weight of the generative term
  double rho = 1.0;        // annotation weight
  std::uint32_t n_visual_slots = 0;
  bool supervised = true;  // include -log p(y | v)
  SupervisedHead head = SupervisedHead::Softmax;
  SplitMode split_mode = SplitMode::UniformPrefix;
};

// Everything random in one stochastic update, frozen so the loss is a
// deterministic function of the parameters.
struct StochasticDraw {
  std::optional<HistogramSplit> split;  // absent: no generative term
  std::optional<DropoutMasks> generative_masks;
  std::optional<DropoutMasks> supervised_masks;
};

StochasticDraw draw_stochastic(const MultimodalDocument& doc, const DeepParams& params,
                               SplitMode mode, Rng& split_rng, Rng& dropout_rng);

double hybrid_loss(const MultimodalDocument& doc, const StochasticDraw& draw, const DeepParams& params,
                   const HybridOptions& options);

// Accumulates gradients of hybrid_loss into grads and returns the loss. The
// supervised term sees the full document; the generative term sees the
// split's input side and predicts its output side.
double hybrid_gradients(const MultimodalDocument& doc, const StochasticDraw& draw, const DeepParams& params,
                        const HybridOptions& options, DeepParams& grads);

double hybrid_gradients(const MultimodalDocument& doc, const DeepParams& params, const HybridOptions& options,
                        Rng& split_rng, Rng& dropout_rng, DeepParams& grads);

// ---------------------------------------------------------------------------
// Inference

// Exact expectation over all distinct orderings of
// sum_d Phi(v_d) * (-log p(v_d | v_<d)), at inference-mode activations.
// Throws UsageError above 6 tokens.
double exhaustive_ordering_loss(const MultimodalDocument& doc, const DeepParams& params,
                                const WeightVector& omega);

// log p(v | o) = sum_d log p(v_d | v_<d) for one ordering (no weighting).
double deep_doc_log_likelihood(const std::vector<WordId>& ordering, const std::optional<Vector>& features,
                               const DeepParams& params, const WeightVector& omega);

// Top-layer representation of the full (weighted, normalized) document.
Vector deep_represent(const SparseCounts& counts, const std::optional<Vector>& features,
                      const DeepParams& params, const WeightVector& omega);

}  // namespace docnade
