#pragma once

// Slow, direct recomputations used to check the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "docnade/deep.hpp"
#include "docnade/metrics.hpp"
#include "docnade/model.hpp"
#include "docnade/shallow.hpp"
#include "docnade/word_tree.hpp"

namespace docnade::testing {

struct GradientCheck {
  double max_relative_error = 0.0;
  std::string worst;  // "<array>[<index>]: analytic a, numeric n"
  std::size_t checked = 0;
};

// Relative error |a - n| / max(|a|, |n|, floor).
inline double relative_error(double a, double n, double floor = 1e-6) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Central differences of `loss` over every entry of `params`, compared with
// `analytic` (same shape).
template <typename Params>
GradientCheck check_gradients(Params params, const Params& analytic, const std::function<double(const Params&)>& loss,
                              double step = 1e-4) {
  GradientCheck out;
  std::vector<std::string> names;
  params.for_each_array([&](const auto& name, const auto&) { names.emplace_back(name); });
  auto p = array_spans(params);
  auto g = array_spans(analytic);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < p[i].size(); ++j) {
      const double saved = p[i][j];
      p[i][j] = saved + step;
      const double up = loss(params);
      p[i][j] = saved - step;
      const double down = loss(params);
      p[i][j] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(g[i][j], numeric);
      ++out.checked;
      if (err > out.max_relative_error) {
        out.max_relative_error = err;
        out.worst = names[i] + "[" + std::to_string(j) + "]: analytic " + std::to_string(g[i][j]) + ", numeric " +
                    std::to_string(numeric);
      }
    }
  }
  return out;
}

// sum_k W(:, v_k) for k < i, recomputed from scratch at every position.
Matrix naive_hidden_states(const OrderedDocument& doc, const ShallowParams& params);

// Smallest |pre-activation| over every position of a shallow pass.
double min_abs_preactivation(const OrderedDocument& doc, const ShallowParams& params);
// Same for every layer of a deep forward pass.
double min_abs_preactivation(const DeepActivations& acts);

// p(w | h) as an explicit product over the root-to-leaf branch decisions.
double naive_word_prob(const WordTree& tree, const Vector& h, WordId w, const RowMatrix& V, const Vector& b);

// log p(v) from naive hidden states and naive tree probabilities.
double naive_doc_log_likelihood(const OrderedDocument& doc, const ShallowParams& params, const WordTree& tree);

// Exact expectation of the split estimator (generative term, lambda = 1, no
// dropout) by enumerating every token subset, weighting a subset of size d-1
// by (1/D) / C(D, d-1).
double split_estimator_expectation(const MultimodalDocument& doc, const DeepParams& params, const WeightVector& omega);

// Random parameters with entries uniform on [-scale, scale].
ShallowParams random_shallow(Eigen::Index hidden, Eigen::Index q, Eigen::Index classes, Rng& rng,
                             double scale = 1.0);
DeepParams random_deep(Eigen::Index q, const std::vector<Eigen::Index>& sizes, Eigen::Index classes,
                       Eigen::Index features, Rng& rng, double scale = 1.0);
SparseCounts random_counts(std::uint32_t q, std::uint32_t max_tokens, Rng& rng, std::uint32_t min_tokens = 1);

// Metric oracles
double f_measure_oracle(const std::vector<std::uint32_t>& predicted, const std::vector<std::uint32_t>& truth);
// sum_k precision(k) * (recall(k) - recall(k-1)) over an explicit PR list
// built by sorting (score desc, index asc).
double average_precision_oracle(const std::vector<double>& scores, const std::vector<bool>& relevant);
// Every pair (similarity, index) sorted by similarity desc, index asc.
std::vector<std::uint32_t> cosine_ranking_oracle(const Vector& query, const std::vector<Vector>& collection);

}  // namespace docnade::testing
