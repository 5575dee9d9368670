#include "oracles.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>
#include <set>

namespace docnade::testing {

Matrix naive_hidden_states(const OrderedDocument& doc, const ShallowParams& params) {
  const auto n = static_cast<Eigen::Index>(doc.size());
  Matrix out(params.hidden(), n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) {
    Vector a = params.c;
    for (Eigen::Index k = 0; k < i; ++k) a += params.W.col(doc.tokens[static_cast<std::size_t>(k)]);
    out.col(i) = a.cwiseMax(0.0);
  }
  return out;
}

double min_abs_preactivation(const OrderedDocument& doc, const ShallowParams& params) {
  double m = std::numeric_limits<double>::infinity();
  Vector a = params.c;
  for (std::size_t i = 0; i <= doc.size(); ++i) {
    m = std::min(m, a.cwiseAbs().minCoeff());
    if (i < doc.size()) a += params.W.col(doc.tokens[i]);
  }
  return m;
}

double min_abs_preactivation(const DeepActivations& acts) {
  double m = std::numeric_limits<double>::infinity();
  for (const auto& a : acts.pre) m = std::min(m, a.cwiseAbs().minCoeff());
  return m;
}

double naive_word_prob(const WordTree& tree, const Vector& h, WordId w, const RowMatrix& V, const Vector& b) {
  // Walk up from the leaf's heap position to the root.
  const std::uint32_t q = tree.num_leaves();
  std::uint32_t pos = q - 1 + tree.slot_of(w);
  double p = 1.0;
  while (pos > 0) {
    const std::uint32_t parent = (pos - 1) / 2;
    const bool right = pos == 2 * parent + 2;
    const double a = b[parent] + V.row(parent).dot(h);
    const double s = 1.0 / (1.0 + std::exp(-a));
    p *= right ? s : 1.0 - s;
    pos = parent;
  }
  return p;
}

double naive_doc_log_likelihood(const OrderedDocument& doc, const ShallowParams& params, const WordTree& tree) {
  const Matrix h = naive_hidden_states(doc, params);
  double lp = 0.0;
  for (std::size_t i = 0; i < doc.size(); ++i)
    lp += std::log(naive_word_prob(tree, h.col(static_cast<Eigen::Index>(i)), doc.tokens[i], params.V, params.b));
  return lp;
}

double split_estimator_expectation(const MultimodalDocument& doc, const DeepParams& params, const WeightVector& omega) {
  std::vector<WordId> tokens;
  for (const auto& [id, count] : doc.counts) tokens.insert(tokens.end(), count, id);
  const std::size_t total = tokens.size();
  const auto choose = [](std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
  };
  HybridOptions options;
  options.lambda = 1.0;
  options.rho = omega.rho();
  options.n_visual_slots = omega.n_visual_slots();
  options.supervised = false;
  double expectation = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << total); ++mask) {
    const auto in_size = static_cast<std::size_t>(std::popcount(mask));
    if (in_size >= total) continue;  // output side must be nonempty
    std::vector<std::pair<WordId, std::uint32_t>> in, out;
    for (std::size_t t = 0; t < total; ++t) ((mask >> t) & 1 ? in : out).emplace_back(tokens[t], 1);
    StochasticDraw draw;
    HistogramSplit split;
    split.input = normalize_counts(in);
    split.output = normalize_counts(out);
    split.d = in_size + 1;
    split.total = total;
    draw.split = split;
    const double weight = 1.0 / static_cast<double>(total) / choose(total, in_size);
    expectation += weight * hybrid_loss(doc, draw, params, options);
  }
  return expectation;
}

namespace {
template <typename Params>
void fill_uniform(Params& p, Rng& rng, double scale) {
  p.for_each_array([&](const auto&, auto& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = rng.uniform(-scale, scale);
  });
}
}  // namespace

ShallowParams random_shallow(Eigen::Index hidden, Eigen::Index q, Eigen::Index classes, Rng& rng, double scale) {
  auto p = ShallowParams::zeros(hidden, q, classes);
  fill_uniform(p, rng, scale);
  return p;
}

DeepParams random_deep(Eigen::Index q, const std::vector<Eigen::Index>& sizes, Eigen::Index classes,
                       Eigen::Index features, Rng& rng, double scale) {
  auto p = DeepParams::zeros(q, sizes, classes, features);
  fill_uniform(p, rng, scale);
  return p;
}

SparseCounts random_counts(std::uint32_t q, std::uint32_t max_tokens, Rng& rng, std::uint32_t min_tokens) {
  const auto n = min_tokens + static_cast<std::uint32_t>(rng.below(max_tokens - min_tokens + 1));
  std::vector<std::pair<WordId, std::uint32_t>> raw;
  for (std::uint32_t i = 0; i < n; ++i) raw.emplace_back(static_cast<WordId>(rng.below(q)), 1);
  return normalize_counts(std::move(raw));
}

double f_measure_oracle(const std::vector<std::uint32_t>& predicted, const std::vector<std::uint32_t>& truth) {
  const std::set<std::uint32_t> p(predicted.begin(), predicted.end()), g(truth.begin(), truth.end());
  std::size_t hits = 0;
  for (auto x : p) hits += g.count(x);
  if (hits == 0) return 0.0;
  const double precision = static_cast<double>(hits) / p.size();
  const double recall = static_cast<double>(hits) / g.size();
  return 2.0 * precision * recall / (precision + recall);
}

double average_precision_oracle(const std::vector<double>& scores, const std::vector<bool>& relevant) {
  std::vector<std::pair<double, std::size_t>> items;
  for (std::size_t i = 0; i < scores.size(); ++i) items.emplace_back(scores[i], i);
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  const auto total = static_cast<double>(std::count(relevant.begin(), relevant.end(), true));
  std::vector<std::pair<double, double>> pr;  // (recall, precision) after each rank
  double hits = 0.0;
  for (std::size_t k = 0; k < items.size(); ++k) {
    if (relevant[items[k].second]) hits += 1.0;
    pr.emplace_back(hits / total, hits / static_cast<double>(k + 1));
  }
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& [r, p] : pr) {
    ap += p * (r - prev_recall);
    prev_recall = r;
  }
  return ap;
}

std::vector<std::uint32_t> cosine_ranking_oracle(const Vector& query, const std::vector<Vector>& collection) {
  std::vector<std::pair<double, std::uint32_t>> sims;
  for (std::uint32_t i = 0; i < collection.size(); ++i) {
    double dot = 0.0, nq = 0.0, nc = 0.0;
    for (Eigen::Index j = 0; j < query.size(); ++j) {
      dot += query[j] * collection[i][j];
      nq += query[j] * query[j];
      nc += collection[i][j] * collection[i][j];
    }
    sims.emplace_back(nq == 0.0 || nc == 0.0 ? 0.0 : dot / (std::sqrt(nq) * std::sqrt(nc)), i);
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::uint32_t> ids;
  for (const auto& s : sims) ids.push_back(s.second);
  return ids;
}

}  // namespace docnade::testing
