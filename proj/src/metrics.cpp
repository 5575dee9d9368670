#include "docnade/metrics.hpp"

#include <algorithm>
#include <memory>
#include <numeric>

namespace docnade {

RankedPrediction rank_top_k(std::span<const std::uint32_t> ids, std::span<const double> scores, std::size_t k) {
  require(ids.size() == scores.size(), "ids and scores differ in length");
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  const auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return ids[a] < ids[b];
  };
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), better);
  RankedPrediction out;
  out.ids.reserve(k);
  out.scores.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.ids.push_back(ids[order[i]]);
    out.scores.push_back(scores[order[i]]);
  }
  return out;
}

namespace {

std::vector<std::uint32_t> unique_sorted(std::span<const std::uint32_t> xs) {
  std::vector<std::uint32_t> v(xs.begin(), xs.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::vector<std::size_t> rank_order(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

}  // namespace

std::optional<double> f_measure(std::span<const std::uint32_t> predicted,
                                std::span<const std::uint32_t> ground_truth) {
  const auto g = unique_sorted(ground_truth);
  if (g.empty()) return std::nullopt;
  const auto p = unique_sorted(predicted);
  std::vector<std::uint32_t> both;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(both));
  if (both.empty()) return 0.0;
  const double precision = static_cast<double>(both.size()) / static_cast<double>(p.size());
  const double recall = static_cast<double>(both.size()) / static_cast<double>(g.size());
  return 2.0 * precision * recall / (precision + recall);
}

std::optional<double> average_precision(std::span<const double> scores, std::span<const bool> relevant) {
  require(scores.size() == relevant.size(), "scores and relevance flags differ in length");
  double sum = 0.0;
  std::size_t hits = 0;
  const auto order = rank_order(scores);
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (!relevant[order[r]]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  if (hits == 0) return std::nullopt;
  return sum / static_cast<double>(hits);
}

std::vector<PrPoint> precision_recall_curve(std::span<const double> scores, std::span<const bool> relevant) {
  require(scores.size() == relevant.size(), "scores and relevance flags differ in length");
  const auto total = static_cast<double>(std::count(relevant.begin(), relevant.end(), true));
  std::vector<PrPoint> curve;
  curve.reserve(scores.size());
  std::size_t hits = 0;
  const auto order = rank_order(scores);
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (relevant[order[r]]) ++hits;
    curve.push_back({total > 0 ? static_cast<double>(hits) / total : 0.0,
                     static_cast<double>(hits) / static_cast<double>(r + 1)});
  }
  return curve;
}

MeanAveragePrecision mean_average_precision(const Matrix& scores,
                                            const std::vector<std::vector<std::uint32_t>>& relevant) {
  require(static_cast<std::size_t>(scores.rows()) == relevant.size(), "score rows and label lists differ");
  MeanAveragePrecision out;
  const auto n = static_cast<std::size_t>(scores.rows());
  double sum = 0.0;
  std::size_t included = 0;
  std::vector<double> column(n);
  std::unique_ptr<bool[]> flags(new bool[n]);
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      column[i] = scores(static_cast<Eigen::Index>(i), c);
      const auto& labels = relevant[i];
      flags[i] = std::find(labels.begin(), labels.end(), static_cast<std::uint32_t>(c)) != labels.end();
    }
    auto ap = average_precision(column, std::span<const bool>(flags.get(), n));
    out.per_class.push_back(ap);
    if (ap) {
      sum += *ap;
      ++included;
    } else {
      ++out.excluded;
    }
  }
  out.value = included ? sum / static_cast<double>(included) : 0.0;
  return out;
}

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth) {
  if (predicted.size() != truth.size())
    throw DataError("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
                    std::to_string(truth.size()) + " labels");
  require(!truth.empty(), "accuracy of an empty set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double cosine_similarity(const Vector& a, const Vector& b) {
  require_dims(a.size() == b.size(), "cosine of vectors of different length");
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

RetrievalResult cosine_retrieve(const Vector& query, const std::vector<Vector>& collection, std::size_t k) {
  std::vector<std::uint32_t> ids(collection.size());
  std::vector<double> sims(collection.size());
  for (std::size_t i = 0; i < collection.size(); ++i) {
    ids[i] = static_cast<std::uint32_t>(i);
    sims[i] = cosine_similarity(query, collection[i]);
  }
  RetrievalResult out;
  out.k_exceeds_collection = k > collection.size();
  out.ranking = rank_top_k(ids, sims, k);
  return out;
}

}  // namespace docnade
