#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "docnade/common.hpp"
#include "docnade/ranking.hpp"

namespace docnade {

// Harmonic mean of precision and recall of `predicted` against
// `ground_truth`, both deduplicated first. nullopt when the ground truth is
// empty; 0 when the intersection is empty.
std::optional<double> f_measure(std::span<const std::uint32_t> predicted,
                                std::span<const std::uint32_t> ground_truth);

// Mean over relevant items (in ranking order) of precision at that rank.
// nullopt without relevant items.
std::optional<double> average_precision(std::span<const double> scores, std::span<const bool> relevant);

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};

// One point per ranked item, in ranking order.
std::vector<PrPoint> precision_recall_curve(std::span<const double> scores, std::span<const bool> relevant);

struct MeanAveragePrecision {
  double value = 0.0;                           // mean over included classes
  std::vector<std::optional<double>> per_class;  // nullopt: class excluded
  std::size_t excluded = 0;
};

// scores(i, c) is item i's score for class c; relevant[i] lists i's labels.
MeanAveragePrecision mean_average_precision(const Matrix& scores,
                                            const std::vector<std::vector<std::uint32_t>>& relevant);

double accuracy(std::span<const std::uint32_t> predicted, std::span<const std::uint32_t> truth);

// 0 when either vector is zero.
double cosine_similarity(const Vector& a, const Vector& b);

struct RetrievalResult {
  RankedPrediction ranking;
  bool k_exceeds_collection = false;  // the full ranking was returned
};

RetrievalResult cosine_retrieve(const Vector& query, const std::vector<Vector>& collection, std::size_t k);

}  // namespace docnade
