#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace docnade {

// Ids ordered by non-increasing score; equal scores keep ascending id order.
struct RankedPrediction {
  std::vector<std::uint32_t> ids;
  std::vector<double> scores;

  std::size_t size() const { return ids.size(); }
};

// Top-k of (id, score) pairs under the ranking rule above. k larger than the
// candidate count returns every candidate.
RankedPrediction rank_top_k(std::span<const std::uint32_t> ids, std::span<const double> scores,
                            std::size_t k);

}  // namespace docnade
