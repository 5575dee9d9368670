#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace docnade {

using WordId = std::uint32_t;

using Vector = Eigen::VectorXd;
// Column-major: column slices (word embeddings W(:, w)) are contiguous.
using Matrix = Eigen::MatrixXd;
// Row-major: row slices (output/logistic weights V(n, :)) are contiguous.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Sparse word counts, sorted by id, no zero entries.
using SparseCounts = std::vector<std::pair<WordId, std::uint32_t>>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input files, out-of-range ids, incompatible dimensions.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid arguments or option combinations supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Non-finite losses or parameters.
class NumericError : public Error {
 public:
  using Error::Error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw UsageError(message);
}

inline void require_dims(bool condition, const std::string& message) {
  if (!condition) throw DataError("dimension mismatch: " + message);
}

}  // namespace docnade
