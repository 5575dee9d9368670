#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/deep.hpp"
#include "docnade/shallow.hpp"
#include "docnade/word_tree.hpp"

namespace docnade {

enum class ModelKind : std::uint32_t { DocNADE = 0, SupDocNADE = 1, DeepDocNADE = 2, SupDeepDocNADE = 3 };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);
SupervisedHead parse_head(const std::string& name);
std::string to_string(SupervisedHead head);

constexpr bool is_deep(ModelKind kind) {
  return kind == ModelKind::DeepDocNADE || kind == ModelKind::SupDeepDocNADE;
}
constexpr bool is_supervised(ModelKind kind) {
  return kind == ModelKind::SupDocNADE || kind == ModelKind::SupDeepDocNADE;
}

struct VocabularyShape {
  std::uint32_t n_visual = 0;
  std::uint32_t n_regions = 1;
  std::uint32_t n_annotation = 0;

  std::uint32_t n_visual_slots() const { return n_visual * n_regions; }
  std::uint32_t size() const { return n_visual_slots() + n_annotation; }
  static VocabularyShape of(const JointVocabulary& vocab) {
    return {vocab.n_visual(), vocab.n_regions(), vocab.n_annotation()};
  }
  friend bool operator==(const VocabularyShape&, const VocabularyShape&) = default;
};

// A trained (or initialized) model of any kind. Shallow kinds use `tree` and
// `shallow`; deep kinds use `deep`.
struct Model {
  ModelKind kind = ModelKind::SupDocNADE;
  SupervisedHead head = SupervisedHead::Softmax;
  VocabularyShape vocab;
  std::uint32_t n_classes = 0;
  std::uint32_t n_features = 0;
  double rho = 1.0;

  WordTree tree;
  ShallowParams shallow;
  DeepParams deep;

  WeightVector weights() const { return WeightVector(vocab.n_visual_slots(), vocab.size(), rho); }

  // Throws DataError naming the first quantity that differs (Q, C, N_f).
  void check_compatible(const Corpus& corpus, bool check_classes = true) const;

  template <typename F>
  void for_each_array(F&& f) {
    if (is_deep(kind))
      deep.for_each_array(f);
    else
      shallow.for_each_array(f);
  }
  template <typename F>
  void for_each_array(F&& f) const {
    if (is_deep(kind))
      deep.for_each_array(f);
    else
      shallow.for_each_array(f);
  }
};

// Raw storage of every parameter array, in declared order. Two parameter sets
// of the same shape yield spans that correspond element by element.
template <typename Params>
std::vector<std::span<double>> array_spans(Params& params) {
  std::vector<std::span<double>> spans;
  params.for_each_array([&](const auto&, auto& a) { spans.emplace_back(a.data(), static_cast<std::size_t>(a.size())); });
  return spans;
}

template <typename Params>
std::vector<std::span<const double>> array_spans(const Params& params) {
  std::vector<std::span<const double>> spans;
  params.for_each_array(
      [&](const auto&, const auto& a) { spans.emplace_back(a.data(), static_cast<std::size_t>(a.size())); });
  return spans;
}

template <typename Params>
Params zeros_like(const Params& params) {
  Params out = params;
  out.for_each_array([](const auto&, auto& a) { a.setZero(); });
  return out;
}

template <typename Params>
void set_zero(Params& params) {
  params.for_each_array([](const auto&, auto& a) { a.setZero(); });
}

// dst += alpha * src
template <typename Params>
void add_scaled(Params& dst, const Params& src, double alpha) {
  auto d = array_spans(dst);
  auto s = array_spans(src);
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < d[i].size(); ++j) d[i][j] += alpha * s[i][j];
}

template <typename Params>
bool all_finite(const Params& params) {
  bool ok = true;
  params.for_each_array([&](const auto&, const auto& a) { ok = ok && a.allFinite(); });
  return ok;
}

template <typename Params>
bool bitwise_equal(const Params& a, const Params& b) {
  auto x = array_spans(a);
  auto y = array_spans(b);
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i].size() != y[i].size()) return false;
    if (!std::equal(x[i].begin(), x[i].end(), y[i].begin())) return false;
  }
  return true;
}

// Little-endian primitive encoding shared by model and checkpoint files.
class BinaryWriter {
 public:
  explicit BinaryWriter(std::ostream& out) : out_(out) {}
  void bytes(const void* data, std::size_t n);
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void f64(double v);
  void str(const std::string& s);
  // rows, cols, then entries in row-major order.
  template <typename Array>
  void array(const Array& a) {
    u64(static_cast<std::uint64_t>(a.rows()));
    u64(static_cast<std::uint64_t>(a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) f64(a(i, j));
  }

 private:
  std::ostream& out_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::istream& in) : in_(in) {}
  void bytes(void* data, std::size_t n);
  std::uint8_t u8() {
    std::uint8_t v;
    bytes(&v, 1);
    return v;
  }
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::string str();
  // Reads into an array whose shape is already set; shapes must match.
  template <typename Array>
  void array(Array& a, const std::string& name) {
    const auto rows = u64(), cols = u64();
    if (rows != static_cast<std::uint64_t>(a.rows()) || cols != static_cast<std::uint64_t>(a.cols()))
      throw DataError("array " + name + " has shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                      ", expected " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) a(i, j) = f64();
  }

 private:
  std::istream& in_;
};

inline constexpr char kModelMagic[8] = {'D', 'O', 'C', 'N', 'A', 'D', 'E', '\0'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const std::filesystem::path& path, const Model& model);
Model load_model(const std::filesystem::path& path);

// Named arrays of decimals (JSON), for debugging.
void export_model_text(std::ostream& out, const Model& model);

}  // namespace docnade
