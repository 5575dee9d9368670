#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "docnade/common.hpp"

namespace docnade {

struct VisualToken {
  std::uint32_t visual_word = 0;
  std::uint32_t region = 0;
  friend bool operator==(const VisualToken&, const VisualToken&) = default;
};

struct AnnotationToken {
  std::uint32_t index = 0;  // position in the annotation word list
  friend bool operator==(const AnnotationToken&, const AnnotationToken&) = default;
};

using DecodedToken = std::variant<VisualToken, AnnotationToken>;

// Joint id space over visual-word/region pairs followed by annotation words.
//
//   id = region * n_visual + visual_word              for visual tokens
//   id = n_visual * n_regions + annotation_index      for annotation words
class JointVocabulary {
 public:
  JointVocabulary() = default;

  std::uint32_t n_visual() const { return n_visual_; }
  std::uint32_t n_regions() const { return n_regions_; }
  std::uint32_t n_annotation() const { return static_cast<std::uint32_t>(annotation_words_.size()); }
  std::uint32_t n_visual_slots() const { return n_visual_ * n_regions_; }
  std::uint32_t size() const { return n_visual_slots() + n_annotation(); }

  bool is_annotation(WordId id) const { return id >= n_visual_slots() && id < size(); }

  WordId visual_id(std::uint32_t visual_word, std::uint32_t region) const;
  WordId annotation_id(const std::string& word) const;
  WordId annotation_id(std::uint32_t index) const;
  DecodedToken decode(WordId id) const;

  const std::vector<std::string>& annotation_words() const { return annotation_words_; }
  const std::string& annotation_word(WordId id) const;

  friend bool operator==(const JointVocabulary& a, const JointVocabulary& b) {
    return a.n_visual_ == b.n_visual_ && a.n_regions_ == b.n_regions_ &&
           a.annotation_words_ == b.annotation_words_;
  }

 private:
  friend JointVocabulary build_vocabulary(std::uint32_t, std::uint32_t,
                                          const std::vector<std::string>&);
  std::uint32_t n_visual_ = 0;
  std::uint32_t n_regions_ = 0;
  std::vector<std::string> annotation_words_;
  std::unordered_map<std::string, std::uint32_t> annotation_index_;
};

// Throws UsageError on n_visual/n_regions of zero and DataError on a duplicate
// annotation word (the message names it).
JointVocabulary build_vocabulary(std::uint32_t n_visual, std::uint32_t n_regions,
                                 const std::vector<std::string>& annotation_words);

struct MultimodalDocument {
  SparseCounts counts;                 // sorted by id, positive counts only
  std::vector<std::uint32_t> labels;   // sorted, unique
  std::optional<Vector> global_features;

  std::uint64_t total_tokens() const;
  std::uint64_t annotation_tokens(const JointVocabulary& vocab) const;

  // Same document with every annotation id removed.
  MultimodalDocument visual_only(const JointVocabulary& vocab) const;

  friend bool operator==(const MultimodalDocument& a, const MultimodalDocument& b);
};

// Merges duplicate ids, drops zero counts and sorts.
SparseCounts normalize_counts(std::vector<std::pair<WordId, std::uint32_t>> raw);

struct Corpus {
  JointVocabulary vocabulary;
  std::vector<MultimodalDocument> documents;
  std::uint32_t n_classes = 0;
  std::uint32_t n_features = 0;

  // Throws DataError naming the first offending document.
  void validate() const;
};

void validate_document(const MultimodalDocument& doc, const JointVocabulary& vocab,
                       std::uint32_t n_classes, std::uint32_t n_features);

enum class CorpusFormat { TextSparse, RecordLines };

CorpusFormat parse_corpus_format(const std::string& name);
std::string to_string(CorpusFormat format);

// Sidecar header: "key value" lines (n_visual, n_regions, n_annotation, C,
// N_f), optional "annotation_words w1 w2 ..." line, '#' comments.
struct CorpusHeader {
  std::uint32_t n_visual = 0;
  std::uint32_t n_regions = 1;
  std::uint32_t n_annotation = 0;
  std::uint32_t n_classes = 0;
  std::uint32_t n_features = 0;
  std::vector<std::string> annotation_words;  // empty: synthesized names

  JointVocabulary vocabulary() const;
  static CorpusHeader from(const Corpus& corpus);
};

CorpusHeader read_corpus_header(const std::filesystem::path& path);
void write_corpus_header(const std::filesystem::path& path, const CorpusHeader& header);

// Default sidecar location: "<corpus path>.header".
std::filesystem::path default_header_path(const std::filesystem::path& corpus_path);

// Record-lines files may carry their header as a first {"header": {...}}
// record; otherwise (and always for text-sparse) the sidecar is read.
Corpus parse_corpus(const std::filesystem::path& path, CorpusFormat format,
                    const std::optional<std::filesystem::path>& header_path = std::nullopt);

Corpus parse_text_sparse(std::istream& in, const CorpusHeader& header);
Corpus parse_record_lines(std::istream& in, const std::optional<CorpusHeader>& header);

void write_text_sparse(std::ostream& out, const Corpus& corpus);
void write_record_lines(std::ostream& out, const Corpus& corpus, bool embed_header = true);

// Writes the corpus file and, for text-sparse, its sidecar header.
void write_corpus(const std::filesystem::path& path, const Corpus& corpus, CorpusFormat format);

// omega(rho): 1 on visual ids, rho on annotation ids.
class WeightVector {
 public:
  WeightVector(const JointVocabulary& vocab, double rho);
  WeightVector(std::uint32_t n_visual_slots, std::uint32_t size, double rho);

  double operator[](WordId id) const { return id < n_visual_slots_ ? 1.0 : rho_; }
  std::uint32_t size() const { return size_; }
  std::uint32_t n_visual_slots() const { return n_visual_slots_; }
  double rho() const { return rho_; }
  Vector dense() const;

 private:
  std::uint32_t n_visual_slots_;
  std::uint32_t size_;
  double rho_;
};

// result[i] = counts[i] * omega[i]. Ids beyond omega raise DataError.
Vector to_weighted_histogram(const SparseCounts& counts, const WeightVector& omega);
// Additionally requires omega to span exactly the vocabulary.
Vector to_weighted_histogram(const MultimodalDocument& doc, const WeightVector& omega,
                             const JointVocabulary& vocab);

}  // namespace docnade
