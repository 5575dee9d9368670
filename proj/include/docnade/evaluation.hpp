#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/metrics.hpp"
#include "docnade/model.hpp"
#include "docnade/rng.hpp"

namespace docnade {

// exp(-sum_docs mean_o log p(v | o) / sum_docs D), averaging over
// `orderings_per_doc` random orderings per document. Empty documents add
// nothing.
double perplexity(const Corpus& corpus, const ShallowParams& params, const WordTree& tree,
                  std::size_t orderings_per_doc, Rng& rng);
double perplexity(const Corpus& corpus, const Model& model, std::size_t orderings_per_doc, Rng& rng);

// Hidden (top-layer) representation of a document.
Vector document_representation(const Model& model, const MultimodalDocument& doc, RepresentationScope scope);

// p(y | v) for every class; softmax or independent sigmoids per the head.
Vector class_probabilities(const Model& model, const MultimodalDocument& doc);

// ---------------------------------------------------------------------------
// Downstream classifier on extracted representations

enum class ClassifierKind { Softmax, Sigmoid };

struct LinearClassifier {
  RowMatrix weights;  // C x H
  Vector bias;        // C
  ClassifierKind kind = ClassifierKind::Softmax;

  Vector probabilities(const Vector& representation) const;
  std::uint32_t predict(const Vector& representation) const;
};

struct ClassifierOptions {
  double l2 = 1e-3;  // penalty on weights (not biases), standardized inputs
  double tolerance = 1e-6;
  std::size_t max_iterations = 5000;
};

// Regularized maximum likelihood by gradient descent with backtracking line
// search, starting from zero. Softmax needs exactly one label per item.
LinearClassifier fit_linear_classifier(const std::vector<Vector>& representations,
                                       const std::vector<std::vector<std::uint32_t>>& labels,
                                       std::uint32_t n_classes, ClassifierKind kind,
                                       const ClassifierOptions& options = {});

// ---------------------------------------------------------------------------
// Annotation

// Probabilities of each annotation id being the next word given only the
// visual words of `doc`, renormalized over annotation ids. Index i is id
// n_visual_slots + i.
Vector annotation_distribution(const Model& model, const MultimodalDocument& doc);

// Top-k annotation ids for the visual words of `doc`.
RankedPrediction generate_text(const Model& model, const MultimodalDocument& doc, std::size_t k);

struct ClassAssociations {
  std::vector<std::uint32_t> topics;
  Vector word_scores;  // mean of the selected rows of W, length Q
  RankedPrediction visual;
  RankedPrediction annotation;
};

ClassAssociations class_word_associations(const ShallowParams& params, std::uint32_t class_index,
                                          std::size_t top_topics, std::size_t top_words,
                                          std::uint32_t n_visual_slots);

// ---------------------------------------------------------------------------
// Reports

struct MetricRecord {
  std::string metric;
  std::string split;
  double value = 0.0;
};

struct EvalOptions {
  std::string split = "test";
  std::size_t annotation_k = 5;
  std::size_t perplexity_orderings = 1;
  std::uint64_t seed = 0;
};

struct EvalReport {
  std::vector<MetricRecord> records;
  std::vector<std::size_t> f_measure_excluded;  // documents without annotations
  std::vector<std::vector<PrPoint>> pr_curves;  // per class, multi-label only
};

// Accuracy and F-measure for single-label models, MAP (and F-measure) for
// multi-label ones, perplexity for unsupervised ones.
EvalReport evaluate(const Model& model, const Corpus& corpus, const EvalOptions& options = {});

// {"metric": ..., "split": ..., "value": ...} per line.
void write_report_records(std::ostream& out, const EvalReport& report);
void write_report_table(std::ostream& out, const EvalReport& report);
// "recall precision" per line.
void write_pr_curve(std::ostream& out, const std::vector<PrPoint>& curve);

}  // namespace docnade
