#pragma once

#include <cstdint>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/rng.hpp"

namespace docnade::testing {

// Multinomial mixture with one component per class. Each class owns a block
// of visual words and a block of annotation words; a document draws each
// token from its class block with probability `specific_mass`, otherwise
// uniformly from the whole modality.
struct SyntheticSpec {
  std::uint32_t n_classes = 8;
  std::uint32_t n_visual = 160;
  std::uint32_t n_annotation = 48;
  std::uint32_t visual_per_class = 15;
  std::uint32_t annotation_per_class = 5;
  std::uint32_t visual_tokens = 25;
  std::uint32_t annotation_tokens = 3;
  double visual_specific_mass = 0.2;
  double annotation_specific_mass = 0.6;
  // Every document carries exactly its class's annotation block, once each,
  // instead of sampled annotation tokens.
  bool deterministic_annotations = false;
};

class SyntheticGenerator {
 public:
  explicit SyntheticGenerator(SyntheticSpec spec);

  const SyntheticSpec& spec() const { return spec_; }
  const JointVocabulary& vocabulary() const { return vocab_; }

  // `docs_per_class` documents of every class, classes interleaved.
  Corpus generate(std::uint32_t docs_per_class, Rng& rng) const;
  MultimodalDocument sample(std::uint32_t label, Rng& rng) const;

  // Class-conditional probability of a visual or annotation id.
  double word_prob(std::uint32_t label, WordId id) const;

  // argmax_c log p(c) + sum_w n_w log p(w | c) with uniform class priors.
  std::uint32_t bayes_label(const MultimodalDocument& doc, bool visual_only = false) const;
  // Monte Carlo estimate of the Bayes classifier's accuracy.
  double bayes_accuracy(std::uint32_t samples, Rng& rng, bool visual_only = false) const;

  std::vector<WordId> class_annotations(std::uint32_t label) const;

 private:
  SyntheticSpec spec_;
  JointVocabulary vocab_;
};

}  // namespace docnade::testing
