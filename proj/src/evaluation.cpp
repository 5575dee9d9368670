#include "docnade/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <set>

#include <json.hpp>

namespace docnade {

namespace {

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

Vector sigmoids(const Vector& logits) {
  Vector out(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) out[i] = sigmoid(logits[i]);
  return out;
}

SparseCounts visual_counts(const SparseCounts& counts, std::uint32_t n_visual_slots) {
  SparseCounts out;
  for (const auto& entry : counts)
    if (entry.first < n_visual_slots) out.push_back(entry);
  return out;
}

std::uint32_t argmax(const Vector& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return static_cast<std::uint32_t>(best);
}

}  // namespace

double perplexity(const Corpus& corpus, const ShallowParams& params, const WordTree& tree,
                  std::size_t orderings_per_doc, Rng& rng) {
  require(orderings_per_doc >= 1, "at least one ordering per document is required");
  double log_p = 0.0;
  std::uint64_t tokens = 0;
  for (const auto& doc : corpus.documents) {
    if (doc.counts.empty()) continue;
    double sum = 0.0;
    for (std::size_t o = 0; o < orderings_per_doc; ++o)
      sum += doc_log_likelihood(random_ordering(doc.counts, rng), params, tree);
    log_p += sum / static_cast<double>(orderings_per_doc);
    tokens += doc.total_tokens();
  }
  require(tokens > 0, "perplexity of a corpus without tokens");
  return std::exp(-log_p / static_cast<double>(tokens));
}

double perplexity(const Corpus& corpus, const Model& model, std::size_t orderings_per_doc, Rng& rng) {
  if (!is_deep(model.kind)) return perplexity(corpus, model.shallow, model.tree, orderings_per_doc, rng);
  require(orderings_per_doc >= 1, "at least one ordering per document is required");
  const WeightVector omega = model.weights();
  double log_p = 0.0;
  std::uint64_t tokens = 0;
  for (const auto& doc : corpus.documents) {
    if (doc.counts.empty()) continue;
    double sum = 0.0;
    for (std::size_t o = 0; o < orderings_per_doc; ++o)
      sum += deep_doc_log_likelihood(random_ordering(doc.counts, rng).tokens, doc.global_features, model.deep,
                                     omega);
    log_p += sum / static_cast<double>(orderings_per_doc);
    tokens += doc.total_tokens();
  }
  require(tokens > 0, "perplexity of a corpus without tokens");
  return std::exp(-log_p / static_cast<double>(tokens));
}

Vector document_representation(const Model& model, const MultimodalDocument& doc, RepresentationScope scope) {
  const auto slots = model.vocab.n_visual_slots();
  if (!is_deep(model.kind)) return represent(doc.counts, model.shallow, scope, slots);
  const SparseCounts counts = scope == RepresentationScope::VisualOnly ? visual_counts(doc.counts, slots) : doc.counts;
  return deep_represent(counts, doc.global_features, model.deep, model.weights());
}

Vector class_probabilities(const Model& model, const MultimodalDocument& doc) {
  require(is_supervised(model.kind), "class probabilities need a supervised model");
  const Vector h = document_representation(model, doc, RepresentationScope::AllWords);
  if (!is_deep(model.kind)) return class_posterior(h, model.shallow);
  const Vector logits = model.deep.d + model.deep.U * h;
  return model.head == SupervisedHead::Softmax ? softmax(logits) : sigmoids(logits);
}

// ---------------------------------------------------------------------------

Vector LinearClassifier::probabilities(const Vector& representation) const {
  require_dims(representation.size() == weights.cols(), "representation length");
  const Vector logits = bias + weights * representation;
  return kind == ClassifierKind::Softmax ? softmax(logits) : sigmoids(logits);
}

std::uint32_t LinearClassifier::predict(const Vector& representation) const {
  return argmax(probabilities(representation));
}

namespace {

struct ClassifierObjective {
  const Matrix& z;  // n x H standardized inputs
  const Matrix& y;  // n x C targets
  ClassifierKind kind;
  double l2;

  // Objective and gradient at (W, b); W is C x H.
  double operator()(const Matrix& W, const Vector& b, Matrix* dW, Vector* db) const {
    const auto n = static_cast<double>(z.rows());
    Matrix logits = z * W.transpose();
    logits.rowwise() += b.transpose();
    double loss = 0.0;
    Matrix residual(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      if (kind == ClassifierKind::Softmax) {
        const double m = logits.row(i).maxCoeff();
        const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
          loss -= y(i, c) * (logits(i, c) - lse);
          residual(i, c) = std::exp(logits(i, c) - lse) - y(i, c);
        }
      } else {
        for (Eigen::Index c = 0; c < logits.cols(); ++c) {
          const double a = logits(i, c);
          loss -= y(i, c) * log_sigmoid(a) + (1.0 - y(i, c)) * log_sigmoid(-a);
          residual(i, c) = sigmoid(a) - y(i, c);
        }
      }
    }
    loss = loss / n + 0.5 * l2 * W.squaredNorm();
    if (dW) {
      *dW = residual.transpose() * z / n + l2 * W;
      *db = residual.colwise().sum().transpose() / n;
    }
    return loss;
  }
};

}  // namespace

LinearClassifier fit_linear_classifier(const std::vector<Vector>& representations,
                                       const std::vector<std::vector<std::uint32_t>>& labels,
                                       std::uint32_t n_classes, ClassifierKind kind,
                                       const ClassifierOptions& options) {
  if (representations.size() != labels.size())
    throw DataError("classifier: " + std::to_string(representations.size()) + " representations for " +
                    std::to_string(labels.size()) + " label lists");
  require(!representations.empty(), "classifier needs training data");
  require(n_classes >= 2, "classifier needs at least 2 classes");
  const auto n = static_cast<Eigen::Index>(representations.size());
  const auto h = representations.front().size();

  Matrix x(n, h);
  Matrix y = Matrix::Zero(n, n_classes);
  std::set<std::uint32_t> present;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& r = representations[static_cast<std::size_t>(i)];
    require_dims(r.size() == h, "representation lengths differ");
    x.row(i) = r.transpose();
    const auto& ls = labels[static_cast<std::size_t>(i)];
    if (kind == ClassifierKind::Softmax && ls.size() != 1)
      throw DataError("softmax classifier needs exactly one label per item, item " + std::to_string(i) + " has " +
                      std::to_string(ls.size()));
    for (auto l : ls) {
      if (l >= n_classes) throw DataError("label " + std::to_string(l) + " out of range");
      y(i, l) = 1.0;
      present.insert(l);
    }
  }
  if (present.size() < 2) throw DataError("classifier training data covers fewer than 2 classes");

  const Vector mean = x.colwise().mean().transpose();
  Vector scale = ((x.rowwise() - mean.transpose()).array().square().colwise().mean()).sqrt().transpose();
  for (Eigen::Index j = 0; j < h; ++j)
    if (scale[j] < 1e-12) scale[j] = 1.0;
  const Matrix z = (x.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

  const ClassifierObjective f{z, y, kind, options.l2};
  Matrix W = Matrix::Zero(n_classes, h);
  Vector b = Vector::Zero(n_classes);
  Matrix dW;
  Vector db;
  double value = f(W, b, &dW, &db);
  double step = 1.0;
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    const double g2 = dW.squaredNorm() + db.squaredNorm();
    if (std::sqrt(g2) < options.tolerance) break;
    double next = 0.0;
    Matrix W_next;
    Vector b_next;
    for (;;) {
      W_next = W - step * dW;
      b_next = b - step * db;
      next = f(W_next, b_next, nullptr, nullptr);
      if (next <= value - 0.5 * step * g2 || step < 1e-12) break;
      step *= 0.5;
    }
    if (!(next < value)) break;
    W = std::move(W_next);
    b = std::move(b_next);
    value = f(W, b, &dW, &db);
    step *= 2.0;
  }

  LinearClassifier out;
  out.kind = kind;
  out.weights = W.array().rowwise() / scale.transpose().array();
  out.bias = b - out.weights * mean;
  if (!out.weights.allFinite() || !out.bias.allFinite()) throw NumericError("classifier fit diverged");
  return out;
}

// ---------------------------------------------------------------------------

Vector annotation_distribution(const Model& model, const MultimodalDocument& doc) {
  const auto slots = model.vocab.n_visual_slots();
  const auto n_annotation = model.vocab.n_annotation;
  if (n_annotation == 0) throw DataError("the vocabulary has no annotation words");
  const Vector h = document_representation(model, doc, RepresentationScope::VisualOnly);
  Vector out(n_annotation);
  if (is_deep(model.kind)) {
    const Vector logits = model.deep.b_out.tail(n_annotation) + model.deep.V_out.bottomRows(n_annotation) * h;
    return softmax(logits);
  }
  for (std::uint32_t i = 0; i < n_annotation; ++i)
    out[i] = std::exp(word_log_prob(model.tree, h, slots + i, model.shallow.V, model.shallow.b));
  return out / out.sum();
}

RankedPrediction generate_text(const Model& model, const MultimodalDocument& doc, std::size_t k) {
  const auto slots = model.vocab.n_visual_slots();
  const auto n_annotation = model.vocab.n_annotation;
  if (n_annotation == 0) throw DataError("the vocabulary has no annotation words");
  if (k > n_annotation)
    throw UsageError("requested " + std::to_string(k) + " annotations but the vocabulary has " +
                     std::to_string(n_annotation));
  if (!is_deep(model.kind)) return predict_annotations(doc.counts, model.shallow, model.tree, k, slots);
  const Vector p = annotation_distribution(model, doc);
  std::vector<std::uint32_t> ids(n_annotation);
  std::iota(ids.begin(), ids.end(), slots);
  return rank_top_k(ids, std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), k);
}

ClassAssociations class_word_associations(const ShallowParams& params, std::uint32_t class_index,
                                          std::size_t top_topics, std::size_t top_words,
                                          std::uint32_t n_visual_slots) {
  require(params.num_classes() > 0, "class associations need a supervised model");
  if (class_index >= params.num_classes())
    throw UsageError("class " + std::to_string(class_index) + " out of range (C=" +
                     std::to_string(params.num_classes()) + ")");
  if (top_topics == 0 || top_topics > static_cast<std::size_t>(params.hidden()))
    throw UsageError("top topic count must lie in [1, H=" + std::to_string(params.hidden()) + "]");
  const auto q = static_cast<std::uint32_t>(params.vocab_size());
  require(n_visual_slots <= q, "visual slot count exceeds vocabulary");

  std::vector<std::uint32_t> units(static_cast<std::size_t>(params.hidden()));
  std::iota(units.begin(), units.end(), 0u);
  std::vector<double> weights(units.size());
  for (std::size_t j = 0; j < units.size(); ++j) weights[j] = params.U(class_index, static_cast<Eigen::Index>(j));

  ClassAssociations out;
  out.topics = rank_top_k(units, weights, top_topics).ids;
  out.word_scores = Vector::Zero(q);
  for (auto t : out.topics) out.word_scores += params.W.row(t).transpose();
  out.word_scores /= static_cast<double>(out.topics.size());

  std::vector<std::uint32_t> ids(q);
  std::iota(ids.begin(), ids.end(), 0u);
  std::span<const std::uint32_t> all_ids(ids);
  std::span<const double> scores(out.word_scores.data(), q);
  out.visual = rank_top_k(all_ids.first(n_visual_slots), scores.first(n_visual_slots), top_words);
  out.annotation = rank_top_k(all_ids.subspan(n_visual_slots), scores.subspan(n_visual_slots), top_words);
  return out;
}

// ---------------------------------------------------------------------------

EvalReport evaluate(const Model& model, const Corpus& corpus, const EvalOptions& options) {
  model.check_compatible(corpus);
  require(!corpus.documents.empty(), "cannot evaluate an empty corpus");
  EvalReport report;
  const auto add = [&](const std::string& metric, double value) {
    report.records.push_back({metric, options.split, value});
  };
  add("documents", static_cast<double>(corpus.documents.size()));

  if (is_supervised(model.kind)) {
    const auto n = corpus.documents.size();
    if (model.head == SupervisedHead::Softmax) {
      std::vector<std::uint32_t> predicted, truth;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& doc = corpus.documents[i];
        if (doc.labels.size() != 1)
          throw DataError("document " + std::to_string(i) + " has " + std::to_string(doc.labels.size()) +
                          " labels; single-label evaluation needs exactly one");
        predicted.push_back(argmax(class_probabilities(model, doc)));
        truth.push_back(doc.labels.front());
      }
      add("accuracy", accuracy(predicted, truth));
    } else {
      Matrix scores(static_cast<Eigen::Index>(n), model.n_classes);
      std::vector<std::vector<std::uint32_t>> relevant;
      for (std::size_t i = 0; i < n; ++i) {
        scores.row(static_cast<Eigen::Index>(i)) = class_probabilities(model, corpus.documents[i]).transpose();
        relevant.push_back(corpus.documents[i].labels);
      }
      const auto map = mean_average_precision(scores, relevant);
      add("map", map.value);
      add("map_classes_excluded", static_cast<double>(map.excluded));
      for (Eigen::Index c = 0; c < scores.cols(); ++c) {
        std::vector<double> column(n);
        std::unique_ptr<bool[]> flags(new bool[n]);
        for (std::size_t i = 0; i < n; ++i) {
          column[i] = scores(static_cast<Eigen::Index>(i), c);
          flags[i] = std::find(relevant[i].begin(), relevant[i].end(), static_cast<std::uint32_t>(c)) !=
                     relevant[i].end();
        }
        report.pr_curves.push_back(precision_recall_curve(column, std::span<const bool>(flags.get(), n)));
      }
    }
  } else {
    Rng rng = Rng::stream(options.seed, "perplexity");
    add("perplexity", perplexity(corpus, model, options.perplexity_orderings, rng));
  }

  if (model.vocab.n_annotation > 0) {
    const std::size_t k = std::min<std::size_t>(options.annotation_k, model.vocab.n_annotation);
    double sum = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < corpus.documents.size(); ++i) {
      const auto& doc = corpus.documents[i];
      std::vector<std::uint32_t> truth;
      for (const auto& [id, count] : doc.counts)
        if (id >= model.vocab.n_visual_slots()) truth.push_back(id);
      const auto prediction = generate_text(model, doc, k);
      const auto f = f_measure(prediction.ids, truth);
      if (!f) {
        report.f_measure_excluded.push_back(i);
        continue;
      }
      sum += *f;
      ++counted;
    }
    if (counted) add("f_measure", sum / static_cast<double>(counted));
    add("f_measure_excluded", static_cast<double>(report.f_measure_excluded.size()));
  }
  return report;
}

void write_report_records(std::ostream& out, const EvalReport& report) {
  for (const auto& r : report.records) {
    nlohmann::ordered_json j;
    j["metric"] = r.metric;
    j["split"] = r.split;
    j["value"] = r.value;
    out << j.dump() << '\n';
  }
}

void write_report_table(std::ostream& out, const EvalReport& report) {
  std::size_t width = 6;
  for (const auto& r : report.records) width = std::max(width, r.metric.size());
  out << std::left << std::setw(static_cast<int>(width)) << "metric" << "  " << std::setw(8) << "split"
      << "  value\n";
  for (const auto& r : report.records)
    out << std::left << std::setw(static_cast<int>(width)) << r.metric << "  " << std::setw(8) << r.split << "  "
        << std::setprecision(6) << r.value << '\n';
}

void write_pr_curve(std::ostream& out, const std::vector<PrPoint>& curve) {
  out << std::setprecision(17);
  for (const auto& p : curve) out << p.recall << ' ' << p.precision << '\n';
}

}  // namespace docnade
