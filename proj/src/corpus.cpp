#include "docnade/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace docnade {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary

JointVocabulary build_vocabulary(std::uint32_t n_visual, std::uint32_t n_regions,
                                 const std::vector<std::string>& annotation_words) {
  require(n_visual >= 1, "build_vocabulary: n_visual must be at least 1");
  require(n_regions >= 1, "build_vocabulary: n_regions must be at least 1");
  const std::uint64_t q = std::uint64_t{n_visual} * n_regions + annotation_words.size();
  require(q < (std::uint64_t{1} << 32), "build_vocabulary: vocabulary too large");

  JointVocabulary vocab;
  vocab.n_visual_ = n_visual;
  vocab.n_regions_ = n_regions;
  vocab.annotation_words_ = annotation_words;
  for (std::uint32_t i = 0; i < annotation_words.size(); ++i) {
    auto [it, inserted] = vocab.annotation_index_.emplace(annotation_words[i], i);
    if (!inserted) throw DataError("duplicate annotation word '" + annotation_words[i] + "'");
  }
  return vocab;
}

WordId JointVocabulary::visual_id(std::uint32_t visual_word, std::uint32_t region) const {
  require(visual_word < n_visual_ && region < n_regions_,
          "visual token out of range: word " + std::to_string(visual_word) + ", region " +
              std::to_string(region));
  return region * n_visual_ + visual_word;
}

WordId JointVocabulary::annotation_id(const std::string& word) const {
  auto it = annotation_index_.find(word);
  if (it == annotation_index_.end()) throw DataError("unknown annotation word '" + word + "'");
  return n_visual_slots() + it->second;
}

WordId JointVocabulary::annotation_id(std::uint32_t index) const {
  require(index < n_annotation(), "annotation index out of range");
  return n_visual_slots() + index;
}

DecodedToken JointVocabulary::decode(WordId id) const {
  if (id >= size()) throw DataError("word id " + std::to_string(id) + " >= Q=" + std::to_string(size()));
  if (id < n_visual_slots()) return VisualToken{id % n_visual_, id / n_visual_};
  return AnnotationToken{id - n_visual_slots()};
}

const std::string& JointVocabulary::annotation_word(WordId id) const {
  if (!is_annotation(id)) throw DataError("word id " + std::to_string(id) + " is not an annotation word");
  return annotation_words_[id - n_visual_slots()];
}

// ---------------------------------------------------------------------------
// Documents

std::uint64_t MultimodalDocument::total_tokens() const {
  std::uint64_t total = 0;
  for (const auto& [id, count] : counts) total += count;
  return total;
}

std::uint64_t MultimodalDocument::annotation_tokens(const JointVocabulary& vocab) const {
  std::uint64_t total = 0;
  for (const auto& [id, count] : counts)
    if (vocab.is_annotation(id)) total += count;
  return total;
}

MultimodalDocument MultimodalDocument::visual_only(const JointVocabulary& vocab) const {
  MultimodalDocument out;
  out.labels = labels;
  out.global_features = global_features;
  for (const auto& entry : counts)
    if (entry.first < vocab.n_visual_slots()) out.counts.push_back(entry);
  return out;
}

bool operator==(const MultimodalDocument& a, const MultimodalDocument& b) {
  if (a.counts != b.counts || a.labels != b.labels) return false;
  if (a.global_features.has_value() != b.global_features.has_value()) return false;
  if (!a.global_features) return true;
  return a.global_features->size() == b.global_features->size() &&
         *a.global_features == *b.global_features;
}

SparseCounts normalize_counts(std::vector<std::pair<WordId, std::uint32_t>> raw) {
  std::sort(raw.begin(), raw.end());
  SparseCounts out;
  for (const auto& [id, count] : raw) {
    if (count == 0) continue;
    if (!out.empty() && out.back().first == id)
      out.back().second += count;
    else
      out.emplace_back(id, count);
  }
  return out;
}

void validate_document(const MultimodalDocument& doc, const JointVocabulary& vocab,
                       std::uint32_t n_classes, std::uint32_t n_features) {
  WordId previous = 0;
  bool first = true;
  for (const auto& [id, count] : doc.counts) {
    if (id >= vocab.size())
      throw DataError("word id " + std::to_string(id) + " >= Q=" + std::to_string(vocab.size()));
    if (count == 0) throw DataError("zero count stored for word id " + std::to_string(id));
    if (!first && id <= previous) throw DataError("counts not sorted/unique");
    previous = id;
    first = false;
  }
  for (std::size_t i = 0; i < doc.labels.size(); ++i) {
    if (doc.labels[i] >= n_classes)
      throw DataError("label " + std::to_string(doc.labels[i]) + " >= C=" + std::to_string(n_classes));
    if (i > 0 && doc.labels[i] <= doc.labels[i - 1]) throw DataError("labels not sorted/unique");
  }
  if (doc.global_features) {
    if (doc.global_features->size() != static_cast<Eigen::Index>(n_features))
      throw DataError("global feature length " + std::to_string(doc.global_features->size()) +
                      " != N_f=" + std::to_string(n_features));
    if (!doc.global_features->allFinite()) throw DataError("non-finite global feature");
  }
}

void Corpus::validate() const {
  for (std::size_t i = 0; i < documents.size(); ++i) {
    try {
      validate_document(documents[i], vocabulary, n_classes, n_features);
    } catch (const DataError& e) {
      throw DataError("document " + std::to_string(i) + ": " + e.what());
    }
  }
}

CorpusFormat parse_corpus_format(const std::string& name) {
  if (name == "text-sparse") return CorpusFormat::TextSparse;
  if (name == "record-lines") return CorpusFormat::RecordLines;
  throw UsageError("unknown corpus format '" + name + "' (expected text-sparse or record-lines)");
}

std::string to_string(CorpusFormat format) {
  return format == CorpusFormat::TextSparse ? "text-sparse" : "record-lines";
}

// ---------------------------------------------------------------------------
// Header

JointVocabulary CorpusHeader::vocabulary() const {
  std::vector<std::string> words = annotation_words;
  if (words.empty()) {
    for (std::uint32_t i = 0; i < n_annotation; ++i) words.push_back("anno_" + std::to_string(i));
  } else if (words.size() != n_annotation) {
    throw DataError("header lists " + std::to_string(words.size()) +
                    " annotation words but declares n_annotation=" + std::to_string(n_annotation));
  }
  if (n_visual == 0 || n_regions == 0) throw DataError("header: n_visual and n_regions must be positive");
  return build_vocabulary(n_visual, n_regions, words);
}

CorpusHeader CorpusHeader::from(const Corpus& corpus) {
  CorpusHeader h;
  h.n_visual = corpus.vocabulary.n_visual();
  h.n_regions = corpus.vocabulary.n_regions();
  h.n_annotation = corpus.vocabulary.n_annotation();
  h.n_classes = corpus.n_classes;
  h.n_features = corpus.n_features;
  h.annotation_words = corpus.vocabulary.annotation_words();
  return h;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::uint32_t header_value(std::string_view key, std::string_view value, int line) {
  std::uint32_t v = 0;
  if (!parse_number(value, v))
    throw DataError("header line " + std::to_string(line) + ": bad value for " + std::string(key));
  return v;
}

}  // namespace

CorpusHeader read_corpus_header(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus header " + path.string());
  CorpusHeader h;
  bool have_visual = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto tokens = split_ws(line);
    auto key = tokens.front();
    if (key == "annotation_words") {
      for (std::size_t i = 1; i < tokens.size(); ++i) h.annotation_words.emplace_back(tokens[i]);
      continue;
    }
    if (tokens.size() != 2)
      throw DataError("header line " + std::to_string(line_no) + ": expected 'key value'");
    if (key == "n_visual") {
      h.n_visual = header_value(key, tokens[1], line_no);
      have_visual = true;
    } else if (key == "n_regions") {
      h.n_regions = header_value(key, tokens[1], line_no);
    } else if (key == "n_annotation") {
      h.n_annotation = header_value(key, tokens[1], line_no);
    } else if (key == "C") {
      h.n_classes = header_value(key, tokens[1], line_no);
    } else if (key == "N_f") {
      h.n_features = header_value(key, tokens[1], line_no);
    } else {
      throw DataError("header line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  if (!have_visual) throw DataError("header " + path.string() + " does not declare n_visual");
  return h;
}

void write_corpus_header(const std::filesystem::path& path, const CorpusHeader& header) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus header " + path.string());
  out << "n_visual " << header.n_visual << "\n"
      << "n_regions " << header.n_regions << "\n"
      << "n_annotation " << header.n_annotation << "\n"
      << "C " << header.n_classes << "\n"
      << "N_f " << header.n_features << "\n";
  if (!header.annotation_words.empty()) {
    out << "annotation_words";
    for (const auto& w : header.annotation_words) out << ' ' << w;
    out << "\n";
  }
}

std::filesystem::path default_header_path(const std::filesystem::path& corpus_path) {
  return std::filesystem::path(corpus_path.string() + ".header");
}

// ---------------------------------------------------------------------------
// Text-sparse format

namespace {

[[noreturn]] void field_error(int line, const char* field, const std::string& what) {
  throw DataError("line " + std::to_string(line) + ", field " + field + ": " + what);
}

void parse_id_count(std::string_view token, int line, const char* field, bool count_optional,
                    WordId& id, std::uint32_t& count) {
  auto colon = token.find(':');
  std::string_view id_part = token.substr(0, colon);
  std::int64_t raw_id = 0;
  if (!parse_number(id_part, raw_id)) field_error(line, field, "bad id '" + std::string(token) + "'");
  if (raw_id < 0) field_error(line, field, "negative id '" + std::string(token) + "'");
  if (raw_id > static_cast<std::int64_t>(UINT32_MAX)) field_error(line, field, "id too large");
  id = static_cast<WordId>(raw_id);
  if (colon == std::string_view::npos) {
    if (!count_optional) field_error(line, field, "expected id:count, got '" + std::string(token) + "'");
    count = 1;
    return;
  }
  std::int64_t raw_count = 0;
  if (!parse_number(token.substr(colon + 1), raw_count))
    field_error(line, field, "bad count in '" + std::string(token) + "'");
  if (raw_count < 0) field_error(line, field, "negative count in '" + std::string(token) + "'");
  if (raw_count > static_cast<std::int64_t>(UINT32_MAX)) field_error(line, field, "count too large");
  count = static_cast<std::uint32_t>(raw_count);
}

}  // namespace

Corpus parse_text_sparse(std::istream& in, const CorpusHeader& header) {
  Corpus corpus;
  corpus.vocabulary = header.vocabulary();
  corpus.n_classes = header.n_classes;
  corpus.n_features = header.n_features;
  const auto& vocab = corpus.vocabulary;

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    for (;;) {
      auto bar = line.find('|', start);
      fields.push_back(trim(line.substr(start, bar == std::string_view::npos ? line.npos : bar - start)));
      if (bar == std::string_view::npos) break;
      start = bar + 1;
    }
    if (fields.size() != 4)
      throw DataError("line " + std::to_string(line_no) + ": expected 4 '|'-separated fields, found " +
                      std::to_string(fields.size()));

    MultimodalDocument doc;
    for (auto tok : split_ws(fields[0])) {
      std::int64_t label = 0;
      if (!parse_number(tok, label) || label < 0)
        field_error(line_no, "LABELS", "bad class index '" + std::string(tok) + "'");
      if (label >= header.n_classes)
        field_error(line_no, "LABELS", "class index " + std::to_string(label) + " >= C=" +
                                           std::to_string(header.n_classes));
      doc.labels.push_back(static_cast<std::uint32_t>(label));
    }
    std::sort(doc.labels.begin(), doc.labels.end());
    doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()), doc.labels.end());

    std::vector<std::pair<WordId, std::uint32_t>> raw_counts;
    for (auto tok : split_ws(fields[1])) {
      WordId id;
      std::uint32_t count;
      parse_id_count(tok, line_no, "VISUAL", false, id, count);
      if (id >= vocab.n_visual_slots())
        field_error(line_no, "VISUAL", "id " + std::to_string(id) + " outside visual range [0," +
                                           std::to_string(vocab.n_visual_slots()) + ")");
      raw_counts.emplace_back(id, count);
    }
    for (auto tok : split_ws(fields[2])) {
      WordId id;
      std::uint32_t count;
      parse_id_count(tok, line_no, "ANNOTATIONS", true, id, count);
      if (id >= vocab.size())
        field_error(line_no, "ANNOTATIONS", "id " + std::to_string(id) + " >= Q=" + std::to_string(vocab.size()));
      if (!vocab.is_annotation(id))
        field_error(line_no, "ANNOTATIONS", "id " + std::to_string(id) + " is not an annotation id");
      raw_counts.emplace_back(id, count);
    }
    doc.counts = normalize_counts(std::move(raw_counts));

    auto feature_tokens = split_ws(fields[3]);
    if (!feature_tokens.empty()) {
      if (feature_tokens.size() != header.n_features)
        field_error(line_no, "FEATURES", "expected " + std::to_string(header.n_features) + " values, found " +
                                             std::to_string(feature_tokens.size()));
      Vector f(static_cast<Eigen::Index>(feature_tokens.size()));
      for (std::size_t i = 0; i < feature_tokens.size(); ++i) {
        double v = 0;
        if (!parse_number(feature_tokens[i], v) || !std::isfinite(v))
          field_error(line_no, "FEATURES", "bad real '" + std::string(feature_tokens[i]) + "'");
        f[static_cast<Eigen::Index>(i)] = v;
      }
      doc.global_features = std::move(f);
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

namespace {

void append_double(std::string& out, double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, ptr);
}

}  // namespace

void write_text_sparse(std::ostream& out, const Corpus& corpus) {
  const auto& vocab = corpus.vocabulary;
  std::string line;
  for (const auto& doc : corpus.documents) {
    line.clear();
    for (std::size_t i = 0; i < doc.labels.size(); ++i) {
      if (i) line += ' ';
      line += std::to_string(doc.labels[i]);
    }
    line += " |";
    for (const auto& [id, count] : doc.counts) {
      if (vocab.is_annotation(id)) continue;
      line += ' ' + std::to_string(id) + ':' + std::to_string(count);
    }
    line += " |";
    for (const auto& [id, count] : doc.counts) {
      if (!vocab.is_annotation(id)) continue;
      line += ' ' + std::to_string(id);
      if (count != 1) line += ':' + std::to_string(count);
    }
    line += " |";
    if (doc.global_features) {
      for (Eigen::Index i = 0; i < doc.global_features->size(); ++i) {
        line += ' ';
        append_double(line, (*doc.global_features)[i]);
      }
    }
    out << line << '\n';
  }
}

// ---------------------------------------------------------------------------
// Record-lines format

namespace {

json header_to_json(const CorpusHeader& h) {
  return json{{"n_visual", h.n_visual},     {"n_regions", h.n_regions},
              {"n_annotation", h.n_annotation}, {"C", h.n_classes},
              {"N_f", h.n_features},        {"annotation_words", h.annotation_words}};
}

CorpusHeader header_from_json(const json& j) {
  CorpusHeader h;
  h.n_visual = j.at("n_visual").get<std::uint32_t>();
  h.n_regions = j.value("n_regions", 1u);
  h.n_annotation = j.value("n_annotation", 0u);
  h.n_classes = j.value("C", 0u);
  h.n_features = j.value("N_f", 0u);
  h.annotation_words = j.value("annotation_words", std::vector<std::string>{});
  return h;
}

std::uint32_t record_uint(const json& v, int line, const char* field) {
  if (!v.is_number_integer()) field_error(line, field, "expected an integer, got " + v.dump());
  auto x = v.get<std::int64_t>();
  if (x < 0) field_error(line, field, "negative value " + v.dump());
  if (x > static_cast<std::int64_t>(UINT32_MAX)) field_error(line, field, "value too large");
  return static_cast<std::uint32_t>(x);
}

}  // namespace

Corpus parse_record_lines(std::istream& in, const std::optional<CorpusHeader>& header) {
  std::optional<CorpusHeader> active = header;
  Corpus corpus;
  bool initialized = false;
  auto initialize = [&](int line) {
    if (!active) throw DataError("line " + std::to_string(line) + ": record-lines corpus has no header");
    corpus.vocabulary = active->vocabulary();
    corpus.n_classes = active->n_classes;
    corpus.n_features = active->n_features;
    initialized = true;
  };

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("line " + std::to_string(line_no) + ": malformed record: " + e.what());
    }
    if (!rec.is_object()) throw DataError("line " + std::to_string(line_no) + ": record is not an object");
    if (rec.contains("header")) {
      if (initialized) throw DataError("line " + std::to_string(line_no) + ": header after documents");
      try {
        active = header_from_json(rec["header"]);
      } catch (const json::exception& e) {
        throw DataError("line " + std::to_string(line_no) + ", field header: " + e.what());
      }
      continue;
    }
    if (!initialized) initialize(line_no);
    const auto& vocab = corpus.vocabulary;

    MultimodalDocument doc;
    if (rec.contains("labels")) {
      if (!rec["labels"].is_array()) field_error(line_no, "labels", "expected an array");
      for (const auto& v : rec["labels"]) {
        auto label = record_uint(v, line_no, "labels");
        if (label >= corpus.n_classes)
          field_error(line_no, "labels", "class index " + std::to_string(label) + " >= C=" +
                                             std::to_string(corpus.n_classes));
        doc.labels.push_back(label);
      }
      std::sort(doc.labels.begin(), doc.labels.end());
      doc.labels.erase(std::unique(doc.labels.begin(), doc.labels.end()), doc.labels.end());
    }
    std::vector<std::pair<WordId, std::uint32_t>> raw_counts;
    auto read_pairs = [&](const char* field, bool annotation) {
      if (!rec.contains(field)) return;
      const auto& arr = rec[field];
      if (!arr.is_array()) field_error(line_no, field, "expected an array");
      for (const auto& item : arr) {
        WordId id;
        std::uint32_t count = 1;
        if (item.is_array()) {
          if (item.size() != 2) field_error(line_no, field, "expected [id, count], got " + item.dump());
          id = record_uint(item[0], line_no, field);
          count = record_uint(item[1], line_no, field);
        } else if (annotation) {
          id = record_uint(item, line_no, field);
        } else {
          field_error(line_no, field, "expected [id, count], got " + item.dump());
        }
        if (id >= vocab.size())
          field_error(line_no, field, "id " + std::to_string(id) + " >= Q=" + std::to_string(vocab.size()));
        if (annotation != vocab.is_annotation(id))
          field_error(line_no, field, "id " + std::to_string(id) + " belongs to the other modality");
        raw_counts.emplace_back(id, count);
      }
    };
    read_pairs("visual", false);
    read_pairs("annotations", true);
    doc.counts = normalize_counts(std::move(raw_counts));

    if (rec.contains("features") && !rec["features"].is_null()) {
      const auto& arr = rec["features"];
      if (!arr.is_array()) field_error(line_no, "features", "expected an array");
      if (!arr.empty()) {
        if (arr.size() != corpus.n_features)
          field_error(line_no, "features", "expected " + std::to_string(corpus.n_features) +
                                               " values, found " + std::to_string(arr.size()));
        Vector f(static_cast<Eigen::Index>(arr.size()));
        for (std::size_t i = 0; i < arr.size(); ++i) {
          if (!arr[i].is_number()) field_error(line_no, "features", "bad real " + arr[i].dump());
          f[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
        }
        if (!f.allFinite()) field_error(line_no, "features", "non-finite value");
        doc.global_features = std::move(f);
      }
    }
    corpus.documents.push_back(std::move(doc));
  }
  if (!initialized) initialize(line_no);
  return corpus;
}

void write_record_lines(std::ostream& out, const Corpus& corpus, bool embed_header) {
  if (embed_header) out << json{{"header", header_to_json(CorpusHeader::from(corpus))}}.dump() << '\n';
  const auto& vocab = corpus.vocabulary;
  for (const auto& doc : corpus.documents) {
    json visual = json::array(), annotations = json::array();
    for (const auto& [id, count] : doc.counts)
      (vocab.is_annotation(id) ? annotations : visual).push_back(json::array({id, count}));
    json rec{{"labels", doc.labels}, {"visual", visual}, {"annotations", annotations}};
    if (doc.global_features) {
      const auto& f = *doc.global_features;
      rec["features"] = std::vector<double>(f.data(), f.data() + f.size());
    }
    out << rec.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// File entry points

Corpus parse_corpus(const std::filesystem::path& path, CorpusFormat format,
                    const std::optional<std::filesystem::path>& header_path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus " + path.string());
  const auto sidecar = header_path.value_or(default_header_path(path));
  Corpus corpus;
  if (format == CorpusFormat::TextSparse) {
    corpus = parse_text_sparse(in, read_corpus_header(sidecar));
  } else {
    std::optional<CorpusHeader> header;
    if (header_path || std::filesystem::exists(sidecar)) header = read_corpus_header(sidecar);
    corpus = parse_record_lines(in, header);
  }
  corpus.validate();
  return corpus;
}

void write_corpus(const std::filesystem::path& path, const Corpus& corpus, CorpusFormat format) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write corpus " + path.string());
  if (format == CorpusFormat::TextSparse) {
    write_text_sparse(out, corpus);
    write_corpus_header(default_header_path(path), CorpusHeader::from(corpus));
  } else {
    write_record_lines(out, corpus, true);
  }
}

// ---------------------------------------------------------------------------
// Weighting

WeightVector::WeightVector(const JointVocabulary& vocab, double rho)
    : WeightVector(vocab.n_visual_slots(), vocab.size(), rho) {}

WeightVector::WeightVector(std::uint32_t n_visual_slots, std::uint32_t size, double rho)
    : n_visual_slots_(n_visual_slots), size_(size), rho_(rho) {
  require(rho >= 0 && std::isfinite(rho), "annotation weight rho must be finite and >= 0");
  require(n_visual_slots <= size, "WeightVector: visual slots exceed vocabulary size");
}

Vector WeightVector::dense() const {
  Vector w = Vector::Ones(size_);
  w.tail(size_ - n_visual_slots_).setConstant(rho_);
  return w;
}

Vector to_weighted_histogram(const SparseCounts& counts, const WeightVector& omega) {
  Vector x = Vector::Zero(omega.size());
  for (const auto& [id, count] : counts) {
    require_dims(id < omega.size(), "word id " + std::to_string(id) + " outside weight vector of length " +
                                        std::to_string(omega.size()));
    x[id] = static_cast<double>(count) * omega[id];
  }
  return x;
}

Vector to_weighted_histogram(const MultimodalDocument& doc, const WeightVector& omega,
                             const JointVocabulary& vocab) {
  require_dims(omega.size() == vocab.size(), "weight vector length " + std::to_string(omega.size()) +
                                                 " != Q=" + std::to_string(vocab.size()));
  return to_weighted_histogram(doc.counts, omega);
}

}  // namespace docnade
