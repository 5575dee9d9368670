#include "docnade/model.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

namespace docnade {

ModelKind parse_model_kind(const std::string& name) {
  if (name == "docnade") return ModelKind::DocNADE;
  if (name == "supdocnade") return ModelKind::SupDocNADE;
  if (name == "deepdocnade") return ModelKind::DeepDocNADE;
  if (name == "supdeepdocnade") return ModelKind::SupDeepDocNADE;
  throw UsageError("unknown model kind '" + name + "'");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::DocNADE: return "docnade";
    case ModelKind::SupDocNADE: return "supdocnade";
    case ModelKind::DeepDocNADE: return "deepdocnade";
    case ModelKind::SupDeepDocNADE: return "supdeepdocnade";
  }
  return "unknown";
}

SupervisedHead parse_head(const std::string& name) {
  if (name == "softmax") return SupervisedHead::Softmax;
  if (name == "sigmoid") return SupervisedHead::Sigmoid;
  throw UsageError("unknown head '" + name + "' (expected softmax or sigmoid)");
}

std::string to_string(SupervisedHead head) { return head == SupervisedHead::Softmax ? "softmax" : "sigmoid"; }

void Model::check_compatible(const Corpus& corpus, bool check_classes) const {
  const auto& v = corpus.vocabulary;
  if (v.size() != vocab.size())
    throw DataError("vocabulary size Q mismatch: model " + std::to_string(vocab.size()) + ", corpus " +
                    std::to_string(v.size()));
  if (v.n_visual_slots() != vocab.n_visual_slots())
    throw DataError("visual slot count mismatch: model " + std::to_string(vocab.n_visual_slots()) + ", corpus " +
                    std::to_string(v.n_visual_slots()));
  if (check_classes && is_supervised(kind) && corpus.n_classes != n_classes)
    throw DataError("class count C mismatch: model " + std::to_string(n_classes) + ", corpus " +
                    std::to_string(corpus.n_classes));
  if (corpus.n_features != n_features)
    throw DataError("global feature length N_f mismatch: model " + std::to_string(n_features) + ", corpus " +
                    std::to_string(corpus.n_features));
}

// ---------------------------------------------------------------------------
// Binary primitives

namespace {

template <typename T>
void to_little_endian(T v, unsigned char* out) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
}

template <typename T>
T from_little_endian(const unsigned char* in) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(in[i]) << (8 * i);
  return v;
}

}  // namespace

void BinaryWriter::bytes(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out_) throw DataError("write failed");
}

void BinaryWriter::u32(std::uint32_t v) {
  unsigned char b[4];
  to_little_endian(v, b);
  bytes(b, 4);
}

void BinaryWriter::u64(std::uint64_t v) {
  unsigned char b[8];
  to_little_endian(v, b);
  bytes(b, 8);
}

void BinaryWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(const std::string& s) {
  u64(s.size());
  bytes(s.data(), s.size());
}

void BinaryReader::bytes(void* data, std::size_t n) {
  in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
  if (!in_) throw DataError("unexpected end of file");
}

std::uint32_t BinaryReader::u32() {
  unsigned char b[4];
  bytes(b, 4);
  return from_little_endian<std::uint32_t>(b);
}

std::uint64_t BinaryReader::u64() {
  unsigned char b[8];
  bytes(b, 8);
  return from_little_endian<std::uint64_t>(b);
}

double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const auto n = u64();
  if (n > (std::uint64_t{1} << 32)) throw DataError("string length out of range");
  std::string s(n, '\0');
  bytes(s.data(), n);
  return s;
}

// ---------------------------------------------------------------------------
// Model container
//
//   magic[8] "DOCNADE\0", u32 version
//   u32 kind, u32 head, u32 n_visual, u32 n_regions, u32 n_annotation,
//   u32 C, u32 N_f, f64 rho
//   shallow: u32 H, u32 Q, u32 T, u64 tree seed
//   deep:    u32 N, u32 Q, N x u32 H_n, f64 dropout rate, u8 unit variance
//   arrays in declared order: u64 rows, u64 cols, row-major f64 entries

void write_model(std::ostream& out, const Model& model) {
  BinaryWriter w(out);
  w.bytes(kModelMagic, sizeof kModelMagic);
  w.u32(kModelFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.kind));
  w.u32(static_cast<std::uint32_t>(model.head));
  w.u32(model.vocab.n_visual);
  w.u32(model.vocab.n_regions);
  w.u32(model.vocab.n_annotation);
  w.u32(model.n_classes);
  w.u32(model.n_features);
  w.f64(model.rho);
  if (is_deep(model.kind)) {
    w.u32(static_cast<std::uint32_t>(model.deep.depth()));
    w.u32(static_cast<std::uint32_t>(model.deep.vocab_size()));
    for (auto h : model.deep.hidden_sizes()) w.u32(static_cast<std::uint32_t>(h));
    w.f64(model.deep.settings.dropout_rate);
    w.u8(model.deep.settings.unit_variance ? 1 : 0);
  } else {
    w.u32(static_cast<std::uint32_t>(model.shallow.hidden()));
    w.u32(static_cast<std::uint32_t>(model.shallow.vocab_size()));
    w.u32(model.tree.num_internal());
    w.u64(model.tree.seed());
  }
  model.for_each_array([&](const auto&, const auto& a) { w.array(a); });
}

Model read_model(std::istream& in) {
  BinaryReader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kModelMagic, sizeof magic) != 0) throw DataError("not a model file (bad magic)");
  const auto version = r.u32();
  if (version != kModelFormatVersion)
    throw DataError("unsupported model format version " + std::to_string(version));
  Model m;
  const auto kind = r.u32();
  if (kind > 3) throw DataError("unknown model kind tag " + std::to_string(kind));
  m.kind = static_cast<ModelKind>(kind);
  const auto head = r.u32();
  if (head > 1) throw DataError("unknown head tag " + std::to_string(head));
  m.head = static_cast<SupervisedHead>(head);
  m.vocab.n_visual = r.u32();
  m.vocab.n_regions = r.u32();
  m.vocab.n_annotation = r.u32();
  m.n_classes = r.u32();
  m.n_features = r.u32();
  m.rho = r.f64();
  const Eigen::Index classes = is_supervised(m.kind) ? m.n_classes : 0;
  if (is_deep(m.kind)) {
    const auto depth = r.u32();
    const auto q = r.u32();
    if (depth == 0 || depth > 64) throw DataError("invalid layer count " + std::to_string(depth));
    if (q != m.vocab.size()) throw DataError("model Q disagrees with its vocabulary shape");
    std::vector<Eigen::Index> sizes;
    for (std::uint32_t n = 0; n < depth; ++n) sizes.push_back(r.u32());
    m.deep = DeepParams::zeros(q, sizes, classes, m.n_features);
    m.deep.settings.dropout_rate = r.f64();
    m.deep.settings.unit_variance = r.u8() != 0;
  } else {
    const auto hidden = r.u32();
    const auto q = r.u32();
    const auto t = r.u32();
    const auto seed = r.u64();
    if (q != m.vocab.size() || t + 1 != q) throw DataError("model Q/T disagree with its vocabulary shape");
    m.tree = WordTree::build(q, seed);
    m.shallow = ShallowParams::zeros(hidden, q, classes);
  }
  m.for_each_array([&](const auto& name, auto& a) { r.array(a, std::string(name)); });
  if (!all_finite(m)) throw DataError("model contains non-finite parameters");
  return m;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file " + path.string());
  write_model(out, model);
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  return read_model(in);
}

void export_model_text(std::ostream& out, const Model& model) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(model.kind);
  j["head"] = to_string(model.head);
  j["n_visual"] = model.vocab.n_visual;
  j["n_regions"] = model.vocab.n_regions;
  j["n_annotation"] = model.vocab.n_annotation;
  j["C"] = model.n_classes;
  j["N_f"] = model.n_features;
  j["rho"] = model.rho;
  if (is_deep(model.kind)) {
    j["hidden_sizes"] = model.deep.hidden_sizes();
    j["dropout_rate"] = model.deep.settings.dropout_rate;
    j["unit_variance"] = model.deep.settings.unit_variance;
  } else {
    j["tree_seed"] = model.tree.seed();
  }
  auto& arrays = j["arrays"];
  model.for_each_array([&](const auto& name, const auto& a) {
    nlohmann::ordered_json entry;
    entry["rows"] = a.rows();
    entry["cols"] = a.cols();
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(a.size()));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index k = 0; k < a.cols(); ++k) values.push_back(a(i, k));
    entry["values"] = std::move(values);
    arrays[std::string(name)] = std::move(entry);
  });
  out << j.dump(1) << '\n';
}

}  // namespace docnade
