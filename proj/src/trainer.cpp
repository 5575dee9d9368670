#include "docnade/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>
#include <utility>

#include <json.hpp>

namespace docnade {

void TrainConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw UsageError(msg); };
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) fail("learning rate must be a finite value >= 0");
  if (learning_rate > learning_rate_guard)
    fail("learning rate " + std::to_string(learning_rate) + " exceeds the guard " +
         std::to_string(learning_rate_guard));
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) fail("lambda must be a finite value >= 0");
  if (!(rho >= 0.0) || !std::isfinite(rho)) fail("annotation weight must be a finite value >= 0");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout rate must lie in [0, 1)");
  if (!(averaging_decay >= 0.0 && averaging_decay < 1.0)) fail("averaging decay must lie in [0, 1)");
  if (batch_size == 0) fail("batch size must be positive");
  if (workers == 0) fail("worker count must be positive");
  if (hidden_sizes.empty()) fail("at least one hidden layer size is required");
  for (auto h : hidden_sizes)
    if (h == 0) fail("hidden layer sizes must be positive");
  if (is_deep(model_kind)) {
    if (!is_supervised(model_kind) && head != SupervisedHead::Softmax)
      fail("--head applies only to supervised models");
  } else {
    if (hidden_sizes.size() != 1) fail(to_string(model_kind) + " has exactly one hidden layer");
    if (head != SupervisedHead::Softmax) fail(to_string(model_kind) + " supports only the softmax head");
    if (dropout_rate != 0.0) fail("dropout applies only to deep models");
    if (rho != 1.0) fail("the annotation weight applies only to deep models");
    if (split_mode != SplitMode::UniformPrefix) fail("split modes apply only to deep models");
  }
}

std::string TrainConfig::to_json() const {
  nlohmann::ordered_json j;
  j["model_kind"] = to_string(model_kind);
  j["head"] = to_string(head);
  j["learning_rate"] = learning_rate;
  j["lambda"] = lambda;
  j["rho"] = rho;
  j["dropout_rate"] = dropout_rate;
  j["averaging_decay"] = averaging_decay;
  j["epochs"] = epochs;
  j["pretrain_epochs"] = pretrain_epochs;
  j["batch_size"] = batch_size;
  j["workers"] = workers;
  j["hidden_sizes"] = hidden_sizes;
  j["seed"] = seed;
  j["split_mode"] = split_mode == SplitMode::UniformPrefix ? "prefix" : "per-word";
  j["unit_variance"] = unit_variance;
  j["learning_rate_guard"] = learning_rate_guard;
  return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    TrainConfig c;
    c.model_kind = parse_model_kind(j.at("model_kind").get<std::string>());
    c.head = parse_head(j.at("head").get<std::string>());
    c.learning_rate = j.at("learning_rate").get<double>();
    c.lambda = j.at("lambda").get<double>();
    c.rho = j.at("rho").get<double>();
    c.dropout_rate = j.at("dropout_rate").get<double>();
    c.averaging_decay = j.at("averaging_decay").get<double>();
    c.epochs = j.at("epochs").get<std::uint32_t>();
    c.pretrain_epochs = j.at("pretrain_epochs").get<std::uint32_t>();
    c.batch_size = j.at("batch_size").get<std::uint32_t>();
    c.workers = j.at("workers").get<std::uint32_t>();
    c.hidden_sizes = j.at("hidden_sizes").get<std::vector<std::uint32_t>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.split_mode = j.at("split_mode").get<std::string>() == "prefix" ? SplitMode::UniformPrefix
                                                                        : SplitMode::PerWordUniform;
    c.unit_variance = j.at("unit_variance").get<bool>();
    c.learning_rate_guard = j.at("learning_rate_guard").get<double>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed training configuration: ") + e.what());
  }
}

Matrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  require(rows >= 1 && cols >= 1, "glorot_init needs positive dimensions");
  const double bound = std::sqrt(6.0) / std::sqrt(static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  // Row-major fill so the draw order does not depend on storage order.
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(-bound, bound);
  return m;
}

namespace {

template <typename Array>
void glorot_fill(Array& a, Rng& rng) {
  if (a.rows() > 0 && a.cols() > 0) a = glorot_init(a.rows(), a.cols(), rng);
}

void init_supervised_head(Model& m, Rng& rng) {
  if (is_deep(m.kind)) {
    glorot_fill(m.deep.U, rng);
    m.deep.d.setZero();
  } else {
    glorot_fill(m.shallow.U, rng);
    m.shallow.d.setZero();
  }
}

}  // namespace

Model initialize_model(const TrainConfig& config, const JointVocabulary& vocab, std::uint32_t n_classes,
                       std::uint32_t n_features) {
  config.validate();
  Model m;
  m.kind = config.model_kind;
  m.head = config.head;
  m.vocab = VocabularyShape::of(vocab);
  m.n_classes = is_supervised(config.model_kind) ? n_classes : 0;
  m.n_features = n_features;
  m.rho = config.rho;
  const Eigen::Index q = vocab.size();
  require(q >= 1, "empty vocabulary");
  if (is_supervised(config.model_kind) && n_classes < 2)
    throw DataError("supervised training needs at least 2 classes, corpus declares " + std::to_string(n_classes));
  Rng rng = Rng::stream(config.seed, "init");
  if (is_deep(config.model_kind)) {
    std::vector<Eigen::Index> sizes(config.hidden_sizes.begin(), config.hidden_sizes.end());
    m.deep = DeepParams::zeros(q, sizes, m.n_classes, n_features);
    m.deep.settings.dropout_rate = config.dropout_rate;
    m.deep.settings.unit_variance = config.unit_variance;
    for (auto& layer : m.deep.layers) glorot_fill(layer.W, rng);
    glorot_fill(m.deep.P, rng);
    glorot_fill(m.deep.V_out, rng);
  } else {
    if (n_features != 0) throw DataError("global features are supported only by deep models");
    m.tree = WordTree::build(static_cast<std::uint32_t>(q), config.seed);
    m.shallow = ShallowParams::zeros(config.hidden_sizes.front(), q, m.n_classes);
    glorot_fill(m.shallow.W, rng);
    glorot_fill(m.shallow.V, rng);
  }
  init_supervised_head(m, rng);
  return m;
}

std::string format_epoch_line(const EpochStats& s) {
  std::ostringstream out;
  out.precision(17);
  out << "epoch " << s.global_epoch << " phase " << (s.phase == Phase::Pretrain ? "pretrain" : "finetune")
      << " loss " << s.mean_loss << " time " << s.seconds;
  return out.str();
}

// ---------------------------------------------------------------------------

Trainer::Trainer(TrainConfig config, Model initial)
    : config_(std::move(config)),
      shuffle_rng_(Rng::stream(config_.seed, "shuffle")),
      split_rng_(Rng::stream(config_.seed, "split")),
      dropout_rng_(Rng::stream(config_.seed, "dropout")),
      init_rng_(Rng::stream(config_.seed, "init-head")),
      phase_(config_.pretrain_epochs > 0 ? Phase::Pretrain : Phase::Finetune) {
  config_.validate();
  params_.current = std::move(initial);
  params_.averaged = params_.current;
  params_.decay = config_.averaging_decay;
}

void Trainer::begin_finetune() {
  phase_ = Phase::Finetune;
  epoch_in_phase_ = 0;
  init_supervised_head(params_.current, init_rng_);
  params_.averaged = params_.current;
}

std::optional<double> Trainer::document_gradient(const MultimodalDocument& doc, std::uint64_t split_seed,
                                                 std::uint64_t dropout_seed, Model& grads) const {
  const Model& m = params_.current;
  const bool supervised = phase_ == Phase::Finetune && is_supervised(m.kind);
  const double lambda = supervised ? config_.lambda : 1.0;
  if (!supervised && doc.counts.empty()) return std::nullopt;
  Rng split(split_seed);
  if (is_deep(m.kind)) {
    Rng dropout(dropout_seed);
    HybridOptions options;
    options.lambda = lambda;
    options.rho = m.rho;
    options.n_visual_slots = m.vocab.n_visual_slots();
    options.supervised = supervised;
    options.head = m.head;
    options.split_mode = config_.split_mode;
    return hybrid_gradients(doc, m.deep, options, split, dropout, grads.deep);
  }
  const auto ordering = random_ordering(doc.counts, split);
  std::optional<std::uint32_t> label;
  if (supervised) {
    if (doc.labels.size() != 1)
      throw DataError("supervised shallow training needs exactly one label per document, found " +
                      std::to_string(doc.labels.size()));
    label = doc.labels.front();
  }
  return supdocnade_gradients(ordering, label, m.shallow, m.tree, lambda, grads.shallow);
}

EpochStats Trainer::run_epoch(const Corpus& corpus) {
  if (corpus.documents.empty()) throw DataError("cannot train on an empty corpus");
  params_.current.check_compatible(corpus, phase_ == Phase::Finetune);
  const auto start = std::chrono::steady_clock::now();

  const std::size_t n = corpus.documents.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle_rng_.shuffle(order);

  const std::size_t workers = config_.workers;
  std::vector<Model> grads(workers, zeros_like(params_.current));
  Model total = zeros_like(params_.current);
  std::vector<std::optional<double>> losses(config_.batch_size);
  std::vector<std::uint64_t> split_seeds(config_.batch_size), dropout_seeds(config_.batch_size);

  double loss_sum = 0.0;
  EpochStats stats;
  stats.phase = phase_;

  for (std::size_t begin = 0; begin < n; begin += config_.batch_size) {
    const std::size_t count = std::min<std::size_t>(config_.batch_size, n - begin);
    for (std::size_t i = 0; i < count; ++i) {
      split_seeds[i] = split_rng_.next_u64();
      dropout_seeds[i] = dropout_rng_.next_u64();
    }

    const std::size_t used = std::min(workers, count);
    const auto work = [&](std::size_t w) {
      set_zero(grads[w]);
      for (std::size_t i = w * count / used; i < (w + 1) * count / used; ++i)
        losses[i] = document_gradient(corpus.documents[order[begin + i]], split_seeds[i], dropout_seeds[i], grads[w]);
    };
    if (used == 1) {
      work(0);
    } else {
      std::vector<std::exception_ptr> errors(used);
      std::vector<std::thread> threads;
      for (std::size_t w = 0; w < used; ++w)
        threads.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      for (auto& t : threads) t.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    std::size_t contributed = 0;
    for (std::size_t i = 0; i < count; ++i) {
      if (!losses[i]) {
        ++stats.skipped;
        continue;
      }
      if (!std::isfinite(*losses[i]))
        throw NumericError("non-finite loss at document " + std::to_string(order[begin + i]));
      loss_sum += *losses[i];
      ++contributed;
    }
    stats.documents += contributed;
    if (contributed == 0 || config_.learning_rate == 0.0) continue;

    set_zero(total);
    for (std::size_t w = 0; w < used; ++w) add_scaled(total, grads[w], 1.0);
    add_scaled(params_.current, total, -config_.learning_rate / static_cast<double>(count));
    if (!all_finite(params_.current))
      throw NumericError("non-finite parameters after the update for document " +
                         std::to_string(order[begin]));
    polyak_update(params_);
  }

  stats.mean_loss = stats.documents ? loss_sum / static_cast<double>(stats.documents) : 0.0;
  if (!std::isfinite(stats.mean_loss)) throw NumericError("non-finite mean epoch loss");
  ++epoch_in_phase_;
  ++global_epoch_;
  stats.epoch = epoch_in_phase_;
  stats.global_epoch = global_epoch_;
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return stats;
}

// ---------------------------------------------------------------------------
// Checkpoints: magic, version, config, phase/epochs, RNG states, current
// model container, averaged arrays.

namespace {
constexpr char kCheckpointMagic[8] = {'D', 'N', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + tmp);
    BinaryWriter w(out);
    w.bytes(kCheckpointMagic, sizeof kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.str(config_.to_json());
    w.u32(static_cast<std::uint32_t>(phase_));
    w.u32(epoch_in_phase_);
    w.u32(global_epoch_);
    w.str(shuffle_rng_.save_state());
    w.str(split_rng_.save_state());
    w.str(dropout_rng_.save_state());
    w.str(init_rng_.save_state());
    write_model(out, params_.current);
    params_.averaged.for_each_array([&](const auto&, const auto& a) { w.array(a); });
    out.flush();
    if (!out) throw DataError("cannot write checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Trainer Trainer::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  BinaryReader r(in);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw DataError("not a checkpoint file (bad magic)");
  if (const auto v = r.u32(); v != kCheckpointVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(v));
  const TrainConfig config = TrainConfig::from_json(r.str());
  const auto phase = r.u32();
  if (phase > 1) throw DataError("unknown training phase tag " + std::to_string(phase));
  const auto epoch_in_phase = r.u32();
  const auto global_epoch = r.u32();
  std::string states[4];
  for (auto& s : states) s = r.str();
  Model current = read_model(in);
  Model averaged = current;
  averaged.for_each_array([&](const auto& name, auto& a) { r.array(a, std::string(name)); });

  Trainer t(config, std::move(current));
  t.params_.averaged = std::move(averaged);
  t.phase_ = static_cast<Phase>(phase);
  t.epoch_in_phase_ = epoch_in_phase;
  t.global_epoch_ = global_epoch;
  t.shuffle_rng_.load_state(states[0]);
  t.split_rng_.load_state(states[1]);
  t.dropout_rng_.load_state(states[2]);
  t.init_rng_.load_state(states[3]);
  return t;
}

// ---------------------------------------------------------------------------

Model run_training(Trainer& trainer, const Corpus* unlabeled, const Corpus& labeled, const TrainHooks& hooks) {
  const auto& config = trainer.config();
  const auto after_epoch = [&](const EpochStats& stats) {
    if (hooks.checkpoint_path) trainer.save_checkpoint(*hooks.checkpoint_path);
    if (hooks.on_epoch) hooks.on_epoch(stats, trainer);
  };
  if (trainer.phase() == Phase::Pretrain) {
    const Corpus& corpus = unlabeled ? *unlabeled : labeled;
    while (trainer.epoch_in_phase() < config.pretrain_epochs) after_epoch(trainer.run_epoch(corpus));
    trainer.begin_finetune();
  }
  while (trainer.epoch_in_phase() < config.epochs) after_epoch(trainer.run_epoch(labeled));
  return trainer.averaged();
}

Model pretrain_then_finetune(const Corpus* unlabeled, const Corpus& labeled, const TrainConfig& config,
                             const TrainHooks& hooks) {
  config.validate();
  if (unlabeled) {
    if (!(unlabeled->vocabulary == labeled.vocabulary))
      throw DataError("pretraining and fine-tuning corpora have different vocabularies");
    if (unlabeled->n_features != labeled.n_features)
      throw DataError("pretraining and fine-tuning corpora have different global feature lengths");
  }
  Trainer trainer(config, initialize_model(config, labeled.vocabulary, labeled.n_classes, labeled.n_features));
  return run_training(trainer, unlabeled, labeled, hooks);
}

}  // namespace docnade
