#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "docnade/corpus.hpp"
#include "docnade/model.hpp"
#include "docnade/rng.hpp"

namespace docnade {

struct TrainConfig {
  ModelKind model_kind = ModelKind::SupDocNADE;
  SupervisedHead head = SupervisedHead::Softmax;
  double learning_rate = 0.01;
  double lambda = 1.0;  // generative weight of the hybrid loss
  double rho = 1.0;     // annotation weight (deep kinds)
  double dropout_rate = 0.0;
  double averaging_decay = 0.999;
  std::uint32_t epochs = 10;
  std::uint32_t pretrain_epochs = 0;
  std::uint32_t batch_size = 1;
  std::uint32_t workers = 1;
  std::vector<std::uint32_t> hidden_sizes{50};  // one entry for shallow kinds
  std::uint64_t seed = 0;
  SplitMode split_mode = SplitMode::UniformPrefix;
  bool unit_variance = true;
  // Learning rates above this are refused.
  double learning_rate_guard = 10.0;

  // Throws UsageError describing the first violated constraint.
  void validate() const;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Entries i.i.d. uniform on +-sqrt(6 / (rows + cols)).
Matrix glorot_init(Eigen::Index rows, Eigen::Index cols, Rng& rng);

// Glorot weights and zero biases for the configured kind and shapes.
Model initialize_model(const TrainConfig& config, const JointVocabulary& vocab, std::uint32_t n_classes,
                       std::uint32_t n_features);

template <typename Params>
struct AveragedParams {
  Params current;
  Params averaged;
  double decay = 0.999;
};

// averaged <- decay * averaged + (1 - decay) * current, written as
// averaged += (1 - decay) * (current - averaged) so that a fixed point stays
// bit-identical.
template <typename Params>
void polyak_update(AveragedParams<Params>& avg) {
  auto a = array_spans(avg.averaged);
  auto c = array_spans(std::as_const(avg.current));
  const double step = 1.0 - avg.decay;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) a[i][j] += step * (c[i][j] - a[i][j]);
}

enum class Phase : std::uint32_t { Pretrain = 0, Finetune = 1 };

struct EpochStats {
  Phase phase = Phase::Finetune;
  std::uint32_t epoch = 0;         // 1-based within the phase
  std::uint32_t global_epoch = 0;  // 1-based over the run
  double mean_loss = 0.0;
  std::size_t documents = 0;  // documents that contributed
  std::size_t skipped = 0;    // empty documents without a supervised term
  double seconds = 0.0;
};

// "epoch <n> phase <name> loss <x> time <s>"
std::string format_epoch_line(const EpochStats& stats);

class Trainer {
 public:
  Trainer(TrainConfig config, Model initial);

  const TrainConfig& config() const { return config_; }
  const Model& current() const { return params_.current; }
  const Model& averaged() const { return params_.averaged; }
  Phase phase() const { return phase_; }
  std::uint32_t epoch_in_phase() const { return epoch_in_phase_; }
  std::uint32_t global_epoch() const { return global_epoch_; }

  // One pass over `corpus` in a freshly shuffled order. In the pretraining
  // phase only the generative term is used.
  EpochStats run_epoch(const Corpus& corpus);

  // Switches to fine-tuning: fresh supervised head, averaging restarted.
  void begin_finetune();

  void save_checkpoint(const std::filesystem::path& path) const;
  static Trainer load_checkpoint(const std::filesystem::path& path);

 private:
  std::optional<double> document_gradient(const MultimodalDocument& doc, std::uint64_t split_seed,
                                          std::uint64_t dropout_seed, Model& grads) const;

  TrainConfig config_;
  AveragedParams<Model> params_;
  Rng shuffle_rng_;
  Rng split_rng_;
  Rng dropout_rng_;
  Rng init_rng_;
  Phase phase_;
  std::uint32_t epoch_in_phase_ = 0;
  std::uint32_t global_epoch_ = 0;
};

struct TrainHooks {
  std::function<void(const EpochStats&, const Trainer&)> on_epoch;
  std::optional<std::filesystem::path> checkpoint_path;  // rewritten after every epoch
};

// Runs the remaining epochs of both phases from the trainer's state and
// returns the averaged model. Pretraining uses `unlabeled` when given, else
// `labeled`.
Model run_training(Trainer& trainer, const Corpus* unlabeled, const Corpus& labeled, const TrainHooks& hooks = {});

// Checks that the corpora share a vocabulary, initializes, and trains.
Model pretrain_then_finetune(const Corpus* unlabeled, const Corpus& labeled, const TrainConfig& config,
                             const TrainHooks& hooks = {});

}  // namespace docnade
