#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "docnade/trainer.hpp"
#include "support/synthetic.hpp"

using namespace docnade;
using namespace docnade::testing;
namespace fs = std::filesystem;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.n_classes = 3;
  s.n_visual = 30;
  s.n_annotation = 9;
  s.visual_per_class = 8;
  s.annotation_per_class = 3;
  s.visual_tokens = 10;
  s.annotation_tokens = 2;
  s.visual_specific_mass = 0.5;
  return s;
}

Corpus small_corpus(std::uint64_t seed, std::uint32_t per_class = 10) {
  Rng rng(seed);
  return SyntheticGenerator(small_spec()).generate(per_class, rng);
}

TrainConfig small_config(ModelKind kind) {
  TrainConfig c;
  c.model_kind = kind;
  c.hidden_sizes = is_deep(kind) ? std::vector<std::uint32_t>{8, 6} : std::vector<std::uint32_t>{8};
  c.epochs = 3;
  c.learning_rate = 0.05;
  c.dropout_rate = is_deep(kind) ? 0.2 : 0.0;
  c.seed = 17;
  return c;
}

Trainer make_trainer(const TrainConfig& config, const Corpus& corpus) {
  return Trainer(config, initialize_model(config, corpus.vocabulary, corpus.n_classes, corpus.n_features));
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("docnade_trainer_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

constexpr ModelKind kAllKinds[] = {ModelKind::DocNADE, ModelKind::SupDocNADE, ModelKind::DeepDocNADE,
                                   ModelKind::SupDeepDocNADE};

}  // namespace

TEST(Glorot, BoundsAndMoments) {
  Rng rng(1);
  const Matrix m = glorot_init(2048, 2048, rng);
  const double bound = std::sqrt(6.0 / 4096.0);
  EXPECT_LE(m.cwiseAbs().maxCoeff(), bound);
  EXPECT_NEAR(m.mean(), 0.0, 1e-3 * bound);
  EXPECT_NEAR(m.array().square().mean(), bound * bound / 3.0, 1e-2 * bound * bound);
}

TEST(Polyak, IncrementalForm) {
  AveragedParams<ShallowParams> avg;
  avg.current = ShallowParams::zeros(1, 2, 0);
  avg.averaged = avg.current;
  avg.decay = 0.9;
  avg.current.c[0] = 1.0;
  polyak_update(avg);
  EXPECT_NEAR(avg.averaged.c[0], 0.1, 1e-15);
  polyak_update(avg);
  EXPECT_NEAR(avg.averaged.c[0], 0.19, 1e-15);

  // Two-step hand recursion with decay 0.5 over the sequence (0, 1).
  avg.decay = 0.5;
  avg.averaged.c[0] = 0.0;
  avg.current.c[0] = 0.0;
  polyak_update(avg);
  avg.current.c[0] = 1.0;
  polyak_update(avg);
  EXPECT_EQ(avg.averaged.c[0], 0.5);

  avg.decay = 0.0;
  avg.current.c[0] = 3.25;
  polyak_update(avg);
  EXPECT_EQ(avg.averaged.c[0], 3.25);

  // Fixed point: averaged == current stays bit-identical for any decay.
  avg.current.W.setConstant(0.1 + 0.2);
  avg.averaged = avg.current;
  for (double decay : {0.0, 0.3, 0.999}) {
    avg.decay = decay;
    for (int i = 0; i < 100; ++i) polyak_update(avg);
    EXPECT_TRUE(bitwise_equal(avg.averaged, avg.current));
  }
}

TEST(TrainConfig, Validation) {
  const auto bad = [](auto mutate) {
    TrainConfig c;
    mutate(c);
    return c;
  };
  EXPECT_NO_THROW(TrainConfig{}.validate());
  EXPECT_THROW(bad([](TrainConfig& c) { c.learning_rate = -1; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.learning_rate = 11; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.lambda = -0.1; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.averaging_decay = 1.0; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.batch_size = 0; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.hidden_sizes = {50, 50}; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.dropout_rate = 0.5; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) { c.head = SupervisedHead::Sigmoid; }).validate(), UsageError);
  EXPECT_THROW(bad([](TrainConfig& c) {
                 c.model_kind = ModelKind::DeepDocNADE;
                 c.head = SupervisedHead::Sigmoid;
               }).validate(),
               UsageError);
  EXPECT_NO_THROW(bad([](TrainConfig& c) {
                    c.model_kind = ModelKind::SupDeepDocNADE;
                    c.head = SupervisedHead::Sigmoid;
                    c.hidden_sizes = {20, 20, 20};
                    c.dropout_rate = 0.5;
                    c.rho = 12000;
                  }).validate());
}

TEST(TrainConfig, JsonRoundTrip) {
  TrainConfig c = small_config(ModelKind::SupDeepDocNADE);
  c.head = SupervisedHead::Sigmoid;
  c.rho = 0.1 + 0.2;
  c.split_mode = SplitMode::PerWordUniform;
  c.unit_variance = false;
  c.seed = std::numeric_limits<std::uint64_t>::max();
  EXPECT_EQ(TrainConfig::from_json(c.to_json()), c);
}

TEST(Trainer, ZeroLearningRateLeavesModelUnchanged) {
  const Corpus corpus = small_corpus(2);
  for (auto kind : kAllKinds) {
    auto config = small_config(kind);
    config.learning_rate = 0.0;
    const Model initial = initialize_model(config, corpus.vocabulary, corpus.n_classes, 0);
    Trainer t(config, initial);
    for (int e = 0; e < 2; ++e) t.run_epoch(corpus);
    EXPECT_TRUE(bitwise_equal(t.current(), initial)) << to_string(kind);
    EXPECT_TRUE(bitwise_equal(t.averaged(), initial)) << to_string(kind);
  }
}

TEST(Trainer, DeterministicForFixedSeed) {
  const Corpus corpus = small_corpus(3);
  for (auto kind : kAllKinds) {
    auto config = small_config(kind);
    config.batch_size = 4;
    config.workers = 2;
    Trainer a = make_trainer(config, corpus), b = make_trainer(config, corpus);
    for (int e = 0; e < 2; ++e) {
      const auto sa = a.run_epoch(corpus), sb = b.run_epoch(corpus);
      EXPECT_EQ(sa.mean_loss, sb.mean_loss);
    }
    EXPECT_TRUE(bitwise_equal(a.averaged(), b.averaged())) << to_string(kind);
  }
}

TEST(Trainer, WorkerCountChangesOnlySummationOrder) {
  const Corpus corpus = small_corpus(4);
  auto config = small_config(ModelKind::SupDocNADE);
  config.batch_size = 6;
  Trainer one = make_trainer(config, corpus);
  config.workers = 3;
  Trainer three = make_trainer(config, corpus);
  one.run_epoch(corpus);
  three.run_epoch(corpus);
  auto a = array_spans(one.current());
  auto b = array_spans(three.current());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) ASSERT_NEAR(a[i][j], b[i][j], 1e-12);
}

TEST(Trainer, TrainingLossDecreases) {
  const Corpus corpus = small_corpus(5, 20);
  for (auto kind : kAllKinds) {
    auto config = small_config(kind);
    Trainer t = make_trainer(config, corpus);
    const double first = t.run_epoch(corpus).mean_loss;
    double last = first;
    for (int e = 0; e < 9; ++e) last = t.run_epoch(corpus).mean_loss;
    EXPECT_LT(last, first) << to_string(kind);
  }
}

TEST(Trainer, EmptyDocumentsAreSkippedWithoutSupervision) {
  Corpus corpus = small_corpus(6, 2);
  corpus.documents.push_back(MultimodalDocument{});
  auto config = small_config(ModelKind::DocNADE);
  Trainer t = make_trainer(config, corpus);
  const auto stats = t.run_epoch(corpus);
  EXPECT_EQ(stats.skipped, 1u);
  EXPECT_EQ(stats.documents, corpus.documents.size() - 1);
}

TEST(Trainer, NonFiniteParametersRaiseNumericError) {
  const Corpus corpus = small_corpus(7, 2);
  auto config = small_config(ModelKind::SupDocNADE);
  Model m = initialize_model(config, corpus.vocabulary, corpus.n_classes, 0);
  m.shallow.c[0] = std::numeric_limits<double>::quiet_NaN();
  Trainer t(config, m);
  EXPECT_THROW(t.run_epoch(corpus), NumericError);
}

TEST(Trainer, IncompatibleCorpusIsDataError) {
  const Corpus corpus = small_corpus(8, 2);
  auto config = small_config(ModelKind::SupDocNADE);
  Trainer t = make_trainer(config, corpus);
  SyntheticSpec other = small_spec();
  other.n_visual = 31;
  Rng rng(1);
  EXPECT_THROW(t.run_epoch(SyntheticGenerator(other).generate(2, rng)), DataError);
}

TEST(Trainer, CheckpointResumeMatchesUninterruptedRun) {
  const Corpus corpus = small_corpus(9);
  const auto dir = scratch("resume");
  for (auto kind : kAllKinds) {
    auto config = small_config(kind);
    config.pretrain_epochs = is_supervised(kind) ? 2 : 0;
    config.epochs = 3;
    Trainer straight = make_trainer(config, corpus);
    const Model full = run_training(straight, nullptr, corpus);

    Trainer first = make_trainer(config, corpus);
    TrainHooks hooks;
    const auto ckpt = dir / (to_string(kind) + ".ckpt");
    hooks.checkpoint_path = ckpt;
    int seen = 0;
    hooks.on_epoch = [&](const EpochStats&, const Trainer&) {
      if (++seen == 3) throw std::runtime_error("interrupt");
    };
    EXPECT_THROW(run_training(first, nullptr, corpus, hooks), std::runtime_error);

    Trainer resumed = Trainer::load_checkpoint(ckpt);
    EXPECT_EQ(resumed.global_epoch(), 3u);
    EXPECT_EQ(resumed.config(), config);
    const Model finished = run_training(resumed, nullptr, corpus);
    EXPECT_TRUE(bitwise_equal(finished, full)) << to_string(kind);
  }
}

TEST(Trainer, FinetuneRestartsAveragingWithFreshHead) {
  const Corpus corpus = small_corpus(10);
  auto config = small_config(ModelKind::SupDeepDocNADE);
  config.pretrain_epochs = 2;
  Trainer t = make_trainer(config, corpus);
  EXPECT_EQ(t.phase(), Phase::Pretrain);
  t.run_epoch(corpus);
  const Model before = t.current();
  EXPECT_EQ(before.deep.U, initialize_model(config, corpus.vocabulary, corpus.n_classes, 0).deep.U);
  t.begin_finetune();
  EXPECT_EQ(t.phase(), Phase::Finetune);
  EXPECT_TRUE(bitwise_equal(t.averaged(), t.current()));
  EXPECT_FALSE(t.current().deep.U == before.deep.U);
  EXPECT_EQ(t.current().deep.layers[0].W, before.deep.layers[0].W);
}

TEST(Trainer, ZeroPretrainEpochsStartsInFinetune) {
  const Corpus corpus = small_corpus(11, 2);
  auto config = small_config(ModelKind::SupDocNADE);
  config.pretrain_epochs = 0;
  config.epochs = 1;
  Trainer t = make_trainer(config, corpus);
  EXPECT_EQ(t.phase(), Phase::Finetune);
  std::vector<Phase> phases;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochStats& s, const Trainer&) { phases.push_back(s.phase); };
  run_training(t, nullptr, corpus, hooks);
  EXPECT_EQ(phases, std::vector<Phase>{Phase::Finetune});
}

TEST(Trainer, PretrainVocabularyMismatch) {
  const Corpus labeled = small_corpus(12, 2);
  SyntheticSpec other = small_spec();
  other.n_annotation = 10;
  Rng rng(2);
  Corpus unlabeled = SyntheticGenerator(other).generate(2, rng);
  for (auto& d : unlabeled.documents) d.labels.clear();
  unlabeled.n_classes = 0;
  auto config = small_config(ModelKind::SupDeepDocNADE);
  config.pretrain_epochs = 1;
  EXPECT_THROW(pretrain_then_finetune(&unlabeled, labeled, config), DataError);
}

TEST(Trainer, PretrainOnUnlabeledCorpus) {
  const Corpus labeled = small_corpus(13, 4);
  Corpus unlabeled = small_corpus(14, 4);
  for (auto& d : unlabeled.documents) d.labels.clear();
  unlabeled.n_classes = 0;
  auto config = small_config(ModelKind::SupDeepDocNADE);
  config.pretrain_epochs = 2;
  config.epochs = 1;
  std::vector<std::size_t> docs;
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochStats& s, const Trainer&) { docs.push_back(s.documents); };
  const Model m = pretrain_then_finetune(&unlabeled, labeled, config, hooks);
  EXPECT_EQ(docs, (std::vector<std::size_t>{unlabeled.documents.size(), unlabeled.documents.size(),
                                             labeled.documents.size()}));
  EXPECT_TRUE(all_finite(m));
}

TEST(Trainer, EpochLineFormat) {
  EpochStats s;
  s.phase = Phase::Pretrain;
  s.epoch = 1;
  s.global_epoch = 3;
  s.mean_loss = 1.5;
  s.seconds = 0.25;
  const auto line = format_epoch_line(s);
  EXPECT_EQ(line.rfind("epoch 3 phase pretrain loss ", 0), 0u) << line;
  EXPECT_NE(line.find(" time "), std::string::npos);
}
