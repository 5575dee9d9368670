// docnade: train, evaluate and query DocNADE-family models.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include "docnade/corpus.hpp"
#include "docnade/evaluation.hpp"
#include "docnade/model.hpp"
#include "docnade/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace docnade;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;
constexpr int kArtifactVersion = 1;

struct CorpusFlags {
  std::string path;
  std::string format = "text-sparse";
  std::string header;
  std::optional<std::uint32_t> regions;

  void add(CLI::App* cmd, const std::string& name, const std::string& what, bool required = true) {
    auto* opt = cmd->add_option("--" + name, path, what);
    if (required) opt->required();
    cmd->add_option("--format", format, "corpus format: text-sparse or record-lines")
        ->check(CLI::IsMember({"text-sparse", "record-lines"}));
    cmd->add_option("--header", header, "corpus header file (default: <corpus>.header)");
    cmd->add_option("--regions", regions, "expected number of spatial regions");
  }

  Corpus load() const { return load(path); }

  Corpus load(const std::string& p, const std::string& header_override = "") const {
    std::optional<fs::path> h;
    if (!header_override.empty())
      h = header_override;
    else if (!header.empty() && p == path)
      h = header;
    Corpus c = parse_corpus(p, parse_corpus_format(format), h);
    if (regions && c.vocabulary.n_regions() != *regions)
      throw DataError("corpus " + p + " has " + std::to_string(c.vocabulary.n_regions()) +
                      " regions, --regions says " + std::to_string(*regions));
    return c;
  }

  json to_json() const {
    json j;
    j["path"] = path;
    j["format"] = format;
    j["header"] = header;
    return j;
  }
};

struct TrainFlags {
  std::string model = "supdocnade";
  std::uint32_t hidden = 50;
  std::uint32_t layers = 1;
  double lambda = 1.0;
  double anno_weight = 1.0;
  double dropout = 0.5;
  double avg_decay = 0.999;
  std::string head = "softmax";
  double lr = 0.01;
  std::uint32_t epochs = 10;
  std::uint32_t pretrain_epochs = 0;
  std::uint32_t batch_size = 1;
  std::uint64_t seed = 0;
  std::uint32_t workers = 1;
  std::string split_mode = "prefix";
  bool no_unit_variance = false;
  CLI::Option* dropout_opt = nullptr;

  void add(CLI::App* cmd) {
    cmd->add_option("--model", model, "model kind")
        ->check(CLI::IsMember({"docnade", "supdocnade", "deepdocnade", "supdeepdocnade"}));
    cmd->add_option("--hidden", hidden, "hidden units per layer");
    cmd->add_option("--layers", layers, "hidden layers (deep models)");
    cmd->add_option("--lambda", lambda, "weight of the generative term");
    cmd->add_option("--anno-weight", anno_weight, "annotation word weight (deep models)");
    dropout_opt = cmd->add_option("--dropout", dropout, "dropout rate (deep models, default 0.5)");
    cmd->add_option("--avg-decay", avg_decay, "parameter averaging decay");
    cmd->add_option("--head", head, "supervised head: softmax or sigmoid");
    cmd->add_option("--lr", lr, "learning rate");
    cmd->add_option("--epochs", epochs, "fine-tuning (or only) epochs");
    cmd->add_option("--pretrain-epochs", pretrain_epochs, "unsupervised pretraining epochs");
    cmd->add_option("--batch-size", batch_size, "documents per update");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--workers", workers, "gradient worker threads");
    cmd->add_option("--split-mode", split_mode, "histogram split: prefix or per-word")
        ->check(CLI::IsMember({"prefix", "per-word"}));
    cmd->add_flag("--no-unit-variance", no_unit_variance, "do not rescale input histograms");
  }

  TrainConfig config() const {
    TrainConfig c;
    c.model_kind = parse_model_kind(model);
    c.head = parse_head(head);
    if (!is_supervised(c.model_kind) && c.head != SupervisedHead::Softmax)
      throw UsageError("--head " + head + " requires a supervised model");
    c.learning_rate = lr;
    c.lambda = lambda;
    c.rho = anno_weight;
    const bool dropout_given = dropout_opt && dropout_opt->count() > 0;
    c.dropout_rate = is_deep(c.model_kind) || dropout_given ? dropout : 0.0;
    c.averaging_decay = avg_decay;
    c.epochs = epochs;
    c.pretrain_epochs = pretrain_epochs;
    c.batch_size = batch_size;
    c.workers = workers;
    if (layers == 0) throw UsageError("--layers must be positive");
    if (!is_deep(c.model_kind) && layers != 1) throw UsageError("--layers applies only to deep models");
    c.hidden_sizes.assign(layers, hidden);
    c.seed = seed;
    c.split_mode = split_mode == "prefix" ? SplitMode::UniformPrefix : SplitMode::PerWordUniform;
    c.unit_variance = !no_unit_variance;
    c.validate();
    return c;
  }
};

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// Creates <root>/<hash of manifest> and writes manifest.json into it.
fs::path make_run_dir(const std::string& root, json& manifest) {
  manifest["artifact_version"] = kArtifactVersion;
  const std::string text = manifest.dump(2);
  const fs::path dir = fs::path(root) / hex64(fnv1a64(text));
  fs::create_directories(dir);
  std::ofstream(dir / "manifest.json") << text << '\n';
  return dir;
}

void print_json_line(const json& j) { std::cout << j.dump() << '\n'; }

json ranking_json(const RankedPrediction& r) {
  json j;
  j["ids"] = r.ids;
  j["scores"] = r.scores;
  return j;
}

// ---------------------------------------------------------------------------

struct TrainCommand {
  CorpusFlags corpus;
  std::string unlabeled;
  std::string unlabeled_header;
  TrainFlags flags;
  std::string out_dir = "runs";
  std::string resume;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("train", "train a model");
    corpus.add(cmd, "corpus", "training corpus");
    cmd->add_option("--unlabeled", unlabeled, "corpus for unsupervised pretraining");
    cmd->add_option("--unlabeled-header", unlabeled_header, "header for the pretraining corpus");
    flags.add(cmd);
    cmd->add_option("--out-dir", out_dir, "root directory for run outputs");
    cmd->add_option("--resume", resume, "continue from a checkpoint file");
    cmd->callback([this] { run(); });
  }

  void run() {
    TrainConfig config = flags.config();
    std::optional<Trainer> resumed;
    if (!resume.empty()) {
      resumed.emplace(Trainer::load_checkpoint(resume));
      config = resumed->config();
    }

    json manifest;
    manifest["command"] = "train";
    manifest["config"] = json::parse(config.to_json());
    manifest["corpus"] = corpus.to_json();
    manifest["unlabeled"] = unlabeled;
    manifest["seed"] = config.seed;
    manifest["model"] = "model.bin";

    const Corpus labeled = corpus.load();
    std::optional<Corpus> pre;
    if (!unlabeled.empty()) pre = corpus.load(unlabeled, unlabeled_header);

    const fs::path dir = make_run_dir(out_dir, manifest);
    std::ofstream log(dir / "train.log", resumed ? std::ios::app : std::ios::trunc);
    TrainHooks hooks;
    hooks.checkpoint_path = dir / "checkpoint.bin";
    hooks.on_epoch = [&](const EpochStats& stats, const Trainer&) {
      log << format_epoch_line(stats) << '\n';
      log.flush();
      std::cerr << format_epoch_line(stats) << '\n';
    };

    Model model;
    if (resumed) {
      resumed->current().check_compatible(labeled);
      model = run_training(*resumed, pre ? &*pre : nullptr, labeled, hooks);
    } else {
      model = pretrain_then_finetune(pre ? &*pre : nullptr, labeled, config, hooks);
    }
    save_model(dir / "model.bin", model);
    std::cout << dir.string() << '\n';
  }
};

struct EvalCommand {
  CorpusFlags corpus;
  std::string model_file;
  EvalOptions options;
  std::string out_dir;
  bool table = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "evaluate a model on a corpus");
    corpus.add(cmd, "corpus", "evaluation corpus");
    cmd->add_option("--model-file", model_file, "trained model")->required();
    cmd->add_option("--split", options.split, "split name recorded in the report");
    cmd->add_option("-k,--top-k", options.annotation_k, "annotation words predicted per document");
    cmd->add_option("--orderings", options.perplexity_orderings, "orderings per document for perplexity");
    cmd->add_option("--seed", options.seed, "seed for sampled orderings");
    cmd->add_option("--out-dir", out_dir, "write report files under a run directory here");
    cmd->add_flag("--table", table, "print a table instead of records");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (options.annotation_k == 0) throw UsageError("--top-k must be positive");
    if (options.perplexity_orderings == 0) throw UsageError("--orderings must be positive");
    const Model model = load_model(model_file);
    const Corpus data = corpus.load();
    const EvalReport report = evaluate(model, data, options);
    if (table)
      write_report_table(std::cout, report);
    else
      write_report_records(std::cout, report);
    if (out_dir.empty()) return;
    json manifest;
    manifest["command"] = "eval";
    manifest["model_file"] = model_file;
    manifest["corpus"] = corpus.to_json();
    manifest["split"] = options.split;
    manifest["top_k"] = options.annotation_k;
    manifest["orderings"] = options.perplexity_orderings;
    manifest["seed"] = options.seed;
    const fs::path dir = make_run_dir(out_dir, manifest);
    std::ofstream records(dir / "report.jsonl");
    write_report_records(records, report);
    std::ofstream text(dir / "report.txt");
    write_report_table(text, report);
    for (std::size_t c = 0; c < report.pr_curves.size(); ++c) {
      std::ofstream curve(dir / ("pr_class_" + std::to_string(c) + ".txt"));
      write_pr_curve(curve, report.pr_curves[c]);
    }
  }
};

struct AnnotateCommand {
  CorpusFlags corpus;
  std::string model_file;
  std::size_t k = 5;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("annotate", "predict annotation words from visual words");
    corpus.add(cmd, "corpus", "documents to annotate");
    cmd->add_option("--model-file", model_file, "trained model")->required();
    cmd->add_option("-k,--top-k", k, "annotation words per document");
    cmd->callback([this] { run(); });
  }

  void run() {
    if (k == 0) throw UsageError("--top-k must be positive");
    const Model model = load_model(model_file);
    const Corpus data = corpus.load();
    model.check_compatible(data, false);
    for (std::size_t i = 0; i < data.documents.size(); ++i) {
      const auto ranking = generate_text(model, data.documents[i].visual_only(data.vocabulary), k);
      json j;
      j["doc"] = i;
      j["ids"] = ranking.ids;
      std::vector<std::string> words;
      for (auto id : ranking.ids) words.push_back(data.vocabulary.annotation_word(id));
      j["words"] = words;
      j["scores"] = ranking.scores;
      print_json_line(j);
    }
  }
};

RepresentationScope parse_scope(const std::string& s) {
  if (s == "visual") return RepresentationScope::VisualOnly;
  if (s == "all") return RepresentationScope::AllWords;
  throw UsageError("unknown scope '" + s + "'");
}

struct RetrieveCommand {
  CorpusFlags corpus;
  std::string model_file;
  std::string queries_path;
  std::string queries_header;
  std::vector<std::size_t> query_indices;
  std::size_t k = 10;
  std::string query_scope = "visual";
  std::string collection_scope = "all";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("retrieve", "rank a collection by cosine similarity of representations");
    corpus.add(cmd, "corpus", "collection to search");
    cmd->add_option("--model-file", model_file, "trained model")->required();
    cmd->add_option("--queries", queries_path, "query corpus (default: the collection itself)");
    cmd->add_option("--queries-header", queries_header, "header for the query corpus");
    cmd->add_option("--query", query_indices, "query document indices (default: all)");
    cmd->add_option("-k,--top-k", k, "results per query");
    cmd->add_option("--query-scope", query_scope, "words used for queries: visual or all")
        ->check(CLI::IsMember({"visual", "all"}));
    cmd->add_option("--collection-scope", collection_scope, "words used for the collection: visual or all")
        ->check(CLI::IsMember({"visual", "all"}));
    cmd->callback([this] { run(); });
  }

  void run() {
    if (k == 0) throw UsageError("--top-k must be positive");
    const Model model = load_model(model_file);
    const Corpus collection = corpus.load();
    model.check_compatible(collection, false);
    const Corpus queries = queries_path.empty() ? collection : corpus.load(queries_path, queries_header);
    model.check_compatible(queries, false);

    std::vector<Vector> reps;
    for (const auto& doc : collection.documents)
      reps.push_back(document_representation(model, doc, parse_scope(collection_scope)));
    std::vector<std::size_t> which = query_indices;
    if (which.empty())
      for (std::size_t i = 0; i < queries.documents.size(); ++i) which.push_back(i);
    for (auto q : which) {
      if (q >= queries.documents.size())
        throw UsageError("query index " + std::to_string(q) + " out of range");
      const Vector h = document_representation(model, queries.documents[q], parse_scope(query_scope));
      const auto result = cosine_retrieve(h, reps, k);
      json j;
      j["query"] = q;
      j["ids"] = result.ranking.ids;
      j["scores"] = result.ranking.scores;
      j["truncated"] = result.k_exceeds_collection;
      print_json_line(j);
    }
  }
};

struct InspectCommand {
  std::string model_file;
  std::optional<std::uint32_t> class_index;
  std::size_t topics = 3;
  std::size_t words = 10;
  std::string header;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("inspect", "show topics and words associated with each class");
    cmd->add_option("--model-file", model_file, "trained shallow supervised model")->required();
    cmd->add_option("--class", class_index, "class to inspect (default: all)");
    cmd->add_option("--topics", topics, "hidden units per class");
    cmd->add_option("--words", words, "words per modality");
    cmd->add_option("--header", header, "corpus header supplying annotation word names");
    cmd->callback([this] { run(); });
  }

  void run() {
    const Model model = load_model(model_file);
    if (is_deep(model.kind) || !is_supervised(model.kind))
      throw UsageError("inspect needs a supdocnade model, got " + to_string(model.kind));
    std::optional<JointVocabulary> vocab;
    if (!header.empty()) {
      vocab = read_corpus_header(header).vocabulary();
      if (vocab->size() != model.vocab.size()) throw DataError("header vocabulary size differs from the model's");
    }
    std::vector<std::uint32_t> classes;
    if (class_index)
      classes.push_back(*class_index);
    else
      for (std::uint32_t c = 0; c < model.n_classes; ++c) classes.push_back(c);
    for (auto c : classes) {
      const auto a = class_word_associations(model.shallow, c, topics, words, model.vocab.n_visual_slots());
      json j;
      j["class"] = c;
      j["topics"] = a.topics;
      j["visual"] = ranking_json(a.visual);
      j["annotation"] = ranking_json(a.annotation);
      if (vocab) {
        std::vector<std::string> names;
        for (auto id : a.annotation.ids) names.push_back(vocab->annotation_word(id));
        j["annotation"]["words"] = names;
      }
      print_json_line(j);
    }
  }
};

struct RepresentCommand {
  CorpusFlags corpus;
  std::string model_file;
  std::string scope = "all";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("represent", "export document representations");
    corpus.add(cmd, "corpus", "documents");
    cmd->add_option("--model-file", model_file, "trained model")->required();
    cmd->add_option("--scope", scope, "words used: visual or all")->check(CLI::IsMember({"visual", "all"}));
    cmd->callback([this] { run(); });
  }

  void run() {
    const Model model = load_model(model_file);
    const Corpus data = corpus.load();
    model.check_compatible(data, false);
    for (std::size_t i = 0; i < data.documents.size(); ++i) {
      const Vector h = document_representation(model, data.documents[i], parse_scope(scope));
      json j;
      j["doc"] = i;
      j["labels"] = data.documents[i].labels;
      j["representation"] = std::vector<double>(h.data(), h.data() + h.size());
      print_json_line(j);
    }
  }
};

// Grid file: JSON object mapping flag names (lambda, anno-weight, hidden,
// layers, dropout, lr, epochs, avg-decay) to lists of values.
struct GridCommand {
  CorpusFlags corpus;
  std::string valid_path;
  std::string valid_header;
  double valid_fraction = 0.0;
  std::string grid_file;
  std::string metric = "accuracy";
  TrainFlags flags;
  std::string out_dir = "runs";

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("grid", "select hyperparameters on a validation split");
    corpus.add(cmd, "corpus", "training corpus");
    cmd->add_option("--valid", valid_path, "validation corpus");
    cmd->add_option("--valid-header", valid_header, "header for the validation corpus");
    cmd->add_option("--valid-fraction", valid_fraction, "hold out this fraction of the training corpus instead");
    cmd->add_option("--grid", grid_file, "grid file")->required();
    cmd->add_option("--metric", metric, "selection metric")
        ->check(CLI::IsMember({"accuracy", "map", "f_measure", "perplexity"}));
    flags.add(cmd);
    cmd->add_option("--out-dir", out_dir, "root directory for run outputs");
    cmd->callback([this] { run(); });
  }

  static void apply(TrainFlags& f, const std::string& key, const json& v) {
    if (key == "lambda") f.lambda = v.get<double>();
    else if (key == "anno-weight") f.anno_weight = v.get<double>();
    else if (key == "hidden") f.hidden = v.get<std::uint32_t>();
    else if (key == "layers") f.layers = v.get<std::uint32_t>();
    else if (key == "dropout") f.dropout = v.get<double>();
    else if (key == "lr") f.lr = v.get<double>();
    else if (key == "epochs") f.epochs = v.get<std::uint32_t>();
    else if (key == "avg-decay") f.avg_decay = v.get<double>();
    else throw UsageError("unknown grid key '" + key + "'");
  }

  void run() {
    if (valid_path.empty() == (valid_fraction <= 0.0))
      throw UsageError("give exactly one of --valid and --valid-fraction");
    if (valid_fraction >= 1.0) throw UsageError("--valid-fraction must be below 1");
    json grid;
    {
      std::ifstream in(grid_file);
      if (!in) throw DataError("cannot open grid file " + grid_file);
      try {
        in >> grid;
      } catch (const json::exception& e) {
        throw DataError(std::string("malformed grid file: ") + e.what());
      }
    }
    if (!grid.is_object() || grid.empty()) throw UsageError("the grid is empty");
    std::vector<std::pair<std::string, std::vector<json>>> axes;
    for (auto& [key, values] : grid.items()) {
      if (!values.is_array() || values.empty()) throw UsageError("grid entry '" + key + "' has no values");
      axes.emplace_back(key, values.get<std::vector<json>>());
    }

    // Expand and validate every point before any training.
    std::vector<json> points{json::object()};
    for (const auto& [key, values] : axes) {
      std::vector<json> next;
      for (const auto& p : points)
        for (const auto& v : values) {
          json q = p;
          q[key] = v;
          next.push_back(std::move(q));
        }
      points = std::move(next);
    }
    std::vector<TrainConfig> configs;
    for (const auto& p : points) {
      TrainFlags f = flags;
      for (auto& [key, v] : p.items()) apply(f, key, v);
      configs.push_back(f.config());
    }

    Corpus train = corpus.load();
    Corpus valid;
    if (!valid_path.empty()) {
      valid = corpus.load(valid_path, valid_header);
    } else {
      std::vector<std::size_t> order(train.documents.size());
      std::iota(order.begin(), order.end(), 0);
      Rng rng = Rng::stream(flags.seed, "validation");
      rng.shuffle(order);
      const auto n_valid = static_cast<std::size_t>(valid_fraction * static_cast<double>(order.size()));
      if (n_valid == 0 || n_valid == order.size()) throw UsageError("--valid-fraction leaves an empty split");
      valid.vocabulary = train.vocabulary;
      valid.n_classes = train.n_classes;
      valid.n_features = train.n_features;
      std::vector<MultimodalDocument> kept;
      std::vector<bool> held(order.size(), false);
      for (std::size_t i = 0; i < n_valid; ++i) held[order[i]] = true;
      for (std::size_t i = 0; i < order.size(); ++i)
        (held[i] ? valid.documents : kept).push_back(train.documents[i]);
      train.documents = std::move(kept);
    }

    json manifest;
    manifest["command"] = "grid";
    manifest["grid"] = grid;
    manifest["base_config"] = json::parse(configs.front().to_json());
    manifest["corpus"] = corpus.to_json();
    manifest["valid"] = valid_path;
    manifest["valid_fraction"] = valid_fraction;
    manifest["metric"] = metric;
    const fs::path dir = make_run_dir(out_dir, manifest);

    const bool lower_is_better = metric == "perplexity";
    std::optional<std::size_t> best;
    double best_value = 0.0;
    std::ofstream results(dir / "grid_results.jsonl");
    for (std::size_t i = 0; i < configs.size(); ++i) {
      const Model model = pretrain_then_finetune(nullptr, train, configs[i]);
      EvalOptions eval_options;
      eval_options.split = "valid";
      eval_options.seed = configs[i].seed;
      const EvalReport report = evaluate(model, valid, eval_options);
      std::optional<double> value;
      for (const auto& r : report.records)
        if (r.metric == metric) value = r.value;
      if (!value) throw UsageError("metric '" + metric + "' is not reported for " + to_string(configs[i].model_kind));
      json line;
      line["point"] = points[i];
      line["config"] = json::parse(configs[i].to_json());
      line[metric] = *value;
      results << line.dump() << '\n';
      std::cerr << line.dump() << '\n';
      const bool better = lower_is_better ? *value < best_value : *value > best_value;
      if (!best || better) {
        best = i;
        best_value = *value;
      }
    }

    json chosen;
    chosen["command"] = "train";
    chosen["config"] = json::parse(configs[*best].to_json());
    chosen["corpus"] = corpus.to_json();
    chosen["seed"] = configs[*best].seed;
    chosen["artifact_version"] = kArtifactVersion;
    chosen["selected_by"] = metric;
    chosen["validation_value"] = best_value;
    std::ofstream(dir / "best_manifest.json") << chosen.dump(2) << '\n';
    std::cout << chosen.dump(2) << '\n';
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DocNADE-family topic models for multimodal bags of words"};
  app.require_subcommand(1);
  TrainCommand train;
  EvalCommand eval;
  AnnotateCommand annotate;
  RetrieveCommand retrieve;
  InspectCommand inspect;
  RepresentCommand represent_cmd;
  GridCommand grid;
  train.add(app);
  eval.add(app);
  annotate.add(app);
  retrieve.add(app);
  inspect.add(app);
  represent_cmd.add(app);
  grid.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
