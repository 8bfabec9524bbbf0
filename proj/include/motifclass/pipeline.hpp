#pragma once

// Stage orchestration over a single JSON config. Every stage reads and writes
// fixed file names under the work directory and records a stamp of the
// configuration it ran with; an unchanged stage is skipped.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "motifclass/classifier.hpp"
#include "motifclass/core.hpp"
#include "motifclass/corpus.hpp"
#include "motifclass/embedding.hpp"
#include "motifclass/metrics.hpp"
#include "motifclass/motif_index.hpp"
#include "motifclass/pseudo.hpp"
#include "motifclass/select.hpp"

namespace motifclass {

namespace fs = std::filesystem;

enum class Ablation {
  Full,
  NoHigherOrder,
  NoSpecificity,
  RetrievalOnlyX,
  RetrievalOnly2X,
  GenerationOnlyX,
  GenerationOnly2X,
};

inline constexpr std::array<Ablation, 7> kSweepModes{
    Ablation::Full,           Ablation::NoHigherOrder,   Ablation::NoSpecificity,
    Ablation::RetrievalOnlyX, Ablation::RetrievalOnly2X, Ablation::GenerationOnlyX,
    Ablation::GenerationOnly2X};

inline std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoHigherOrder: return "no-higher-order";
    case Ablation::NoSpecificity: return "no-specificity";
    case Ablation::RetrievalOnlyX: return "retrieval-only-x";
    case Ablation::RetrievalOnly2X: return "retrieval-only-2x";
    case Ablation::GenerationOnlyX: return "generation-only-x";
    case Ablation::GenerationOnly2X: return "generation-only-2x";
  }
  return "full";
}

inline Ablation parse_ablation(std::string s) {
  for (auto& ch : s) ch = char(std::tolower(static_cast<unsigned char>(ch)));
  for (auto a : kSweepModes)
    if (to_string(a) == s) return a;
  throw ValidationError("unknown ablation mode '" + s +
                        "' (expected full, no-higher-order, no-specificity, retrieval-only-x, "
                        "retrieval-only-2x, generation-only-x or generation-only-2x)");
}

enum class Stage { Ingest, Embed, Select, Pseudo, Train, Eval, All };

inline constexpr std::array<Stage, 6> kStages{Stage::Ingest, Stage::Embed, Stage::Select,
                                              Stage::Pseudo, Stage::Train, Stage::Eval};

inline std::string to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Embed: return "embed";
    case Stage::Select: return "select";
    case Stage::Pseudo: return "pseudo";
    case Stage::Train: return "train";
    case Stage::Eval: return "eval";
    case Stage::All: return "all";
  }
  return "all";
}

inline Stage parse_stage(const std::string& s) {
  for (auto st : {Stage::Ingest, Stage::Embed, Stage::Select, Stage::Pseudo, Stage::Train,
                  Stage::Eval, Stage::All})
    if (to_string(st) == s) return st;
  throw ValidationError("unknown stage '" + s + "'");
}

// ---------------------------------------------------------------------------
// Configuration.

struct PipelineConfig {
  fs::path corpus = "corpus.jsonl";
  fs::path categories = "categories.json";
  fs::path patterns = "patterns.txt";
  fs::path workdir = "work";
  std::vector<std::string> metadata_types;
  int min_freq = 5;
  int max_combos_per_doc = int(kDefaultMaxCombosPerDoc);
  TrainConfig embedding;
  SelectionConfig selection;
  PseudoConfig pseudo;
  ClassifierConfig classifier;
  Ablation ablation = Ablation::Full;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    if (min_freq < 1) throw ValidationError("min_freq must be >= 1");
    if (max_combos_per_doc < 1) throw ValidationError("max_combos_per_doc must be >= 1");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    embedding_config().validate();
    selection_config().validate();
    pseudo_config().validate();
    classifier_config().validate();
  }

  // Module configs with the ablation and the global seed applied.
  TrainConfig embedding_config() const {
    auto c = embedding;
    c.seed = sub_seed(seed, fnv1a("embed"));
    c.workers = workers;
    if (ablation == Ablation::NoSpecificity) {
      c.learn_specificity = false;
      c.initial_kappa = 1.0;
    }
    return c;
  }

  SelectionConfig selection_config() const {
    auto c = selection;
    if (ablation == Ablation::NoSpecificity) c.specificity_filter = false;
    return c;
  }

  PseudoConfig pseudo_config() const {
    auto c = pseudo;
    c.max_length = classifier.max_length;
    switch (ablation) {
      case Ablation::RetrievalOnlyX: c.generated = 0; break;
      case Ablation::RetrievalOnly2X:
        c.retrieved = 2 * pseudo.retrieved;
        c.generated = 0;
        break;
      case Ablation::GenerationOnlyX: c.retrieved = 0; break;
      case Ablation::GenerationOnly2X:
        c.retrieved = 0;
        c.generated = 2 * pseudo.generated;
        break;
      default: break;
    }
    return c;
  }

  ClassifierConfig classifier_config() const {
    auto c = classifier;
    c.seed = sub_seed(seed, fnv1a("classifier"));
    c.workers = workers;
    return c;
  }

  std::uint64_t generation_seed() const { return sub_seed(seed, fnv1a("generate")); }

  CorpusSchema schema() const {
    CorpusSchema s;
    s.metadata_types = metadata_types;
    s.min_freq = min_freq;
    return s;
  }

  // Pattern specs from the patterns file; no-higher-order keeps single-node ones.
  std::vector<std::string> pattern_specs() const {
    auto specs = read_pattern_specs(patterns.string());
    if (ablation != Ablation::NoHigherOrder) return specs;
    const auto s = schema();
    std::vector<std::string> kept;
    for (const auto& spec : specs)
      if (!parse_pattern(spec, s).is_higher_order()) kept.push_back(spec);
    return kept;
  }

  static PipelineConfig from_json(const nlohmann::json& j, const fs::path& base_dir) {
    try {
      return parse(j, base_dir);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("invalid config: ") + e.what());
    }
  }

  static PipelineConfig load(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config file: " + file.string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(file.string() + ": malformed JSON: " + e.what());
    }
    return from_json(j, file.parent_path());
  }

  nlohmann::json to_json() const {
    using nlohmann::json;
    json j;
    j["corpus"] = corpus.string();
    j["categories"] = categories.string();
    j["patterns"] = patterns.string();
    j["workdir"] = workdir.string();
    j["metadata_types"] = metadata_types;
    j["min_freq"] = min_freq;
    j["max_combos_per_doc"] = max_combos_per_doc;
    j["seed"] = seed;
    j["workers"] = workers;
    j["ablation"] = to_string(ablation);
    j["embedding"] = embedding_json(embedding);
    j["selection"] = {{"size", selection.size}, {"eta", selection.eta}};
    j["pseudo"] = pseudo_json(pseudo);
    j["classifier"] = classifier_json(classifier);
    return j;
  }

  static nlohmann::json embedding_json(const TrainConfig& c) {
    return {{"dim", c.dim},
            {"window", c.window},
            {"negatives", c.negatives},
            {"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"deterministic", c.deterministic},
            {"learn_specificity", c.learn_specificity},
            {"initial_kappa", c.initial_kappa}};
  }

  static nlohmann::json pseudo_json(const PseudoConfig& c) {
    return {{"retrieved", c.retrieved},
            {"generated", c.generated},
            {"length", c.length},
            {"kappa_gen", c.kappa_gen ? nlohmann::json(*c.kappa_gen) : nlohmann::json(nullptr)},
            {"neighbor_pool", c.neighbor_pool}};
  }

  static nlohmann::json classifier_json(const ClassifierConfig& c) {
    return {{"widths", c.widths},
            {"maps", c.maps},
            {"max_length", c.max_length},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"learning_rate", c.learning_rate},
            {"train_embeddings", c.train_embeddings}};
  }

 private:
  static fs::path resolve(const fs::path& p, const fs::path& base) {
    return p.is_absolute() || base.empty() ? p : base / p;
  }

  static void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (auto k : allowed) ok = ok || it.key() == k;
      if (!ok) throw ValidationError("unknown key '" + it.key() + "' in " + where);
    }
  }

  static PipelineConfig parse(const nlohmann::json& j, const fs::path& base) {
    check_keys(j,
               {"corpus", "categories", "patterns", "workdir", "metadata_types", "min_freq",
                "max_combos_per_doc", "seed", "workers", "ablation", "embedding", "selection",
                "pseudo", "classifier"},
               "config");
    PipelineConfig c;
    for (auto key : {"corpus", "categories", "patterns", "metadata_types"})
      if (!j.contains(key)) throw ValidationError(std::string("config is missing '") + key + "'");
    c.corpus = resolve(j["corpus"].get<std::string>(), base);
    c.categories = resolve(j["categories"].get<std::string>(), base);
    c.patterns = resolve(j["patterns"].get<std::string>(), base);
    c.workdir = resolve(j.value("workdir", std::string("work")), base);
    c.metadata_types = j["metadata_types"].get<std::vector<std::string>>();
    c.min_freq = j.value("min_freq", c.min_freq);
    c.max_combos_per_doc = j.value("max_combos_per_doc", c.max_combos_per_doc);
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    if (j.contains("ablation")) c.ablation = parse_ablation(j["ablation"].get<std::string>());

    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      check_keys(e, {"dim", "window", "negatives", "epochs", "learning_rate", "deterministic"},
                 "embedding");
      auto& t = c.embedding;
      t.dim = e.value("dim", t.dim);
      t.window = e.value("window", t.window);
      t.negatives = e.value("negatives", t.negatives);
      t.epochs = e.value("epochs", t.epochs);
      t.learning_rate = e.value("learning_rate", t.learning_rate);
      t.deterministic = e.value("deterministic", t.deterministic);
    }
    if (j.contains("selection")) {
      const auto& e = j["selection"];
      check_keys(e, {"size", "eta"}, "selection");
      c.selection.size = e.value("size", c.selection.size);
      c.selection.eta = e.value("eta", c.selection.eta);
    }
    if (j.contains("pseudo")) {
      const auto& e = j["pseudo"];
      check_keys(e, {"retrieved", "generated", "length", "kappa_gen", "neighbor_pool"}, "pseudo");
      auto& p = c.pseudo;
      p.retrieved = e.value("retrieved", p.retrieved);
      p.generated = e.value("generated", p.generated);
      p.length = e.value("length", p.length);
      p.neighbor_pool = e.value("neighbor_pool", p.neighbor_pool);
      if (e.contains("kappa_gen") && !e["kappa_gen"].is_null())
        p.kappa_gen = e["kappa_gen"].get<double>();
    }
    if (j.contains("classifier")) {
      const auto& e = j["classifier"];
      check_keys(e,
                 {"widths", "maps", "max_length", "batch_size", "epochs", "learning_rate",
                  "train_embeddings"},
                 "classifier");
      auto& k = c.classifier;
      k.widths = e.value("widths", k.widths);
      k.maps = e.value("maps", k.maps);
      k.max_length = e.value("max_length", k.max_length);
      k.batch_size = e.value("batch_size", k.batch_size);
      k.epochs = e.value("epochs", k.epochs);
      k.learning_rate = e.value("learning_rate", k.learning_rate);
      k.train_embeddings = e.value("train_embeddings", k.train_embeddings);
    }
    return c;
  }
};

// ---------------------------------------------------------------------------
// Pipeline.

namespace artifact {
inline constexpr const char* kStamps = "stamps.json";
inline constexpr const char* kIndex = "index.tsv";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kEmbeddings = "embeddings.tsv";
inline constexpr const char* kSelections = "selections.tsv";
inline constexpr const char* kBuckets = "buckets.md";
inline constexpr const char* kPseudo = "pseudo.jsonl";
inline constexpr const char* kClassifier = "classifier.bin";
inline constexpr const char* kPredictions = "predictions.tsv";
inline constexpr const char* kReport = "report.json";
inline constexpr const char* kReportMd = "report.md";
inline constexpr const char* kPseudoAccuracy = "pseudo_accuracy.csv";
}  // namespace artifact

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class Pipeline {
 public:
  explicit Pipeline(PipelineConfig config) : cfg_(std::move(config)) { cfg_.validate(); }

  const PipelineConfig& config() const { return cfg_; }
  fs::path path(const char* name) const { return cfg_.workdir / name; }

  // Runs one stage, or every stage in order for Stage::All. Returns the
  // number of stages that did work (skipped stages do not count).
  int run(Stage stage) {
    fs::create_directories(cfg_.workdir);
    if (stage != Stage::All) return run_one(stage) ? 1 : 0;
    int n = 0;
    for (auto s : kStages) n += run_one(s) ? 1 : 0;
    return n;
  }

  const CorpusStore& corpus() {
    if (!corpus_) {
      categories_ = parse_categories_file(cfg_.categories.string());
      auto schema = cfg_.schema();
      schema.candidate_patterns = parse_patterns(cfg_.pattern_specs(), schema);
      corpus_ = parse_corpus(cfg_.corpus.string(), schema, categories_);
      validate_category_names(categories_, *corpus_);
    }
    return *corpus_;
  }

  const std::vector<CategorySpec>& categories() {
    corpus();
    return categories_;
  }

  const MotifInstanceIndex& index() {
    if (!index_) {
      const auto& c = corpus();
      index_ = enumerate_instances(c, c.schema().candidate_patterns, c.schema().min_freq,
                                   std::size_t(cfg_.max_combos_per_doc));
    }
    return *index_;
  }

 private:
  using json = nlohmann::json;

  json load_stamps() const {
    auto p = path(artifact::kStamps);
    if (!fs::exists(p)) return json::object();
    try {
      return json::parse(read_file(p));
    } catch (const json::exception&) {
      log::warn("ignoring unreadable " + p.string());
      return json::object();
    }
  }

  void save_stamp(Stage s, const std::string& stamp) const {
    auto j = load_stamps();
    j[to_string(s)] = stamp;
    std::ofstream out(path(artifact::kStamps));
    out << j.dump(2) << '\n';
  }

  static std::vector<const char*> outputs(Stage s) {
    switch (s) {
      case Stage::Ingest: return {artifact::kIndex};
      case Stage::Embed: return {artifact::kModel, artifact::kEmbeddings};
      case Stage::Select: return {artifact::kSelections, artifact::kBuckets};
      case Stage::Pseudo: return {artifact::kPseudo};
      case Stage::Train: return {artifact::kClassifier};
      case Stage::Eval:
        return {artifact::kPredictions, artifact::kReport, artifact::kReportMd,
                artifact::kPseudoAccuracy};
      case Stage::All: break;
    }
    return {};
  }

  static std::optional<Stage> upstream(Stage s) {
    switch (s) {
      case Stage::Embed: return Stage::Ingest;
      case Stage::Select: return Stage::Embed;
      case Stage::Pseudo: return Stage::Select;
      case Stage::Train: return Stage::Pseudo;
      case Stage::Eval: return Stage::Train;
      default: return std::nullopt;
    }
  }

  // Hash of the inputs a stage depends on; upstream stages contribute their
  // recorded stamp.
  std::string stamp(Stage s, const json& stamps) const {
    json j;
    j["stage"] = to_string(s);
    if (auto up = upstream(s)) {
      const auto key = to_string(*up);
      if (!stamps.contains(key))
        throw MissingArtifactError("stage '" + to_string(s) + "' needs the outputs of '" + key +
                                   "'; run `motifclass " + key + "` first");
      j["upstream"] = stamps[key];
    }
    switch (s) {
      case Stage::Ingest:
        j["corpus"] = hex64(fnv1a(read_file(cfg_.corpus)));
        j["categories"] = hex64(fnv1a(read_file(cfg_.categories)));
        j["patterns"] = cfg_.pattern_specs();
        j["metadata_types"] = cfg_.metadata_types;
        j["min_freq"] = cfg_.min_freq;
        j["max_combos_per_doc"] = cfg_.max_combos_per_doc;
        break;
      case Stage::Embed: {
        j["config"] = PipelineConfig::embedding_json(cfg_.embedding_config());
        j["seed"] = cfg_.embedding_config().seed;
        if (!cfg_.embedding.deterministic) j["workers"] = cfg_.workers;
        break;
      }
      case Stage::Select: {
        auto sc = cfg_.selection_config();
        j["config"] = {{"size", sc.size}, {"eta", sc.eta}, {"filter", sc.specificity_filter}};
        break;
      }
      case Stage::Pseudo:
        j["config"] = PipelineConfig::pseudo_json(cfg_.pseudo_config());
        j["max_length"] = cfg_.classifier.max_length;
        j["seed"] = cfg_.generation_seed();
        break;
      case Stage::Train:
        j["config"] = PipelineConfig::classifier_json(cfg_.classifier_config());
        j["seed"] = cfg_.classifier_config().seed;
        break;
      case Stage::Eval:
        j["ablation"] = to_string(cfg_.ablation);
        j["retrieved"] = cfg_.pseudo_config().retrieved;
        break;
      case Stage::All: break;
    }
    return hex64(fnv1a(j.dump()));
  }

  void require(const char* name, Stage producer) const {
    if (!fs::exists(path(name)))
      throw MissingArtifactError("missing " + path(name).string() + "; run `motifclass " +
                                 to_string(producer) + "` first");
  }

  bool run_one(Stage s) {
    auto stamps = load_stamps();
    if (auto up = upstream(s))
      for (auto name : outputs(*up)) require(name, *up);
    const auto st = stamp(s, stamps);
    bool fresh = stamps.contains(to_string(s)) && stamps[to_string(s)] == st;
    for (auto name : outputs(s)) fresh = fresh && fs::exists(path(name));
    if (fresh) {
      log::info("stage " + to_string(s) + ": up to date");
      return false;
    }
    log::info("stage " + to_string(s) + ": running");
    switch (s) {
      case Stage::Ingest: ingest(); break;
      case Stage::Embed: embed(); break;
      case Stage::Select: select(); break;
      case Stage::Pseudo: pseudo(); break;
      case Stage::Train: train_stage(); break;
      case Stage::Eval: eval(); break;
      case Stage::All: break;
    }
    save_stamp(s, st);
    return true;
  }

  std::ofstream create(const char* name) const {
    std::ofstream out(path(name), std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write " + path(name).string());
    return out;
  }

  std::ifstream open(const char* name, Stage producer) const {
    require(name, producer);
    return std::ifstream(path(name), std::ios::binary);
  }

  EmbeddingModel load_model() const {
    auto in = open(artifact::kModel, Stage::Embed);
    return EmbeddingModel::read_binary(in);
  }

  std::vector<IndicativeSet> load_selections() {
    auto in = open(artifact::kSelections, Stage::Select);
    auto sets = read_selections_tsv(in, index());
    // category order, and every category present
    std::vector<IndicativeSet> ordered;
    for (const auto& c : categories()) {
      auto it = std::find_if(sets.begin(), sets.end(),
                             [&](const IndicativeSet& s) { return s.label_id == c.label_id; });
      if (it == sets.end())
        throw ValidationError("selections.tsv has no entry for category '" + c.label_id + "'");
      ordered.push_back(*it);
    }
    return ordered;
  }

  void ingest() {
    const auto& idx = index();
    for (const auto& [p, n] : instances_per_pattern(idx))
      log::info("pattern " + p + ": " + std::to_string(n) + " instances");
    auto out = create(artifact::kIndex);
    idx.write_tsv(out);
  }

  void embed() {
    TrainStats stats;
    auto model = train_joint(index(), corpus(), cfg_.embedding_config(), &stats);
    log::info("embedding: " + std::to_string(stats.steps) + " steps");
    {
      auto out = create(artifact::kModel);
      model.write_binary(out);
    }
    auto out = create(artifact::kEmbeddings);
    model.write_tsv(out);
  }

  void select() {
    const auto model = load_model();
    const auto sc = cfg_.selection_config();
    std::vector<IndicativeSet> sets;
    std::vector<BucketReport> buckets;
    for (const auto& c : categories()) {
      sets.push_back(select_indicative(model, index(), c, sc));
      buckets.push_back(specificity_buckets(model, index(), c, sc.eta));
    }
    {
      auto out = create(artifact::kSelections);
      write_selections_tsv(sets, out);
    }
    auto out = create(artifact::kBuckets);
    write_buckets_markdown(buckets, out);
  }

  void pseudo() {
    const auto model = load_model();
    const auto sets = load_selections();
    const auto pc = cfg_.pseudo_config();
    const auto& cats = categories();
    std::vector<std::vector<PseudoDocument>> retrieved(cats.size()), generated(cats.size());
    if (pc.retrieved > 0) {
      auto hits = retrieve(corpus(), index(), sets, std::size_t(pc.retrieved));
      for (std::size_t l = 0; l < cats.size(); ++l)
        retrieved[l] = retrieved_documents(corpus(), hits[l], cats[l].label_id,
                                           std::size_t(pc.max_length));
    }
    if (pc.generated > 0) {
      const auto length = pc.resolved_length(corpus());
      for (std::size_t l = 0; l < cats.size(); ++l)
        generated[l] = generate(model, cats[l], std::size_t(pc.generated), length,
                                std::size_t(pc.neighbor_pool), pc.kappa_gen,
                                cfg_.generation_seed());
    }
    auto set = assemble_training_set(cats, retrieved, generated);
    auto out = create(artifact::kPseudo);
    write_pseudo_jsonl(set, out);
  }

  void train_stage() {
    const auto model = load_model();
    auto in = open(artifact::kPseudo, Stage::Pseudo);
    const auto set = read_pseudo_jsonl(in, categories());
    TrainHistory hist;
    auto net = train_classifier(set, model, cfg_.classifier_config(), &hist);
    if (!hist.epoch_loss.empty()) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "classifier: loss %.4f -> %.4f over %zu epochs",
                    hist.epoch_loss.front(), hist.epoch_loss.back(), hist.epoch_loss.size());
      log::info(buf);
    }
    auto out = create(artifact::kClassifier);
    net.write_binary(out);
  }

  void eval() {
    KimCnn<float> net = [&] {
      auto in = open(artifact::kClassifier, Stage::Train);
      return KimCnn<float>::read_binary(in);
    }();
    const auto sets = load_selections();
    const auto& c = corpus();
    const auto preds = predict_all(net, c);
    {
      auto out = create(artifact::kPredictions);
      write_predictions_tsv(net, preds, out);
    }

    const auto& golds = GoldChannel::open(c);
    std::vector<std::string> labels;
    for (const auto& cat : categories()) labels.push_back(cat.label_id);
    if (net.labels() != labels)
      throw ValidationError("classifier labels do not match the categories file");
    std::map<std::string, std::size_t> row;
    for (std::size_t l = 0; l < labels.size(); ++l) row[labels[l]] = l;
    std::vector<std::size_t> p, g;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (!golds[i]) continue;
      p.push_back(preds[i].label);
      g.push_back(row.at(*golds[i]));
    }
    if (p.empty()) throw RuntimeFailure("no document carries a gold label; nothing to evaluate");

    EvaluationReport report;
    report.ablation = to_string(cfg_.ablation);
    report.labels = labels;
    report.f1 = f1_report(p, g, labels);
    const auto& cuts = default_cutoffs();
    const auto deepest = *std::max_element(cuts.begin(), cuts.end());
    auto hits = retrieve(c, index(), sets, deepest);
    std::vector<std::vector<std::size_t>> ranked(hits.size());
    for (std::size_t l = 0; l < hits.size(); ++l)
      for (const auto& h : hits[l]) ranked[l].push_back(h.doc);
    const auto size = cfg_.pseudo_config().retrieved > 0 ? cfg_.pseudo_config().retrieved
                                                         : cfg_.pseudo.retrieved;
    report.pseudo = pseudo_accuracy(ranked, labels, golds, std::size_t(size), cuts);
    report.proportions = pattern_proportions(sets);
    {
      auto out = create(artifact::kReport);
      out << to_json(report).dump(2) << '\n';
    }
    {
      auto out = create(artifact::kReportMd);
      write_report_markdown(report, out);
    }
    auto out = create(artifact::kPseudoAccuracy);
    write_pseudo_accuracy_csv(report.pseudo, out);
    char buf[96];
    std::snprintf(buf, sizeof buf, "eval: micro-F1 %.4f, macro-F1 %.4f over %zu documents",
                  report.f1.micro, report.f1.macro, report.f1.n);
    log::info(buf);
  }

  PipelineConfig cfg_;
  std::optional<CorpusStore> corpus_;
  std::vector<CategorySpec> categories_;
  std::optional<MotifInstanceIndex> index_;
};

// ---------------------------------------------------------------------------
// Ablation sweep.

struct SweepRow {
  Ablation mode = Ablation::Full;
  std::optional<double> micro, macro;
  std::string error;
};

inline std::string describe(Ablation a, const PseudoConfig& base) {
  const auto r = std::to_string(base.retrieved), g = std::to_string(base.generated);
  switch (a) {
    case Ablation::Full: return r + " retrieved + " + g + " generated";
    case Ablation::NoHigherOrder: return "single-node patterns only";
    case Ablation::NoSpecificity: return "kappa fixed at 1, no filter";
    case Ablation::RetrievalOnlyX: return r + " retrieved + 0 generated";
    case Ablation::RetrievalOnly2X: return std::to_string(2 * base.retrieved) + " retrieved + 0 generated";
    case Ablation::GenerationOnlyX: return "0 retrieved + " + g + " generated";
    case Ablation::GenerationOnly2X: return "0 retrieved + " + std::to_string(2 * base.generated) + " generated";
  }
  return "";
}

// Each variant runs in workdir/sweep/<mode> with the shared seed. A failing
// variant gets a marked row and the sweep continues.
inline std::vector<SweepRow> run_ablation_sweep(const PipelineConfig& base) {
  std::vector<SweepRow> rows;
  for (auto mode : kSweepModes) {
    SweepRow row;
    row.mode = mode;
    auto cfg = base;
    cfg.ablation = mode;
    cfg.workdir = base.workdir / "sweep" / to_string(mode);
    log::info("sweep: " + to_string(mode));
    try {
      Pipeline p(cfg);
      p.run(Stage::All);
      auto j = nlohmann::json::parse(read_file(p.path(artifact::kReport)));
      row.micro = j["micro_f1"].get<double>();
      row.macro = j["macro_f1"].get<double>();
    } catch (const std::exception& e) {
      row.error = e.what();
      log::warn("sweep variant " + to_string(mode) + " failed: " + row.error);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_sweep_markdown(std::span<const SweepRow> rows, const PseudoConfig& base,
                                 std::ostream& out) {
  out << "| Variant | Pseudo data | Micro-F1 | Macro-F1 |\n|---|---|---|---|\n";
  for (const auto& r : rows) {
    out << "| " << to_string(r.mode) << " | " << describe(r.mode, base) << " | ";
    if (r.micro)
      out << detail::fmt(*r.micro) << " | " << detail::fmt(*r.macro) << " |\n";
    else
      out << "FAILED | " << r.error << " |\n";
  }
}

}  // namespace motifclass
