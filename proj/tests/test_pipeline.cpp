#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "motifclass.hpp"

using namespace motifclass;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("motifclass_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// A small demo bundle with a fast schedule.
PipelineConfig small_config(const fs::path& dir, std::uint64_t seed = 3) {
  synthetic::AcademicOptions o;
  o.docs_per_category = 60;
  o.authors_per_category = 3;
  o.shared_authors = 20;
  const auto path = write_demo(dir, seed, o);
  auto j = nlohmann::json::parse(read_file(path));
  j["embedding"] = {{"dim", 16}, {"epochs", 1}};
  j["selection"] = {{"size", 10}, {"eta", 2.0}};
  j["pseudo"] = {{"retrieved", 10}, {"generated", 10}, {"length", 20}};
  j["classifier"] = {{"epochs", 3}, {"batch_size", 16}, {"maps", 4}, {"widths", {2, 3}}};
  std::ofstream(path) << j.dump(2);
  return PipelineConfig::load(path);
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::vector<nlohmann::json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  return out;
}

int run_cli(const std::string& args, const fs::path& log) {
  const char* cli = std::getenv("MOTIFCLASS_CLI");
  const std::string cmd = std::string(cli) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST_CASE("config loading resolves paths and rejects unknown keys", "[pipeline]") {
  auto dir = scratch("config");
  auto cfg = small_config(dir);
  CHECK(cfg.corpus == dir / "corpus.jsonl");
  CHECK(cfg.workdir == dir / "work");
  CHECK(cfg.classifier.epochs == 3);

  auto j = cfg.to_json();
  j["embeding"] = nlohmann::json::object();
  CHECK_THROWS_AS(PipelineConfig::from_json(j, dir), ValidationError);
  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK_THROWS_AS(PipelineConfig::load(dir / "broken.json"), ValidationError);

  CHECK(parse_ablation("No-Higher-Order") == Ablation::NoHigherOrder);
  CHECK_THROWS_AS(parse_ablation("nonsense"), ValidationError);
  for (auto a : kSweepModes) CHECK(parse_ablation(to_string(a)) == a);
}

TEST_CASE("ablations change the effective module configs", "[pipeline]") {
  PipelineConfig cfg;
  cfg.pseudo.retrieved = 50;
  cfg.pseudo.generated = 40;
  cfg.ablation = Ablation::RetrievalOnly2X;
  CHECK(cfg.pseudo_config().retrieved == 100);
  CHECK(cfg.pseudo_config().generated == 0);
  cfg.ablation = Ablation::GenerationOnlyX;
  CHECK(cfg.pseudo_config().retrieved == 0);
  CHECK(cfg.pseudo_config().generated == 40);
  cfg.ablation = Ablation::NoSpecificity;
  CHECK_FALSE(cfg.embedding_config().learn_specificity);
  CHECK(cfg.embedding_config().initial_kappa == 1.0);
  cfg.ablation = Ablation::NoHigherOrder;
  cfg.metadata_types = {"Author", "Venue", "Year"};
  std::ofstream(scratch("patterns") / "p.txt") << "Author\nVenue-Year\nTerm\n";
  cfg.patterns = fs::temp_directory_path() / "motifclass_test_patterns" / "p.txt";
  CHECK(cfg.pattern_specs() == std::vector<std::string>{"Author", "Term"});
}

TEST_CASE("stages run once and rerun only when inputs change", "[pipeline]") {
  log::ScopedCapture quiet;
  auto dir = scratch("stages");
  auto cfg = small_config(dir);
  {
    Pipeline p(cfg);
    CHECK(p.run(Stage::All) == 6);
    CHECK(fs::exists(p.path(artifact::kReport)));
    CHECK(p.run(Stage::All) == 0);
    CHECK(p.run(Stage::Embed) == 0);
  }
  cfg.classifier.epochs = 2;
  {
    Pipeline p(cfg);
    CHECK(p.run(Stage::All) == 2);  // train and eval
  }
  cfg.selection.size = 8;
  {
    Pipeline p(cfg);
    CHECK(p.run(Stage::All) == 4);
  }
}

TEST_CASE("a stage without its upstream output is a missing artifact", "[pipeline]") {
  log::ScopedCapture quiet;
  auto dir = scratch("missing");
  auto cfg = small_config(dir);
  Pipeline p(cfg);
  CHECK_THROWS_AS(p.run(Stage::Eval), MissingArtifactError);
  CHECK_THROWS_AS(p.run(Stage::Select), MissingArtifactError);
  CHECK(p.run(Stage::Ingest) == 1);
  CHECK(p.run(Stage::Embed) == 1);
  CHECK_THROWS_AS(p.run(Stage::Pseudo), MissingArtifactError);
}

TEST_CASE("retrieval-only-2x writes only retrieved documents", "[pipeline]") {
  log::ScopedCapture quiet;
  auto dir = scratch("retrieval2x");
  auto cfg = small_config(dir);
  cfg.ablation = Ablation::RetrievalOnly2X;
  Pipeline p(cfg);
  p.run(Stage::All);
  std::map<std::string, int> per_label;
  for (const auto& j : read_jsonl(p.path(artifact::kPseudo))) {
    CHECK(j["provenance"] == "retrieved");
    CHECK(j["score"].get<int>() >= 1);
    ++per_label[j["label"].get<std::string>()];
  }
  CHECK_FALSE(per_label.empty());
  for (const auto& [label, n] : per_label) CHECK(n <= 20);
}

TEST_CASE("identical config and seed give byte-identical reports", "[pipeline][determinism]") {
  log::ScopedCapture quiet;
  auto a = small_config(scratch("det_a"));
  auto b = small_config(scratch("det_b"));
  Pipeline pa(a), pb(b);
  pa.run(Stage::All);
  pb.run(Stage::All);
  CHECK(read_file(pa.path(artifact::kReport)) == read_file(pb.path(artifact::kReport)));
  CHECK(read_file(pa.path(artifact::kPseudo)) == read_file(pb.path(artifact::kPseudo)));
}

TEST_CASE("sweep produces one row per variant", "[pipeline][sweep]") {
  log::ScopedCapture quiet;
  auto cfg = small_config(scratch("sweep"));
  auto rows = run_ablation_sweep(cfg);
  REQUIRE(rows.size() == kSweepModes.size());
  std::ostringstream md;
  write_sweep_markdown(rows, cfg.pseudo, md);
  for (const auto& r : rows) {
    INFO(to_string(r.mode) << ": " << r.error);
    CHECK(r.error.empty());
    REQUIRE(r.micro);
    CHECK(*r.micro >= 0.0);
    CHECK(*r.micro <= 1.0);
  }
  CHECK(md.str().find("| no-specificity |") != std::string::npos);
}

TEST_CASE("command-line exit codes", "[pipeline][cli]") {
  if (!std::getenv("MOTIFCLASS_CLI")) SKIP("MOTIFCLASS_CLI not set");
  auto dir = scratch("cli");
  const auto log = dir / "log.txt";
  CHECK(run_cli("synth --out " + (dir / "demo").string() + " --docs-per-category 60", log) == 0);
  CHECK(fs::exists(dir / "demo" / "config.json"));
  CHECK(run_cli("eval --config " + (dir / "demo" / "config.json").string(), log) == 2);
  CHECK(read_file(log).find("classifier.bin") != std::string::npos);
  CHECK(run_cli("bogus", log) == 1);
  std::ofstream(dir / "bad.json") << R"({"selection": {"eta": 0.5}})";
  CHECK(run_cli("ingest --config " + (dir / "bad.json").string(), log) == 1);
  CHECK(run_cli("--help", log) == 0);
}
