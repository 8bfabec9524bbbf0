#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "motifclass/corpus.hpp"

using namespace motifclass;

namespace {

CorpusSchema paper_schema() {
  CorpusSchema s;
  s.metadata_types = {"Author", "Venue", "Year"};
  s.min_freq = 1;
  return s;
}

const char* kDoc1 =
    R"({"id":"d1","text":"cultural shift or linguistic drift","metadata":{"Venue":["EMNLP"],"Year":["2016"],"Author":["W. Hamilton","J. Leskovec","D. Jurafsky"]}})";

}  // namespace

TEST_CASE("parse_corpus reads the Doc1 example", "[corpus]") {
  std::istringstream in(std::string(kDoc1) + "\n");
  auto store = parse_corpus(in, paper_schema());
  REQUIRE(store.size() == 1);
  const auto& d = store.doc(0);
  CHECK(d.doc_id == "d1");
  CHECK(d.terms.size() == 5);
  REQUIRE(d.metadata.at("Author").size() == 3);
  CHECK(d.metadata.at("Author")[0] == "W. Hamilton");
  CHECK(d.metadata.at("Venue") == std::vector<std::string>{"EMNLP"});
  CHECK(store.doc_freq("drift") == 1);
  CHECK(store.mean_length() == Catch::Approx(5.0));
}

TEST_CASE("parse_corpus rejects bad input", "[corpus]") {
  SECTION("duplicate ids") {
    std::istringstream in(std::string(kDoc1) + "\n" + kDoc1 + "\n");
    CHECK_THROWS_AS(parse_corpus(in, paper_schema()), ValidationError);
  }
  SECTION("undeclared metadata type") {
    std::istringstream in(R"({"id":"x","text":"a b","metadata":{"Editor":["E"]}})");
    CHECK_THROWS_WITH(parse_corpus(in, paper_schema()),
                      Catch::Matchers::ContainsSubstring("Editor"));
  }
  SECTION("malformed line reports its line number") {
    std::istringstream in(std::string(kDoc1) + "\n{not json\n");
    CHECK_THROWS_WITH(parse_corpus(in, paper_schema()),
                      Catch::Matchers::ContainsSubstring(":2:"));
  }
  SECTION("empty text") {
    std::istringstream in(R"({"id":"x","text":"   "})");
    CHECK_THROWS_AS(parse_corpus(in, paper_schema()), ValidationError);
  }
  SECTION("gold label must be a declared category") {
    std::istringstream in(R"({"id":"x","text":"a","label":"zzz"})");
    std::vector<CategorySpec> cats{{"db", "database"}};
    CHECK_THROWS_AS(parse_corpus(in, paper_schema(), cats), ValidationError);
  }
}

TEST_CASE("parse_patterns canonicalizes", "[corpus]") {
  auto schema = paper_schema();
  std::vector<std::string> specs{"Venue-Year", "Year-Venue", "Author-Author", "Term"};
  auto ps = parse_patterns(specs, schema);
  REQUIRE(ps.size() == 3);
  CHECK(ps[0].id() == "Venue-Year");
  CHECK(ps[1].node_types() == std::vector<std::string>{"Author", "Author"});
  CHECK(ps[1].id() == "Author-Author");
  CHECK(ps[2].is_term());

  CHECK_THROWS_AS(parse_pattern("Venue-Editor", schema), ValidationError);
  CHECK_THROWS_AS(parse_pattern("  ", schema), ValidationError);
  CHECK_THROWS_AS(parse_pattern("Venue-", schema), ValidationError);
}

TEST_CASE("pattern canonicalization is idempotent and order-insensitive", "[corpus][property]") {
  auto schema = paper_schema();
  std::mt19937 rng(7);
  const std::vector<std::string> types{"Author", "Venue", "Year"};
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> parts(1 + rng() % 4);
    for (auto& p : parts) p = types[rng() % types.size()];
    std::string spec;
    for (std::size_t i = 0; i < parts.size(); ++i) spec += (i ? "-" : "") + parts[i];
    auto p = parse_pattern(spec, schema);
    std::shuffle(parts.begin(), parts.end(), rng);
    std::string shuffled;
    for (std::size_t i = 0; i < parts.size(); ++i) shuffled += (i ? "-" : "") + parts[i];
    CHECK(parse_pattern(shuffled, schema).id() == p.id());
    CHECK(parse_pattern(p.id(), schema).id() == p.id());
  }
}

TEST_CASE("pattern files allow comments", "[corpus]") {
  std::istringstream in("# academic patterns\nVenue\nVenue-Year  # combination\n\nTerm\n");
  auto specs = read_pattern_specs(in);
  CHECK(specs == std::vector<std::string>{"Venue", "Venue-Year", "Term"});
}

TEST_CASE("schema always carries the Term pattern", "[corpus]") {
  CorpusStore store(paper_schema(), {Document{"a", {"x"}, {}}});
  bool has_term = false;
  for (const auto& p : store.schema().candidate_patterns) has_term |= p.is_term();
  CHECK(has_term);
}

TEST_CASE("JSONL round trip preserves documents", "[corpus][property]") {
  std::mt19937 rng(11);
  const std::vector<std::string> words{"graph", "mining", "data_mining", "query", "index"};
  const std::vector<std::string> authors{"A. One", "B. Two", "C. Three", "D. Four"};
  std::ostringstream src;
  for (int i = 0; i < 50; ++i) {
    nlohmann::json j;
    j["id"] = "doc" + std::to_string(i);
    std::string text;
    for (int k = 0; k < 1 + int(rng() % 8); ++k) text += words[rng() % words.size()] + " ";
    j["text"] = text;
    std::vector<std::string> as;
    for (int k = 0; k < int(rng() % 3); ++k) as.push_back(authors[rng() % authors.size()]);
    j["metadata"]["Author"] = as;
    j["metadata"]["Year"] = {std::to_string(2000 + rng() % 5)};
    if (rng() % 2) j["label"] = "c" + std::to_string(rng() % 2);
    src << j.dump() << "\n";
  }
  std::istringstream in1(src.str());
  auto a = parse_corpus(in1, paper_schema());
  std::ostringstream out;
  write_corpus_jsonl(a, out);
  std::istringstream in2(out.str());
  auto b = parse_corpus(in2, paper_schema());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.doc(i) == b.doc(i));
  std::ostringstream again;
  write_corpus_jsonl(b, again);
  CHECK(again.str() == out.str());
}

TEST_CASE("categories parse and validate against the vocabulary", "[corpus]") {
  auto cats = parse_categories(nlohmann::json::parse(
      R"([{"label":"db","name":"database"},{"label":"dm","name":"data_mining"}])"));
  REQUIRE(cats.size() == 2);
  CHECK(cats[1].name_term == "data_mining");

  CHECK_THROWS_AS(parse_categories(nlohmann::json::parse(
                      R"([{"label":"a","name":"x"},{"label":"a","name":"y"}])")),
                  ValidationError);
  CHECK_THROWS_AS(parse_categories(nlohmann::json::parse(
                      R"([{"label":"a","name":"x"},{"label":"b","name":"x"}])")),
                  ValidationError);

  auto schema = paper_schema();
  schema.min_freq = 2;
  CorpusStore store(schema, {Document{"1", {"database", "query"}, {}},
                             Document{"2", {"database"}, {}},
                             Document{"3", {"data_mining"}, {}}});
  CHECK_THROWS_AS(validate_category_names(cats, store), ValidationError);
  std::vector<CategorySpec> ok{{"db", "database"}};
  CHECK_NOTHROW(validate_category_names(ok, store));
  // exact token match, no case folding
  std::vector<CategorySpec> upper{{"db", "Database"}};
  CHECK_THROWS_AS(validate_category_names(upper, store), ValidationError);
}
