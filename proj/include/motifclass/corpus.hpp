#pragma once

// Corpus ingestion: documents with typed metadata, category names and motif
// pattern grammars.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "motifclass/core.hpp"

namespace motifclass {

inline constexpr std::string_view kTermType = "Term";

struct Document {
  std::string doc_id;
  std::vector<std::string> terms;
  // type -> values, original order, duplicates dropped
  std::map<std::string, std::vector<std::string>> metadata;

  bool operator==(const Document&) const = default;
};

struct CategorySpec {
  std::string label_id;
  std::string name_term;
};

// Type-level star pattern around one Document node. node_types is a sorted
// multiset of type names; "Term" stands for the document-term link.
class MotifPattern {
 public:
  MotifPattern() = default;
  explicit MotifPattern(std::vector<std::string> types)
      : node_types_(std::move(types)) {
    std::sort(node_types_.begin(), node_types_.end());
    id_.clear();
    for (std::size_t i = 0; i < node_types_.size(); ++i) {
      if (i) id_ += '-';
      id_ += node_types_[i];
    }
  }

  const std::string& id() const { return id_; }
  const std::vector<std::string>& node_types() const { return node_types_; }
  bool is_term() const {
    return node_types_.size() == 1 && node_types_[0] == kTermType;
  }
  bool is_higher_order() const { return node_types_.size() > 1; }

  bool operator==(const MotifPattern& o) const { return id_ == o.id_; }

 private:
  std::vector<std::string> node_types_;
  std::string id_;
};

struct CorpusSchema {
  std::vector<std::string> metadata_types;  // declaration order
  int min_freq = 5;
  std::vector<MotifPattern> candidate_patterns;

  bool declares(std::string_view type) const {
    return std::find(metadata_types.begin(), metadata_types.end(), type) !=
           metadata_types.end();
  }

  // Adds the Term pattern if the caller left it out.
  void ensure_term_pattern() {
    for (const auto& p : candidate_patterns)
      if (p.is_term()) return;
    candidate_patterns.emplace_back(std::vector<std::string>{std::string(kTermType)});
  }
};

inline MotifPattern parse_pattern(std::string_view spec,
                                  const CorpusSchema& schema) {
  auto s = trim(spec);
  if (s.empty()) throw ValidationError("empty motif pattern spec");
  std::vector<std::string> types;
  for (auto& part : split(s, '-')) {
    auto t = std::string(trim(part));
    if (t.empty())
      throw ValidationError("empty node type in pattern '" + std::string(s) + "'");
    if (t != kTermType && !schema.declares(t))
      throw ValidationError("pattern '" + std::string(s) +
                            "' references undeclared metadata type '" + t + "'");
    types.push_back(std::move(t));
  }
  if (types.size() > 1 &&
      std::find(types.begin(), types.end(), kTermType) != types.end())
    throw ValidationError("Term can only be used as a single-node pattern: '" +
                          std::string(s) + "'");
  return MotifPattern(std::move(types));
}

// Canonicalizes and de-duplicates, keeping first-seen order.
inline std::vector<MotifPattern> parse_patterns(
    std::span<const std::string> specs, const CorpusSchema& schema) {
  std::vector<MotifPattern> out;
  std::unordered_set<std::string> seen;
  for (const auto& spec : specs) {
    auto p = parse_pattern(spec, schema);
    if (seen.insert(p.id()).second) out.push_back(std::move(p));
  }
  return out;
}

// One spec per line, '#' starts a comment.
inline std::vector<std::string> read_pattern_specs(std::istream& in) {
  std::vector<std::string> specs;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    auto t = trim(line);
    if (!t.empty()) specs.emplace_back(t);
  }
  return specs;
}

inline std::vector<std::string> read_pattern_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open patterns file: " + path);
  return read_pattern_specs(in);
}

class CorpusStore;
class GoldKey;

// Access token for gold labels. Only the evaluation module and the corpus
// writer can mint one, so training code cannot read labels.
class GoldKey {
 private:
  GoldKey() = default;
  friend struct GoldChannel;
  friend void write_corpus_jsonl(const CorpusStore&, std::ostream&);
};

class CorpusStore {
 public:
  CorpusStore() = default;
  CorpusStore(CorpusSchema schema, std::vector<Document> docs,
              std::vector<std::optional<std::string>> gold = {})
      : schema_(std::move(schema)), docs_(std::move(docs)), gold_(std::move(gold)) {
    schema_.ensure_term_pattern();
    if (gold_.empty()) gold_.resize(docs_.size());
    if (gold_.size() != docs_.size())
      throw ValidationError("gold label count does not match document count");
    for (std::size_t i = 0; i < docs_.size(); ++i) {
      const auto& d = docs_[i];
      if (d.terms.empty())
        throw ValidationError("document '" + d.doc_id + "' has empty text");
      for (const auto& [type, values] : d.metadata)
        if (!schema_.declares(type))
          throw ValidationError("document '" + d.doc_id +
                                "' uses undeclared metadata type '" + type + "'");
      if (!by_id_.emplace(d.doc_id, i).second)
        throw ValidationError("duplicate document id '" + d.doc_id + "'");
      std::unordered_set<std::string_view> uniq(d.terms.begin(), d.terms.end());
      for (auto t : uniq) ++vocab_[std::string(t)];
      total_tokens_ += d.terms.size();
    }
  }

  const CorpusSchema& schema() const { return schema_; }
  std::span<const Document> documents() const { return docs_; }
  const Document& doc(std::size_t i) const { return docs_[i]; }
  std::size_t size() const { return docs_.size(); }

  std::optional<std::size_t> find(std::string_view doc_id) const {
    auto it = by_id_.find(std::string(doc_id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  // term -> number of documents containing it
  const std::map<std::string, std::uint32_t>& vocabulary() const { return vocab_; }

  std::uint32_t doc_freq(std::string_view term) const {
    auto it = vocab_.find(std::string(term));
    return it == vocab_.end() ? 0 : it->second;
  }

  double mean_length() const {
    return docs_.empty() ? 0.0 : double(total_tokens_) / double(docs_.size());
  }

  const std::vector<std::optional<std::string>>& gold_labels(const GoldKey&) const {
    return gold_;
  }

 private:
  CorpusSchema schema_;
  std::vector<Document> docs_;
  std::vector<std::optional<std::string>> gold_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::map<std::string, std::uint32_t> vocab_;
  std::size_t total_tokens_ = 0;
};

namespace detail {

inline Document document_from_json(const nlohmann::json& j, const CorpusSchema& schema,
                                   std::optional<std::string>& gold) {
  if (!j.is_object()) throw ValidationError("expected a JSON object");
  Document d;
  if (!j.contains("id") || !j["id"].is_string())
    throw ValidationError("missing string field 'id'");
  d.doc_id = j["id"].get<std::string>();
  if (!j.contains("text") || !j["text"].is_string())
    throw ValidationError("missing string field 'text'");
  d.terms = split_whitespace(j["text"].get<std::string>());
  if (d.terms.empty()) throw ValidationError("empty text in document '" + d.doc_id + "'");
  if (j.contains("metadata")) {
    const auto& md = j["metadata"];
    if (!md.is_object()) throw ValidationError("'metadata' must be an object");
    for (auto it = md.begin(); it != md.end(); ++it) {
      if (!schema.declares(it.key()))
        throw ValidationError("undeclared metadata type '" + it.key() + "'");
      if (!it.value().is_array())
        throw ValidationError("metadata '" + it.key() + "' must be an array");
      auto& values = d.metadata[it.key()];
      for (const auto& v : it.value()) {
        if (!v.is_string())
          throw ValidationError("metadata '" + it.key() + "' values must be strings");
        auto s = v.get<std::string>();
        if (std::find(values.begin(), values.end(), s) == values.end())
          values.push_back(std::move(s));
      }
    }
  }
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_string()) throw ValidationError("'label' must be a string");
    gold = j["label"].get<std::string>();
  }
  return d;
}

inline std::vector<Document> parse_documents(
    std::istream& in, const CorpusSchema& schema, const std::string& source,
    std::vector<std::optional<std::string>>& golds) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      std::optional<std::string> gold;
      docs.push_back(document_from_json(j, schema, gold));
      golds.push_back(std::move(gold));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": malformed JSON: " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return docs;
}

}  // namespace detail

inline void check_gold_labels(const std::vector<std::optional<std::string>>& golds,
                              std::span<const CategorySpec> categories) {
  if (categories.empty()) return;
  std::unordered_set<std::string> labels;
  for (const auto& c : categories) labels.insert(c.label_id);
  for (std::size_t i = 0; i < golds.size(); ++i)
    if (golds[i] && !labels.count(*golds[i]))
      throw ValidationError("document #" + std::to_string(i) +
                            " has undeclared gold label '" + *golds[i] + "'");
}

inline CorpusStore parse_corpus(std::istream& in, CorpusSchema schema,
                                std::span<const CategorySpec> categories = {},
                                const std::string& source = "<stream>") {
  std::vector<std::optional<std::string>> golds;
  auto docs = detail::parse_documents(in, schema, source, golds);
  check_gold_labels(golds, categories);
  return CorpusStore(std::move(schema), std::move(docs), std::move(golds));
}

inline CorpusStore parse_corpus(const std::string& path, CorpusSchema schema,
                                std::span<const CategorySpec> categories = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open corpus file: " + path);
  return parse_corpus(in, std::move(schema), categories, path);
}

inline void write_corpus_jsonl(const CorpusStore& store, std::ostream& out) {
  const auto& golds = store.gold_labels(GoldKey{});
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& d = store.doc(i);
    nlohmann::json j;
    j["id"] = d.doc_id;
    std::string text;
    for (std::size_t t = 0; t < d.terms.size(); ++t) {
      if (t) text += ' ';
      text += d.terms[t];
    }
    j["text"] = text;
    j["metadata"] = nlohmann::json::object();
    for (const auto& [type, values] : d.metadata) j["metadata"][type] = values;
    if (golds[i]) j["label"] = *golds[i];
    out << j.dump() << '\n';
  }
}

inline std::vector<CategorySpec> parse_categories(const nlohmann::json& j) {
  if (!j.is_array()) throw ValidationError("categories must be a JSON array");
  std::vector<CategorySpec> cats;
  std::unordered_set<std::string> labels, names;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("label") || !e.contains("name") ||
        !e["label"].is_string() || !e["name"].is_string())
      throw ValidationError("each category needs string fields 'label' and 'name'");
    CategorySpec c{e["label"].get<std::string>(), e["name"].get<std::string>()};
    if (c.label_id.empty() || c.name_term.empty())
      throw ValidationError("category label and name must be nonempty");
    if (!labels.insert(c.label_id).second)
      throw ValidationError("duplicate category label '" + c.label_id + "'");
    if (!names.insert(c.name_term).second)
      throw ValidationError("duplicate category name '" + c.name_term + "'");
    cats.push_back(std::move(c));
  }
  if (cats.empty()) throw ValidationError("no categories declared");
  return cats;
}

inline std::vector<CategorySpec> parse_categories_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open categories file: " + path);
  try {
    return parse_categories(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
}

// Names are matched as exact tokens against the vocabulary.
inline void validate_category_names(std::span<const CategorySpec> categories,
                                    const CorpusStore& store) {
  for (const auto& c : categories) {
    auto df = store.doc_freq(c.name_term);
    if (df < std::uint32_t(store.schema().min_freq))
      throw ValidationError("category '" + c.label_id + "': name term '" + c.name_term +
                            "' occurs in " + std::to_string(df) +
                            " documents, below min_freq " +
                            std::to_string(store.schema().min_freq));
  }
}

}  // namespace motifclass
