#pragma once

// Pseudo-labeled training data: retrieval of real documents by indicative
// instance counts, and generation of token sequences around the category
// name embedding.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "motifclass/core.hpp"
#include "motifclass/corpus.hpp"
#include "motifclass/embedding.hpp"
#include "motifclass/motif_index.hpp"
#include "motifclass/select.hpp"
#include "motifclass/sequence.hpp"
#include "motifclass/vmf.hpp"

namespace motifclass {

struct PseudoConfig {
  int retrieved = 50;
  int generated = 50;
  int length = 0;  // 0: corpus mean length, capped at max_length
  std::optional<double> kappa_gen;  // unset: learned kappa of the name term
  int neighbor_pool = 50;
  int max_length = int(kDefaultMaxSequence);

  void validate() const {
    if (retrieved < 0 || generated < 0) throw ValidationError("pseudo sizes must be >= 0");
    if (retrieved == 0 && generated == 0)
      throw ValidationError("retrieved and generated sizes cannot both be 0");
    if (neighbor_pool < 1) throw ValidationError("neighbor pool must be >= 1");
    if (length < 0) throw ValidationError("generated length must be >= 0");
    if (max_length < 1) throw ValidationError("max length must be >= 1");
    if (kappa_gen && !(*kappa_gen >= 0)) throw ValidationError("kappa_gen must be >= 0");
  }

  std::size_t resolved_length(const CorpusStore& corpus) const {
    if (length > 0) return std::size_t(std::min(length, max_length));
    auto n = std::size_t(std::lround(corpus.mean_length()));
    return std::clamp<std::size_t>(n, 1, std::size_t(max_length));
  }
};

struct PseudoDocument {
  enum class Source { Retrieved, Generated };
  std::string label_id;
  Source source = Source::Retrieved;
  std::string doc_id;        // retrieved only
  std::uint32_t score = 0;   // retrieved only
  std::uint64_t sample = 0;  // generated only
  std::vector<std::string> tokens;

  bool operator==(const PseudoDocument&) const = default;
};

// ---------------------------------------------------------------------------
// Retrieval.

// Number of members of `set` appearing in document d, via the index.
inline std::uint32_t score(const MotifInstanceIndex& index, std::size_t d, const IndicativeSet& set) {
  auto row = index.by_doc(d);
  std::uint32_t s = 0;
  for (const auto& m : set.members)
    if (std::binary_search(row.begin(), row.end(), m.instance)) ++s;
  return s;
}

struct Retrieved {
  std::size_t doc = 0;
  std::uint32_t score = 0;
};

// Per category, documents scoring > 0 for it and 0 for every other category,
// best score first, ties by doc_id; at most `size` each.
inline std::vector<std::vector<Retrieved>> retrieve(const CorpusStore& corpus,
                                                    const MotifInstanceIndex& index,
                                                    std::span<const IndicativeSet> sets,
                                                    std::size_t size) {
  const std::size_t L = sets.size(), N = corpus.size();
  std::vector<std::vector<std::uint32_t>> sc(L, std::vector<std::uint32_t>(N, 0));
  for (std::size_t l = 0; l < L; ++l) {
    for (const auto& m : sets[l].members)
      for (auto d : index.by_instance(m.instance)) ++sc[l][d];
  }
  std::vector<std::vector<Retrieved>> out(L);
  for (std::size_t d = 0; d < N; ++d) {
    std::size_t hits = 0, owner = 0;
    for (std::size_t l = 0; l < L; ++l)
      if (sc[l][d] > 0) {
        ++hits;
        owner = l;
      }
    if (hits == 1) out[owner].push_back({d, sc[owner][d]});
  }
  for (std::size_t l = 0; l < L; ++l) {
    auto& v = out[l];
    std::sort(v.begin(), v.end(), [&](const Retrieved& a, const Retrieved& b) {
      if (a.score != b.score) return a.score > b.score;
      return corpus.doc(a.doc).doc_id < corpus.doc(b.doc).doc_id;
    });
    if (v.size() > size) v.resize(size);
    if (v.size() < size)
      log::info("category '" + sets[l].label_id + "': retrieved " + std::to_string(v.size()) +
                " of " + std::to_string(size) + " documents");
  }
  return out;
}

inline std::vector<PseudoDocument> retrieved_documents(const CorpusStore& corpus,
                                                       const std::vector<Retrieved>& hits,
                                                       const std::string& label,
                                                       std::size_t max_length) {
  std::vector<PseudoDocument> out;
  for (const auto& h : hits) {
    PseudoDocument p;
    p.label_id = label;
    p.source = PseudoDocument::Source::Retrieved;
    p.doc_id = corpus.doc(h.doc).doc_id;
    p.score = h.score;
    p.tokens = build_input_sequence(corpus.doc(h.doc), corpus.schema(), max_length);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Generation.

// The k instances with largest cosine to `e` (unit), best first, ties by index.
inline std::vector<std::uint32_t> neighbor_pool(const EmbeddingModel& model,
                                                std::span<const double> e, std::size_t k) {
  std::vector<std::pair<double, std::uint32_t>> all(model.instance_count());
  for (std::uint32_t m = 0; m < model.instance_count(); ++m)
    all[m] = {dot(model.instance_vector(m), e), m};
  k = std::min(k, all.size());
  auto better = [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  };
  std::partial_sort(all.begin(), all.begin() + std::ptrdiff_t(k), all.end(), better);
  std::vector<std::uint32_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = all[i].second;
  return out;
}

// p(m | e) proportional to exp(e . e_m), restricted to the pool.
inline std::vector<double> pool_softmax(const EmbeddingModel& model, std::span<const double> e,
                                        std::span<const std::uint32_t> pool) {
  std::vector<double> p(pool.size());
  double mx = -1e300;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    p[i] = dot(model.instance_vector(pool[i]), e);
    mx = std::max(mx, p[i]);
  }
  double z = 0;
  for (auto& x : p) z += (x = std::exp(x - mx));
  for (auto& x : p) x /= z;
  return p;
}

// Generated pseudo documents for one category. Sample i uses its own
// generator derived from (seed, label, i).
inline std::vector<PseudoDocument> generate(const EmbeddingModel& model, const CategorySpec& category,
                                            std::size_t count, std::size_t length,
                                            std::size_t pool_size, std::optional<double> kappa_gen,
                                            std::uint64_t seed) {
  const auto ml = detail::name_instance(model, category);
  const auto mu = model.instance_vector(ml);
  const double kappa = kappa_gen ? *kappa_gen : model.kappa(ml);
  std::vector<PseudoDocument> out;
  std::vector<double> ed(model.dim());
  for (std::size_t i = 0; i < count; ++i) {
    std::mt19937_64 rng(sub_seed(seed, fnv1a(category.label_id), i));
    sample_vmf(mu, kappa, rng, std::span<double>(ed));
    auto pool = neighbor_pool(model, ed, pool_size);
    auto p = pool_softmax(model, ed, pool);
    std::discrete_distribution<std::size_t> draw(p.begin(), p.end());
    PseudoDocument doc;
    doc.label_id = category.label_id;
    doc.source = PseudoDocument::Source::Generated;
    doc.sample = i;
    for (std::size_t t = 0; t < length; ++t) doc.tokens.push_back(model.instance_id(pool[draw(rng)]));
    out.push_back(std::move(doc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Assembly and I/O.

struct PseudoLabeledSet {
  std::vector<std::string> labels;  // category order
  std::vector<PseudoDocument> docs;

  std::map<std::string, std::pair<std::size_t, std::size_t>> counts() const {
    std::map<std::string, std::pair<std::size_t, std::size_t>> c;
    for (const auto& l : labels) c[l] = {0, 0};
    for (const auto& d : docs) {
      auto& e = c[d.label_id];
      (d.source == PseudoDocument::Source::Retrieved ? e.first : e.second)++;
    }
    return c;
  }
};

// Concatenates retrieved and generated documents per category. Every
// category must end up with at least one document.
inline PseudoLabeledSet assemble_training_set(std::span<const CategorySpec> categories,
                                              std::span<const std::vector<PseudoDocument>> retrieved,
                                              std::span<const std::vector<PseudoDocument>> generated) {
  PseudoLabeledSet out;
  for (std::size_t l = 0; l < categories.size(); ++l) {
    out.labels.push_back(categories[l].label_id);
    std::size_t n = 0;
    if (l < retrieved.size()) {
      out.docs.insert(out.docs.end(), retrieved[l].begin(), retrieved[l].end());
      n += retrieved[l].size();
    }
    if (l < generated.size()) {
      out.docs.insert(out.docs.end(), generated[l].begin(), generated[l].end());
      n += generated[l].size();
    }
    if (n == 0)
      throw RuntimeFailure("category '" + categories[l].label_id +
                           "' has no pseudo-labeled documents; the classifier cannot learn it");
  }
  for (const auto& [label, c] : out.counts())
    log::info("pseudo set '" + label + "': " + std::to_string(c.first) + " retrieved + " +
              std::to_string(c.second) + " generated");
  return out;
}

inline nlohmann::json to_json(const PseudoDocument& d) {
  nlohmann::json j;
  j["label"] = d.label_id;
  if (d.source == PseudoDocument::Source::Retrieved) {
    j["provenance"] = "retrieved";
    j["doc_id"] = d.doc_id;
    j["score"] = d.score;
  } else {
    j["provenance"] = "generated";
    j["sample"] = d.sample;
  }
  j["tokens"] = d.tokens;
  return j;
}

inline void write_pseudo_jsonl(const PseudoLabeledSet& set, std::ostream& out) {
  for (const auto& d : set.docs) out << to_json(d).dump() << '\n';
}

// Labels are taken from `categories` so that their order is preserved.
inline PseudoLabeledSet read_pseudo_jsonl(std::istream& in,
                                          std::span<const CategorySpec> categories) {
  PseudoLabeledSet set;
  for (const auto& c : categories) set.labels.push_back(c.label_id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      PseudoDocument d;
      d.label_id = j.at("label").get<std::string>();
      if (std::find(set.labels.begin(), set.labels.end(), d.label_id) == set.labels.end())
        throw ValidationError("undeclared label " + d.label_id);
      const auto prov = j.at("provenance").get<std::string>();
      if (prov == "retrieved") {
        d.source = PseudoDocument::Source::Retrieved;
        d.doc_id = j.at("doc_id").get<std::string>();
        d.score = j.at("score").get<std::uint32_t>();
      } else if (prov == "generated") {
        d.source = PseudoDocument::Source::Generated;
        d.sample = j.at("sample").get<std::uint64_t>();
      } else {
        throw ValidationError("unknown provenance " + prov);
      }
      d.tokens = j.at("tokens").get<std::vector<std::string>>();
      set.docs.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("pseudo file:" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError("pseudo file:" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return set;
}

}  // namespace motifclass
