#pragma once

// Deterministic synthetic corpora with planted structure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "motifclass/corpus.hpp"

namespace motifclass::synthetic {

namespace detail {

// Zipf-like rank sampler over n items.
inline std::discrete_distribution<int> zipf(int n, double s = 1.0) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 1.0 / std::pow(double(i + 1), s);
  return std::discrete_distribution<int>(w.begin(), w.end());
}

}  // namespace detail

struct LabeledCorpus {
  CorpusSchema schema;
  std::vector<Document> docs;
  std::vector<std::optional<std::string>> labels;
  std::vector<CategorySpec> categories;
  std::vector<std::string> pattern_specs;

  CorpusStore store() const {
    auto s = schema;
    s.candidate_patterns = parse_patterns(pattern_specs, s);
    s.ensure_term_pattern();
    return CorpusStore(s, docs, labels);
  }
};

// Two disjoint groups: venue VA with terms a*, venue VB with terms b*.
inline LabeledCorpus two_clusters(std::uint64_t seed, int docs_per_cluster = 100,
                                  int terms_per_cluster = 20, int length = 12) {
  std::mt19937_64 rng(seed);
  LabeledCorpus c;
  c.schema.metadata_types = {"Venue"};
  c.schema.min_freq = 2;
  c.pattern_specs = {"Venue", "Term"};
  auto pick = detail::zipf(terms_per_cluster, 0.5);
  for (int k = 0; k < 2; ++k) {
    const std::string prefix = k == 0 ? "a" : "b";
    for (int i = 0; i < docs_per_cluster; ++i) {
      Document d;
      d.doc_id = prefix + "_doc" + std::to_string(i);
      for (int t = 0; t < length; ++t) d.terms.push_back(prefix + std::to_string(pick(rng)));
      d.metadata["Venue"] = {k == 0 ? "VA" : "VB"};
      c.docs.push_back(std::move(d));
      c.labels.emplace_back(prefix);
    }
  }
  return c;
}

// `clusters` topical groups of documents with disjoint vocabularies.
// V_narrow is attached to `venue_docs` documents of cluster 0; V_broad to the
// same number of documents spread evenly over all clusters. Other documents
// carry no venue.
inline LabeledCorpus broad_vs_narrow(std::uint64_t seed, int clusters = 4,
                                     int docs_per_cluster = 80, int venue_docs = 80,
                                     int terms_per_cluster = 30, int length = 20) {
  std::mt19937_64 rng(seed);
  LabeledCorpus c;
  c.schema.metadata_types = {"Venue"};
  c.schema.min_freq = 3;
  c.pattern_specs = {"Venue", "Term"};
  auto pick = detail::zipf(terms_per_cluster, 0.5);
  const int per_cluster_broad = venue_docs / clusters;
  for (int k = 0; k < clusters; ++k) {
    std::vector<int> order(docs_per_cluster);
    for (int i = 0; i < docs_per_cluster; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::string> venue(docs_per_cluster);
    int next = 0;
    if (k == 0)
      for (int i = 0; i < venue_docs && next < docs_per_cluster; ++i) venue[order[next++]] = "V_narrow";
    for (int i = 0; i < per_cluster_broad && next < docs_per_cluster; ++i)
      venue[order[next++]] = "V_broad";
    const std::string prefix = "c" + std::to_string(k) + "_";
    for (int i = 0; i < docs_per_cluster; ++i) {
      Document d;
      d.doc_id = prefix + "doc" + std::to_string(i);
      for (int t = 0; t < length; ++t) d.terms.push_back(prefix + std::to_string(pick(rng)));
      if (!venue[i].empty()) d.metadata["Venue"] = {venue[i]};
      c.docs.push_back(std::move(d));
      c.labels.emplace_back(prefix);
    }
  }
  return c;
}

struct AcademicOptions {
  int docs_per_category = 400;
  int authors_per_category = 10;
  int shared_authors = 150;
  int topic_terms = 40;
  // Text is drawn from category-leaning themes plus common function words.
  // Category k prefers themes 2k and 2k+1 with probability theme_bias.
  double theme_bias = 1.0;
  int theme_terms = 40;
  int function_terms = 100;
  double function_share = 0.0;
  int min_length = 25;
  int max_length = 45;
  // Besides its text, each document carries one kind of category signal:
  // a planted venue-year pair, a category author, or a repeated topic term.
  // Fractions of the first two; the rest are topic documents.
  double pair_fraction = 0.4;
  double author_fraction = 0.3;
  int topic_repeats = 2;
  // chance that a document mentions its category name
  double name_probability = 0.3;
  // chance that the name is directly followed by the companion term
  double companion_after_name = 0.8;
  // companion terms of random categories sprinkled into every document
  int companion_noise = 1;
  // Venue and year pools; each category owns pairs_per_category of the
  // combinations, the rest go to documents without a planted pair.
  int venues = 20;
  int years = 5;
  int pairs_per_category = 4;
};

inline const std::vector<std::string>& academic_names() {
  static const std::vector<std::string> n{"database", "vision", "theory", "networking",
                                          "learning"};
  return n;
}

inline const std::vector<std::string>& academic_companions() {
  static const std::vector<std::string> n{"query", "image", "proof", "protocol", "model"};
  return n;
}

struct VenueYear {
  std::string venue, year;
};

// Splits every (venue, year) combination into `per_category` planted pairs
// for each of `categories` and the remaining noise pairs. Venues and years
// alone are shared across categories.
struct VenuePlan {
  std::vector<std::vector<VenueYear>> planted;
  std::vector<VenueYear> noise;
};

inline VenuePlan venue_plan(std::uint64_t seed, int categories, int venues, int years,
                            int per_category) {
  std::vector<VenueYear> all;
  for (int v = 0; v < venues; ++v)
    for (int y = 0; y < years; ++y)
      all.push_back({"V" + std::to_string(v), std::to_string(2010 + y)});
  if (std::size_t(categories * per_category) > all.size())
    throw ValidationError("not enough venue-year combinations to plant");
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(all.begin(), all.end(), rng);
  VenuePlan plan;
  plan.planted.resize(std::size_t(categories));
  std::size_t next = 0;
  for (int j = 0; j < per_category; ++j)
    for (int k = 0; k < categories; ++k) plan.planted[std::size_t(k)].push_back(all[next++]);
  plan.noise.assign(all.begin() + std::ptrdiff_t(next), all.end());
  return plan;
}

// Five categories over Author, Venue and Year metadata (see AcademicOptions).
// A category name appears in a minority of its documents, usually followed by
// a companion term that is also sprinkled uniformly across the corpus.
inline LabeledCorpus academic(std::uint64_t seed, const AcademicOptions& o = {}) {
  const auto& names = academic_names();
  const auto& companions = academic_companions();
  const int C = int(names.size());
  const int themes = 2 * C;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto topic = detail::zipf(o.topic_terms, 0.5);
  auto function = detail::zipf(o.function_terms, 1.0);
  auto theme_term = detail::zipf(o.theme_terms, 0.7);
  std::uniform_int_distribution<int> len(o.min_length, o.max_length);
  std::uniform_int_distribution<int> own_author(0, o.authors_per_category - 1);
  std::uniform_int_distribution<int> any_author(0, o.shared_authors - 1);
  std::uniform_int_distribution<int> n_shared(1, 2);
  std::uniform_int_distribution<int> pick_category(0, C - 1);
  std::uniform_int_distribution<int> pick_theme(0, themes - 1);
  const auto plan = venue_plan(seed, C, o.venues, o.years, o.pairs_per_category);
  std::uniform_int_distribution<std::size_t> pick_noise(0, plan.noise.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_planted(0, std::size_t(o.pairs_per_category) - 1);

  LabeledCorpus c;
  c.schema.metadata_types = {"Author", "Venue", "Year"};
  c.schema.min_freq = 5;
  c.pattern_specs = {"Author", "Venue", "Year", "Author-Author", "Venue-Year", "Term"};
  for (int k = 0; k < C; ++k) c.categories.push_back({names[k], names[k]});

  auto insert_at = [&](std::vector<std::string>& v, std::vector<std::string> what) {
    auto at = std::uniform_int_distribution<std::size_t>(0, v.size())(rng);
    v.insert(v.begin() + std::ptrdiff_t(at), what.begin(), what.end());
  };

  for (int k = 0; k < C; ++k) {
    for (int i = 0; i < o.docs_per_category; ++i) {
      const double r = u(rng);
      const bool pair = r < o.pair_fraction;
      const bool author = !pair && r < o.pair_fraction + o.author_fraction;
      const bool topical = !pair && !author;
      Document d;
      d.doc_id = names[k] + "_" + std::to_string(i);
      const int n = len(rng);
      int theme = u(rng) < o.theme_bias ? 2 * k + int(u(rng) < 0.5) : pick_theme(rng);
      if (topical) theme = 2 * k + (theme % 2 == 1 && theme / 2 == k ? 1 : 0);
      for (int t = 0; t < n; ++t) {
        if (u(rng) < o.function_share)
          d.terms.push_back("f" + std::to_string(function(rng)));
        else
          d.terms.push_back("th" + std::to_string(theme) + "_" + std::to_string(theme_term(rng)));
      }
      if (topical) {
        const auto term = names[k] + "_t" + std::to_string(topic(rng));
        insert_at(d.terms, std::vector<std::string>(std::size_t(o.topic_repeats), term));
      }
      if (u(rng) < o.name_probability) {
        if (u(rng) < o.companion_after_name)
          insert_at(d.terms, {names[k], companions[k]});
        else
          insert_at(d.terms, {names[k]});
      }
      for (int j = 0; j < o.companion_noise; ++j)
        insert_at(d.terms, {companions[pick_category(rng)]});

      auto& authors = d.metadata["Author"];
      if (author) authors.push_back("a" + std::to_string(k) + "_" + std::to_string(own_author(rng)));
      for (int a = n_shared(rng); a > 0; --a) {
        auto name = "s" + std::to_string(any_author(rng));
        if (std::find(authors.begin(), authors.end(), name) == authors.end())
          authors.push_back(std::move(name));
      }
      const auto& [venue, year] = pair ? plan.planted[std::size_t(k)][pick_planted(rng)]
                                       : plan.noise[pick_noise(rng)];
      d.metadata["Venue"] = {venue};
      d.metadata["Year"] = {year};
      c.docs.push_back(std::move(d));
      c.labels.emplace_back(names[k]);
    }
  }
  return c;
}

// Writes corpus.jsonl, categories.json and patterns.txt into `dir`.
inline void write_bundle(const LabeledCorpus& c, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "corpus.jsonl");
    write_corpus_jsonl(c.store(), out);
  }
  {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& cat : c.categories) j.push_back({{"label", cat.label_id}, {"name", cat.name_term}});
    std::ofstream out(dir / "categories.json");
    out << j.dump(2) << '\n';
  }
  std::ofstream out(dir / "patterns.txt");
  for (const auto& p : c.pattern_specs) out << p << '\n';
}

}  // namespace motifclass::synthetic
