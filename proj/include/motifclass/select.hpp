#pragma once

// Category-indicative motif instances: rank by cosine to the category-name
// term, keeping only instances at least eta times as specific.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "motifclass/core.hpp"
#include "motifclass/corpus.hpp"
#include "motifclass/embedding.hpp"
#include "motifclass/motif_index.hpp"

namespace motifclass {

struct SelectionConfig {
  int size = 50;
  double eta = 2.0;
  // false admits every instance regardless of kappa (no-specificity ablation)
  bool specificity_filter = true;

  void validate() const {
    if (size < 1) throw ValidationError("selection size must be >= 1");
    if (!(eta > 1.0)) throw ValidationError("eta must be > 1");
  }
};

struct Candidate {
  std::string instance_id;
  double cosine = 0;
  double kappa = 0;
};

// Indices into `candidates` of the top `take` entries with
// kappa >= eta * kappa_ref, by cosine descending then instance_id ascending.
inline std::vector<std::size_t> rank_candidates(std::span<const Candidate> candidates,
                                                double kappa_ref, double eta, std::size_t take,
                                                bool filter = true) {
  std::vector<std::size_t> keep;
  const double threshold = eta * kappa_ref;
  for (std::size_t i = 0; i < candidates.size(); ++i)
    if (!filter || candidates[i].kappa >= threshold) keep.push_back(i);
  auto before = [&](std::size_t a, std::size_t b) {
    const auto& x = candidates[a];
    const auto& y = candidates[b];
    if (x.cosine != y.cosine) return x.cosine > y.cosine;
    return x.instance_id < y.instance_id;
  };
  if (keep.size() > take) {
    std::partial_sort(keep.begin(), keep.begin() + std::ptrdiff_t(take), keep.end(), before);
    keep.resize(take);
  } else {
    std::sort(keep.begin(), keep.end(), before);
  }
  return keep;
}

struct IndicativeMember {
  std::uint32_t instance = 0;
  std::string instance_id;
  std::string pattern_id;
  double cosine = 0;
  double kappa_ratio = 0;  // kappa_m / kappa of the name term
};

struct IndicativeSet {
  std::string label_id;
  std::vector<IndicativeMember> members;  // name term first
  bool shortfall = false;
};

namespace detail {

inline std::uint32_t name_instance(const EmbeddingModel& model, const CategorySpec& category) {
  auto m = model.find_instance(term_instance_id(category.name_term));
  if (!m)
    throw ValidationError("category '" + category.label_id + "': name '" + category.name_term +
                          "' has no embedding (not a frequent term)");
  return *m;
}

inline double ratio(double kappa, double ref) {
  if (ref > 0) return kappa / ref;
  return kappa > 0 ? std::numeric_limits<double>::infinity() : 1.0;
}

inline void check_alignment(const EmbeddingModel& model, const MotifInstanceIndex& index) {
  if (model.instance_count() != index.instance_count())
    throw ValidationError("embedding model and motif index disagree on instance count");
}

}  // namespace detail

inline IndicativeSet select_indicative(const EmbeddingModel& model, const MotifInstanceIndex& index,
                                       const CategorySpec& category,
                                       const SelectionConfig& config) {
  config.validate();
  detail::check_alignment(model, index);
  const auto ml = detail::name_instance(model, category);
  const auto center = model.instance_vector(ml);
  const double kref = model.kappa(ml);

  std::vector<Candidate> cands;
  std::vector<std::uint32_t> which;
  cands.reserve(model.instance_count());
  for (std::uint32_t m = 0; m < model.instance_count(); ++m) {
    if (m == ml) continue;
    cands.push_back({model.instance_id(m), cosine(model.instance_vector(m), center),
                     model.kappa(m)});
    which.push_back(m);
  }
  const std::size_t want = std::size_t(config.size) - 1;
  auto ranked = rank_candidates(cands, kref, config.eta, want, config.specificity_filter);

  IndicativeSet out;
  out.label_id = category.label_id;
  auto member = [&](std::uint32_t m, double cos) {
    return IndicativeMember{m, model.instance_id(m), index.instance(m).pattern_id, cos,
                            detail::ratio(model.kappa(m), kref)};
  };
  out.members.push_back(member(ml, 1.0));
  for (auto i : ranked) out.members.push_back(member(which[i], cands[i].cosine));
  if (ranked.size() < want) {
    out.shortfall = true;
    log::warn("category '" + category.label_id + "': only " + std::to_string(ranked.size()) +
              " of " + std::to_string(want) + " instances pass the specificity filter");
  }
  return out;
}

// label \t rank \t instance_id \t cosine \t kappa_ratio, rank starting at 1.
inline void write_selections_tsv(std::span<const IndicativeSet> sets, std::ostream& out) {
  out << "label\trank\tinstance_id\tcosine\tkappa_ratio\n";
  char buf[64];
  for (const auto& s : sets)
    for (std::size_t r = 0; r < s.members.size(); ++r) {
      const auto& m = s.members[r];
      std::snprintf(buf, sizeof buf, "%.17g\t%.17g", m.cosine, m.kappa_ratio);
      out << s.label_id << '\t' << r + 1 << '\t' << m.instance_id << '\t' << buf << '\n';
    }
}

// Inverse of write_selections_tsv; instances are resolved against the index.
inline std::vector<IndicativeSet> read_selections_tsv(std::istream& in,
                                                      const MotifInstanceIndex& index) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with("label\trank\t"))
    throw ValidationError("selections file: missing header");
  std::vector<IndicativeSet> sets;
  std::map<std::string, std::size_t> pos;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 5)
      throw ValidationError("selections file:" + std::to_string(lineno) + ": expected 5 fields");
    auto m = index.find(f[2]);
    if (!m)
      throw ValidationError("selections file:" + std::to_string(lineno) + ": unknown instance " +
                            f[2]);
    auto [it, fresh] = pos.emplace(f[0], sets.size());
    if (fresh) sets.push_back(IndicativeSet{f[0], {}, false});
    sets[it->second].members.push_back(IndicativeMember{
        *m, f[2], index.instance(*m).pattern_id, std::stod(f[3]), std::stod(f[4])});
  }
  return sets;
}

// ---------------------------------------------------------------------------
// Specificity buckets.

struct SpecificityBucket {
  double lo = 0;
  double hi = 0;  // +inf for the last bucket
  bool selected = false;
  std::size_t count = 0;
  std::vector<IndicativeMember> top;  // by cosine, at most top_k
};

struct BucketReport {
  std::string label_id;
  std::vector<SpecificityBucket> buckets;
};

// Index of the left-closed bucket [e_{i-1}, e_i) holding `ratio`, with an
// implicit first edge 0 and last edge +inf.
inline std::size_t bucket_of(double ratio, std::span<const double> edges) {
  return std::size_t(std::upper_bound(edges.begin(), edges.end(), ratio) - edges.begin());
}

inline BucketReport specificity_buckets(const EmbeddingModel& model,
                                        const MotifInstanceIndex& index,
                                        const CategorySpec& category, double eta = 2.0,
                                        std::vector<double> edges = {1, 2, 3, 4},
                                        std::size_t top_k = 5) {
  detail::check_alignment(model, index);
  if (!std::is_sorted(edges.begin(), edges.end()))
    throw ValidationError("bucket edges must be ascending");
  const auto ml = detail::name_instance(model, category);
  const auto center = model.instance_vector(ml);
  const double kref = model.kappa(ml);

  BucketReport rep;
  rep.label_id = category.label_id;
  for (std::size_t b = 0; b <= edges.size(); ++b) {
    SpecificityBucket s;
    s.lo = b == 0 ? 0.0 : edges[b - 1];
    s.hi = b == edges.size() ? std::numeric_limits<double>::infinity() : edges[b];
    s.selected = s.lo >= eta;
    rep.buckets.push_back(s);
  }
  std::vector<std::vector<Candidate>> cands(rep.buckets.size());
  std::vector<std::vector<std::uint32_t>> which(rep.buckets.size());
  for (std::uint32_t m = 0; m < model.instance_count(); ++m) {
    if (m == ml) continue;
    auto b = bucket_of(detail::ratio(model.kappa(m), kref), edges);
    cands[b].push_back({model.instance_id(m), cosine(model.instance_vector(m), center),
                        model.kappa(m)});
    which[b].push_back(m);
  }
  for (std::size_t b = 0; b < rep.buckets.size(); ++b) {
    auto& s = rep.buckets[b];
    s.count = cands[b].size();
    for (auto i : rank_candidates(cands[b], 0.0, 1.0, top_k, false)) {
      auto m = which[b][i];
      s.top.push_back({m, model.instance_id(m), index.instance(m).pattern_id,
                       cands[b][i].cosine, detail::ratio(model.kappa(m), kref)});
    }
  }
  return rep;
}

inline void write_buckets_markdown(std::span<const BucketReport> reports, std::ostream& out) {
  auto edge = [](double x) {
    if (std::isinf(x)) return std::string("inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", x);
    return std::string(buf);
  };
  for (const auto& r : reports) {
    out << "### " << r.label_id << "\n\n";
    out << "| kappa_m / kappa_name | Status | Count | Top instances |\n";
    out << "|---|---|---|---|\n";
    for (const auto& b : r.buckets) {
      out << "| [" << edge(b.lo) << ", " << edge(b.hi) << ") | "
          << (b.selected ? "Selected" : "Not Selected") << " | " << b.count << " | ";
      for (std::size_t i = 0; i < b.top.size(); ++i) out << (i ? ", " : "") << b.top[i].instance_id;
      out << " |\n";
    }
    out << "\n";
  }
}

}  // namespace motifclass
