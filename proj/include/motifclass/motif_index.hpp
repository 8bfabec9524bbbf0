#pragma once

// Frequent motif instances and the instance <-> document incidence.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "motifclass/corpus.hpp"

namespace motifclass {

using Binding = std::pair<std::string, std::string>;  // (type, value)

struct MotifInstance {
  std::string instance_id;
  std::string pattern_id;
  std::vector<Binding> bindings;  // sorted by (type, value)
  std::uint32_t doc_freq = 0;

  bool is_term() const {
    return bindings.size() == 1 && bindings[0].first == kTermType;
  }
};

inline std::string binding_token(std::string_view type, std::string_view value) {
  std::string s;
  s.reserve(type.size() + value.size() + 2);
  s.append(type).append("[").append(value).append("]");
  return s;
}

inline std::string term_instance_id(std::string_view term) {
  return binding_token(kTermType, term);
}

// Bindings must already be in canonical (type, value) order.
inline std::string instance_id(std::span<const Binding> bindings) {
  std::string id;
  for (std::size_t i = 0; i < bindings.size(); ++i) {
    if (i) id += '-';
    id += binding_token(bindings[i].first, bindings[i].second);
  }
  return id;
}

inline bool appears_in(std::span<const Binding> bindings, const Document& d) {
  for (const auto& [type, value] : bindings) {
    if (type == kTermType) {
      if (std::find(d.terms.begin(), d.terms.end(), value) == d.terms.end())
        return false;
    } else {
      auto it = d.metadata.find(type);
      if (it == d.metadata.end()) return false;
      if (std::find(it->second.begin(), it->second.end(), value) == it->second.end())
        return false;
    }
  }
  // Repeated types bind distinct values.
  for (std::size_t i = 1; i < bindings.size(); ++i)
    if (bindings[i] == bindings[i - 1]) return false;
  return true;
}

inline bool appears_in(const MotifInstance& m, const Document& d) {
  return appears_in(m.bindings, d);
}

namespace detail {

// Calls emit(bindings) for every instance of `pattern` realized by `d`, in
// lexicographic order. Patterns with a repeated node type stop after `cap`
// instances for this document.
template <class Emit>
void for_each_document_instance(const Document& d, const MotifPattern& pattern,
                                std::size_t cap, Emit&& emit) {
  if (pattern.is_term()) {
    std::vector<std::string_view> terms(d.terms.begin(), d.terms.end());
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    std::vector<Binding> b(1);
    b[0].first = std::string(kTermType);
    for (auto t : terms) {
      b[0].second = std::string(t);
      emit(std::span<const Binding>(b));
    }
    return;
  }

  // (type, multiplicity) groups in sorted type order.
  std::vector<std::pair<std::string, std::size_t>> groups;
  for (const auto& t : pattern.node_types()) {
    if (!groups.empty() && groups.back().first == t)
      ++groups.back().second;
    else
      groups.emplace_back(t, 1);
  }
  bool repeated = false;
  std::vector<std::vector<std::string>> values;
  for (const auto& [type, k] : groups) {
    repeated = repeated || k > 1;
    auto it = d.metadata.find(type);
    if (it == d.metadata.end() || it->second.size() < k) return;
    auto v = it->second;
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (v.size() < k) return;
    values.push_back(std::move(v));
  }

  // Per group: indices of a k-combination; odometer across groups.
  std::vector<std::vector<std::size_t>> combo(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    combo[g].resize(groups[g].second);
    for (std::size_t i = 0; i < combo[g].size(); ++i) combo[g][i] = i;
  }
  auto advance = [](std::vector<std::size_t>& c, std::size_t n) {
    // next k-combination of {0..n-1}; false when exhausted (and resets)
    const std::size_t k = c.size();
    for (std::size_t i = k; i-- > 0;) {
      if (c[i] < n - k + i) {
        ++c[i];
        for (std::size_t j = i + 1; j < k; ++j) c[j] = c[j - 1] + 1;
        return true;
      }
    }
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    return false;
  };

  std::vector<Binding> b(pattern.node_types().size());
  std::size_t emitted = 0;
  while (true) {
    std::size_t pos = 0;
    for (std::size_t g = 0; g < groups.size(); ++g)
      for (auto idx : combo[g]) b[pos++] = {groups[g].first, values[g][idx]};
    emit(std::span<const Binding>(b));
    if (repeated && ++emitted >= cap) return;
    std::size_t g = groups.size();
    bool more = false;
    while (g-- > 0) {
      if (advance(combo[g], values[g].size())) {
        more = true;
        break;
      }
    }
    if (!more) return;
  }
}

}  // namespace detail

class MotifInstanceIndex {
 public:
  MotifInstanceIndex() = default;

  std::span<const MotifInstance> instances() const { return instances_; }
  const MotifInstance& instance(std::size_t i) const { return instances_[i]; }
  std::size_t instance_count() const { return instances_.size(); }
  std::size_t doc_count() const { return by_doc_.size(); }
  std::span<const MotifPattern> patterns() const { return patterns_; }

  std::optional<std::uint32_t> find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  // sorted instance indices of document i
  std::span<const std::uint32_t> by_doc(std::size_t doc) const { return by_doc_[doc]; }
  // sorted document indices of instance m
  std::span<const std::uint32_t> by_instance(std::size_t m) const {
    return by_instance_[m];
  }

  void write_tsv(std::ostream& out) const {
    out << "instance_id\tpattern_id\tdoc_freq\n";
    for (const auto& m : instances_)
      out << m.instance_id << '\t' << m.pattern_id << '\t' << m.doc_freq << '\n';
  }

 private:
  friend MotifInstanceIndex enumerate_instances(const CorpusStore&,
                                                std::span<const MotifPattern>, int,
                                                std::size_t);

  std::vector<MotifPattern> patterns_;
  std::vector<MotifInstance> instances_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
  std::vector<std::vector<std::uint32_t>> by_doc_;
  std::vector<std::vector<std::uint32_t>> by_instance_;
};

inline constexpr std::size_t kDefaultMaxCombosPerDoc = 100;

// One global min_freq threshold over all patterns. Instance order is the
// lexicographic order of instance ids.
inline MotifInstanceIndex enumerate_instances(
    const CorpusStore& corpus, std::span<const MotifPattern> patterns, int min_freq,
    std::size_t max_combos_per_doc = kDefaultMaxCombosPerDoc) {
  if (min_freq < 1) throw ValidationError("min_freq must be >= 1");
  MotifInstanceIndex idx;
  idx.patterns_.assign(patterns.begin(), patterns.end());

  for (const auto& p : patterns) {
    if (p.is_term()) continue;
    for (const auto& t : p.node_types()) {
      bool seen = false;
      for (const auto& d : corpus.documents())
        if (d.metadata.count(t) && !d.metadata.at(t).empty()) {
          seen = true;
          break;
        }
      if (!seen)
        log::warn("pattern " + p.id() + ": metadata type '" + t +
                  "' is absent from every document; no instances");
    }
  }

  struct Candidate {
    std::uint32_t count = 0;
    std::string pattern_id;
    std::vector<Binding> bindings;
  };
  std::unordered_map<std::string, Candidate> counts;
  for (const auto& d : corpus.documents())
    for (const auto& p : patterns)
      detail::for_each_document_instance(
          d, p, max_combos_per_doc, [&](std::span<const Binding> b) {
            auto [it, fresh] = counts.try_emplace(instance_id(b));
            if (fresh) {
              it->second.pattern_id = p.id();
              it->second.bindings.assign(b.begin(), b.end());
            }
            ++it->second.count;
          });

  std::vector<std::string> kept;
  for (const auto& [id, c] : counts)
    if (c.count >= std::uint32_t(min_freq)) kept.push_back(id);
  std::sort(kept.begin(), kept.end());
  idx.instances_.reserve(kept.size());
  for (std::uint32_t i = 0; i < kept.size(); ++i) {
    auto& c = counts[kept[i]];
    idx.instances_.push_back(
        MotifInstance{kept[i], std::move(c.pattern_id), std::move(c.bindings), c.count});
    idx.by_id_.emplace(kept[i], i);
  }

  idx.by_doc_.resize(corpus.size());
  idx.by_instance_.resize(idx.instances_.size());
  for (std::uint32_t di = 0; di < corpus.size(); ++di) {
    auto& row = idx.by_doc_[di];
    for (const auto& p : patterns)
      detail::for_each_document_instance(
          corpus.doc(di), p, max_combos_per_doc, [&](std::span<const Binding> b) {
            auto it = idx.by_id_.find(instance_id(b));
            if (it != idx.by_id_.end()) row.push_back(it->second);
          });
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    for (auto m : row) idx.by_instance_[m].push_back(di);
  }
  return idx;
}

// Per-pattern instance counts, for ingest summaries.
inline std::map<std::string, std::size_t> instances_per_pattern(
    const MotifInstanceIndex& idx) {
  std::map<std::string, std::size_t> out;
  for (const auto& p : idx.patterns()) out[p.id()] = 0;
  for (const auto& m : idx.instances()) ++out[m.pattern_id];
  return out;
}

}  // namespace motifclass
