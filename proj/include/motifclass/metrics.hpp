#pragma once

// Evaluation: F1 scores, confusion matrix, pseudo-label accuracy and motif
// pattern proportions. This is the only module that reads gold labels.

#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "motifclass/core.hpp"
#include "motifclass/corpus.hpp"
#include "motifclass/select.hpp"

namespace motifclass {

struct GoldChannel {
  static const std::vector<std::optional<std::string>>& open(const CorpusStore& corpus) {
    return corpus.gold_labels(GoldKey{});
  }
};

struct ClassScores {
  std::string label;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t support = 0;
};

struct F1Report {
  double micro = 0;
  double macro = 0;
  std::vector<ClassScores> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  std::size_t n = 0;
};

// preds and golds are class indices in [0, labels.size()).
inline F1Report f1_report(std::span<const std::size_t> preds, std::span<const std::size_t> golds,
                          std::span<const std::string> labels) {
  if (preds.size() != golds.size()) throw ValidationError("prediction and gold counts differ");
  if (preds.empty()) throw ValidationError("cannot score an empty prediction set");
  const std::size_t L = labels.size();
  F1Report r;
  r.n = preds.size();
  r.confusion.assign(L, std::vector<std::size_t>(L, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] >= L || golds[i] >= L) throw ValidationError("label index out of range");
    ++r.confusion[golds[i]][preds[i]];
  }
  std::size_t tp_all = 0, fp_all = 0, fn_all = 0;
  double f1_sum = 0;
  for (std::size_t l = 0; l < L; ++l) {
    std::size_t tp = r.confusion[l][l], fp = 0, fn = 0;
    for (std::size_t o = 0; o < L; ++o) {
      if (o == l) continue;
      fp += r.confusion[o][l];
      fn += r.confusion[l][o];
    }
    tp_all += tp;
    fp_all += fp;
    fn_all += fn;
    ClassScores s;
    s.label = labels[l];
    s.support = tp + fn;
    s.precision = tp + fp ? double(tp) / double(tp + fp) : 0.0;
    s.recall = tp + fn ? double(tp) / double(tp + fn) : 0.0;
    s.f1 = 2 * tp + fp + fn ? 2.0 * double(tp) / double(2 * tp + fp + fn) : 0.0;
    f1_sum += s.f1;
    r.per_class.push_back(s);
  }
  r.micro = double(tp_all) / (double(tp_all) + 0.5 * double(fp_all + fn_all));
  r.macro = f1_sum / double(L);
  return r;
}

// Label-string form; every gold must be one of `labels`.
inline std::pair<double, double> micro_macro_f1(std::span<const std::string> preds,
                                                std::span<const std::string> golds,
                                                std::span<const std::string> labels) {
  std::map<std::string, std::size_t> idx;
  for (std::size_t i = 0; i < labels.size(); ++i) idx[labels[i]] = i;
  auto lookup = [&](const std::string& s) {
    auto it = idx.find(s);
    if (it == idx.end()) throw ValidationError("undeclared label '" + s + "'");
    return it->second;
  };
  std::vector<std::size_t> p, g;
  for (const auto& s : preds) p.push_back(lookup(s));
  for (const auto& s : golds) g.push_back(lookup(s));
  auto r = f1_report(p, g, labels);
  return {r.micro, r.macro};
}

// ---------------------------------------------------------------------------
// Pseudo-label accuracy.

inline std::optional<double> accuracy_fraction(std::size_t correct, std::size_t total) {
  if (total == 0) return std::nullopt;
  return double(correct) / double(total);
}

struct PseudoAccuracy {
  std::optional<double> overall;
  std::size_t total = 0;
  // (cutoff per category, accuracy over the top-cutoff of every category, docs counted)
  std::vector<std::tuple<std::size_t, std::optional<double>, std::size_t>> curve;
};

inline const std::vector<std::size_t>& default_cutoffs() {
  static const std::vector<std::size_t> c{50, 100, 200, 1000};
  return c;
}

// ranked[l]: retrieved document indices for category l, best first. Documents
// without a gold label are skipped. `overall` uses the first `size` of each.
inline PseudoAccuracy pseudo_accuracy(const std::vector<std::vector<std::size_t>>& ranked,
                                      std::span<const std::string> labels,
                                      const std::vector<std::optional<std::string>>& golds,
                                      std::size_t size,
                                      std::span<const std::size_t> cutoffs = default_cutoffs()) {
  auto count = [&](std::size_t top) {
    std::size_t correct = 0, total = 0;
    for (std::size_t l = 0; l < ranked.size(); ++l)
      for (std::size_t i = 0; i < ranked[l].size() && i < top; ++i) {
        const auto& g = golds[ranked[l][i]];
        if (!g) continue;
        ++total;
        if (*g == labels[l]) ++correct;
      }
    return std::pair{correct, total};
  };
  PseudoAccuracy out;
  auto [c, t] = count(size);
  out.overall = accuracy_fraction(c, t);
  out.total = t;
  for (auto cut : cutoffs) {
    auto [cc, tt] = count(cut);
    out.curve.emplace_back(cut, accuracy_fraction(cc, tt), tt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Pattern proportions of selected instances.

struct PatternProportions {
  std::vector<std::string> patterns;  // union over categories, sorted
  std::map<std::string, std::map<std::string, double>> per_category;
  std::map<std::string, double> overall;  // mean over categories
};

inline PatternProportions pattern_proportions(std::span<const IndicativeSet> sets) {
  PatternProportions out;
  std::set<std::string> all;
  for (const auto& s : sets) {
    if (s.members.empty()) throw ValidationError("empty indicative set for " + s.label_id);
    auto& row = out.per_category[s.label_id];
    for (const auto& m : s.members) {
      row[m.pattern_id] += 1.0;
      all.insert(m.pattern_id);
    }
    for (auto& [p, v] : row) v /= double(s.members.size());
  }
  out.patterns.assign(all.begin(), all.end());
  for (const auto& p : out.patterns) {
    double sum = 0;
    for (const auto& [label, row] : out.per_category) {
      auto it = row.find(p);
      if (it != row.end()) sum += it->second;
    }
    out.overall[p] = sets.empty() ? 0.0 : sum / double(sets.size());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report.

struct EvaluationReport {
  std::vector<std::string> labels;
  F1Report f1;
  PseudoAccuracy pseudo;
  PatternProportions proportions;
  std::string ablation = "full";
};

inline nlohmann::json to_json(const EvaluationReport& r) {
  using nlohmann::json;
  json j;
  j["ablation"] = r.ablation;
  j["documents_evaluated"] = r.f1.n;
  j["micro_f1"] = r.f1.micro;
  j["macro_f1"] = r.f1.macro;
  j["labels"] = r.labels;
  j["per_class"] = json::array();
  for (const auto& c : r.f1.per_class)
    j["per_class"].push_back({{"label", c.label},
                              {"precision", c.precision},
                              {"recall", c.recall},
                              {"f1", c.f1},
                              {"support", c.support}});
  j["confusion"] = r.f1.confusion;
  j["pseudo_accuracy"] = r.pseudo.overall ? json(*r.pseudo.overall) : json(nullptr);
  j["pseudo_documents_with_gold"] = r.pseudo.total;
  j["pseudo_accuracy_curve"] = json::array();
  for (const auto& [cut, acc, n] : r.pseudo.curve)
    j["pseudo_accuracy_curve"].push_back(
        {{"cutoff", cut}, {"accuracy", acc ? json(*acc) : json(nullptr)}, {"documents", n}});
  j["pattern_proportions"] = {{"per_category", r.proportions.per_category},
                              {"overall", r.proportions.overall}};
  return j;
}

namespace detail {
inline std::string fmt(double x, const char* f = "%.3f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}
}  // namespace detail

inline void write_report_markdown(const EvaluationReport& r, std::ostream& out) {
  using detail::fmt;
  out << "# Evaluation report (" << r.ablation << ")\n\n";
  out << "| Micro-F1 | Macro-F1 | Documents |\n|---|---|---|\n";
  out << "| " << fmt(r.f1.micro) << " | " << fmt(r.f1.macro) << " | " << r.f1.n << " |\n\n";

  out << "## Per class\n\n| Label | Precision | Recall | F1 | Support |\n|---|---|---|---|---|\n";
  for (const auto& c : r.f1.per_class)
    out << "| " << c.label << " | " << fmt(c.precision) << " | " << fmt(c.recall) << " | "
        << fmt(c.f1) << " | " << c.support << " |\n";

  out << "\n## Confusion matrix (rows gold, columns predicted)\n\n|  |";
  for (const auto& l : r.labels) out << ' ' << l << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < r.labels.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t g = 0; g < r.labels.size(); ++g) {
    out << "| " << r.labels[g] << " |";
    for (auto v : r.f1.confusion[g]) out << ' ' << v << " |";
    out << '\n';
  }

  out << "\n## Pattern proportions of selected instances\n\n| Category |";
  for (const auto& p : r.proportions.patterns) out << ' ' << p << " |";
  out << "\n|---|";
  for (std::size_t i = 0; i < r.proportions.patterns.size(); ++i) out << "---|";
  out << '\n';
  auto row = [&](const std::string& name, const std::map<std::string, double>& v) {
    out << "| " << name << " |";
    for (const auto& p : r.proportions.patterns) {
      auto it = v.find(p);
      out << ' ' << fmt(it == v.end() ? 0.0 : it->second) << " |";
    }
    out << '\n';
  };
  for (const auto& [label, v] : r.proportions.per_category) row(label, v);
  row("Overall", r.proportions.overall);

  out << "\n## Pseudo-label accuracy of retrieved documents\n\n";
  out << "Overall: " << (r.pseudo.overall ? fmt(*r.pseudo.overall) : std::string("n/a")) << " ("
      << r.pseudo.total << " documents)\n\n| Top per category | Accuracy | Documents |\n|---|---|---|\n";
  for (const auto& [cut, acc, n] : r.pseudo.curve)
    out << "| " << cut << " | " << (acc ? fmt(*acc) : std::string("n/a")) << " | " << n << " |\n";
}

inline void write_pseudo_accuracy_csv(const PseudoAccuracy& p, std::ostream& out) {
  out << "cutoff,accuracy,documents\n";
  for (const auto& [cut, acc, n] : p.curve)
    out << cut << ',' << (acc ? detail::fmt(*acc, "%.6f") : std::string()) << ',' << n << '\n';
}

}  // namespace motifclass
