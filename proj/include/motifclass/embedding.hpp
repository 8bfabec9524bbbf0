#pragma once

// Joint embedding of motif instances and documents on the unit sphere with a
// per-instance specificity (concentration) kappa.
//
// Two negative-sampling objectives share the instance parameters:
//   doc:     -log s(k_m e_m.e_d)  - sum_d' log s(-k_m e_m.e_d')
//   context: -log s(k_m e_m.e_m+) - sum_m- log s(-k_m e_m.e_m-)
// with s the logistic function. Every update is followed by projection back
// to the sphere and clamping kappa at zero.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "motifclass/core.hpp"
#include "motifclass/corpus.hpp"
#include "motifclass/motif_index.hpp"
#include "motifclass/sphere.hpp"

namespace motifclass {

struct TrainConfig {
  int dim = 100;
  int window = 5;
  int negatives = 5;
  int epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;
  bool deterministic = true;
  int workers = 1;
  // false pins every kappa at initial_kappa (the no-specificity ablation)
  bool learn_specificity = true;
  double initial_kappa = 1.0;

  void validate() const {
    if (dim < 2) throw ValidationError("embedding dim must be >= 2");
    if (window < 1) throw ValidationError("context window must be >= 1");
    if (negatives < 1) throw ValidationError("negatives must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be > 0");
    if (workers < 1) throw ValidationError("workers must be >= 1");
    if (!(initial_kappa >= 0)) throw ValidationError("initial kappa must be >= 0");
  }
};

class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(std::size_t dim, std::vector<std::string> instance_ids,
                 std::vector<std::string> doc_ids)
      : dim_(dim),
        instance_ids_(std::move(instance_ids)),
        doc_ids_(std::move(doc_ids)),
        instance_vecs_(instance_ids_.size() * dim, 0.0),
        doc_vecs_(doc_ids_.size() * dim, 0.0),
        kappas_(instance_ids_.size(), 1.0) {
    rebuild_lookup();
  }

  std::size_t dim() const { return dim_; }
  std::size_t instance_count() const { return instance_ids_.size(); }
  std::size_t doc_count() const { return doc_ids_.size(); }
  const std::string& instance_id(std::size_t i) const { return instance_ids_[i]; }
  const std::string& doc_id(std::size_t j) const { return doc_ids_[j]; }

  std::span<double> instance_vector(std::size_t i) {
    return {instance_vecs_.data() + i * dim_, dim_};
  }
  std::span<const double> instance_vector(std::size_t i) const {
    return {instance_vecs_.data() + i * dim_, dim_};
  }
  std::span<double> doc_vector(std::size_t j) { return {doc_vecs_.data() + j * dim_, dim_}; }
  std::span<const double> doc_vector(std::size_t j) const {
    return {doc_vecs_.data() + j * dim_, dim_};
  }
  double& kappa(std::size_t i) { return kappas_[i]; }
  double kappa(std::size_t i) const { return kappas_[i]; }
  std::span<const double> kappas() const { return kappas_; }

  std::optional<std::uint32_t> find_instance(std::string_view id) const {
    auto it = lookup_.find(std::string(id));
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
  }

  // Unit norms within tol and nonnegative kappas.
  bool satisfies_invariants(double tol = 1e-6) const {
    auto unit = [&](std::span<const double> v) {
      return std::abs(norm(v) - 1.0) <= tol;
    };
    for (std::size_t i = 0; i < instance_count(); ++i)
      if (!unit(instance_vector(i)) || !(kappas_[i] >= 0)) return false;
    for (std::size_t j = 0; j < doc_count(); ++j)
      if (!unit(doc_vector(j))) return false;
    return true;
  }

  bool operator==(const EmbeddingModel& o) const {
    return dim_ == o.dim_ && instance_ids_ == o.instance_ids_ && doc_ids_ == o.doc_ids_ &&
           instance_vecs_ == o.instance_vecs_ && doc_vecs_ == o.doc_vecs_ &&
           kappas_ == o.kappas_;
  }

  // Binary layout (little-endian host order):
  //   "MCEMB001" | u32 dim | u64 n_instances | u64 n_docs
  //   per entry: u32 id_len | id bytes | f64 kappa | dim x f64
  // Instances come first, then documents (kappa field 0).
  void write_binary(std::ostream& out) const {
    out.write("MCEMB001", 8);
    put<std::uint32_t>(out, std::uint32_t(dim_));
    put<std::uint64_t>(out, instance_ids_.size());
    put<std::uint64_t>(out, doc_ids_.size());
    auto entry = [&](const std::string& id, double k, std::span<const double> v) {
      put<std::uint32_t>(out, std::uint32_t(id.size()));
      out.write(id.data(), std::streamsize(id.size()));
      put<double>(out, k);
      out.write(reinterpret_cast<const char*>(v.data()),
                std::streamsize(v.size() * sizeof(double)));
    };
    for (std::size_t i = 0; i < instance_count(); ++i)
      entry(instance_ids_[i], kappas_[i], instance_vector(i));
    for (std::size_t j = 0; j < doc_count(); ++j) entry(doc_ids_[j], 0.0, doc_vector(j));
  }

  static EmbeddingModel read_binary(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "MCEMB001", 8) != 0)
      throw ValidationError("not an embedding model file");
    EmbeddingModel m;
    m.dim_ = get<std::uint32_t>(in);
    auto ni = get<std::uint64_t>(in);
    auto nd = get<std::uint64_t>(in);
    m.instance_ids_.resize(ni);
    m.doc_ids_.resize(nd);
    m.instance_vecs_.resize(ni * m.dim_);
    m.doc_vecs_.resize(nd * m.dim_);
    m.kappas_.resize(ni);
    auto entry = [&](std::string& id, double& k, std::span<double> v) {
      auto len = get<std::uint32_t>(in);
      id.resize(len);
      in.read(id.data(), len);
      k = get<double>(in);
      in.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(double)));
      if (!in) throw ValidationError("truncated embedding model file");
    };
    for (std::size_t i = 0; i < ni; ++i)
      entry(m.instance_ids_[i], m.kappas_[i], m.instance_vector(i));
    double unused;
    for (std::size_t j = 0; j < nd; ++j) entry(m.doc_ids_[j], unused, m.doc_vector(j));
    m.rebuild_lookup();
    return m;
  }

  // id \t kappa \t v_1 \t ... \t v_dim ; documents use kind "doc".
  void write_tsv(std::ostream& out) const {
    out << "kind\tid\tkappa\tvector\n";
    char buf[32];
    auto row = [&](const char* kind, const std::string& id, double k,
                   std::span<const double> v) {
      out << kind << '\t' << id << '\t';
      std::snprintf(buf, sizeof buf, "%.9g", k);
      out << buf;
      for (double x : v) {
        std::snprintf(buf, sizeof buf, "%.9g", x);
        out << '\t' << buf;
      }
      out << '\n';
    };
    for (std::size_t i = 0; i < instance_count(); ++i)
      row("instance", instance_ids_[i], kappas_[i], instance_vector(i));
    for (std::size_t j = 0; j < doc_count(); ++j)
      row("doc", doc_ids_[j], 0.0, doc_vector(j));
  }

 private:
  template <class T>
  static void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <class T>
  static T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ValidationError("truncated embedding model file");
    return v;
  }
  void rebuild_lookup() {
    lookup_.clear();
    for (std::uint32_t i = 0; i < instance_ids_.size(); ++i)
      lookup_.emplace(instance_ids_[i], i);
  }

  std::size_t dim_ = 0;
  std::vector<std::string> instance_ids_;
  std::vector<std::string> doc_ids_;
  std::vector<double> instance_vecs_;
  std::vector<double> doc_vecs_;
  std::vector<double> kappas_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

inline EmbeddingModel init_model(const MotifInstanceIndex& index, const CorpusStore& corpus,
                                 const TrainConfig& config) {
  config.validate();
  if (index.instance_count() == 0) throw ValidationError("motif instance index is empty");
  std::vector<std::string> iids, dids;
  iids.reserve(index.instance_count());
  for (const auto& m : index.instances()) iids.push_back(m.instance_id);
  for (const auto& d : corpus.documents()) dids.push_back(d.doc_id);
  EmbeddingModel model(std::size_t(config.dim), std::move(iids), std::move(dids));
  std::mt19937_64 rng(config.seed);
  for (std::size_t i = 0; i < model.instance_count(); ++i)
    random_unit_vector(model.instance_vector(i), rng);
  for (std::size_t j = 0; j < model.doc_count(); ++j)
    random_unit_vector(model.doc_vector(j), rng);
  for (std::size_t i = 0; i < model.instance_count(); ++i)
    model.kappa(i) = config.initial_kappa;
  return model;
}

// ---------------------------------------------------------------------------
// Negative-sampling loss and its exact gradient.

struct NsGradient {
  std::vector<double> center;
  std::vector<double> positive;
  std::vector<std::vector<double>> negatives;
  double kappa = 0;
};

inline double ns_loss(std::span<const double> center, double kappa,
                      std::span<const double> positive,
                      std::span<const std::span<const double>> negatives) {
  double loss = -log_sigmoid(kappa * dot(center, positive));
  for (auto n : negatives) loss -= log_sigmoid(-kappa * dot(center, n));
  return loss;
}

// Partials of ns_loss, treating every argument as an independent variable.
inline void ns_gradient(std::span<const double> center, double kappa,
                        std::span<const double> positive,
                        std::span<const std::span<const double>> negatives,
                        NsGradient& g) {
  const std::size_t dim = center.size();
  g.center.assign(dim, 0.0);
  g.positive.resize(dim);
  g.negatives.resize(negatives.size());
  const double xp = dot(center, positive);
  const double cp = sigmoid(kappa * xp) - 1.0;
  g.kappa = cp * xp;
  for (std::size_t i = 0; i < dim; ++i) {
    g.center[i] += cp * kappa * positive[i];
    g.positive[i] = cp * kappa * center[i];
  }
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    const auto n = negatives[k];
    const double xn = dot(center, n);
    const double cn = sigmoid(kappa * xn);
    g.kappa += cn * xn;
    auto& gn = g.negatives[k];
    gn.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      g.center[i] += cn * kappa * n[i];
      gn[i] = cn * kappa * center[i];
    }
  }
}

inline NsGradient ns_gradient(std::span<const double> center, double kappa,
                              std::span<const double> positive,
                              std::span<const std::span<const double>> negatives) {
  NsGradient g;
  ns_gradient(center, kappa, positive, negatives, g);
  return g;
}

// ---------------------------------------------------------------------------
// SGD steps.

namespace detail {

struct PlainAccess {
  static double load(const double& x) { return x; }
  static void store(double& x, double v) { x = v; }
};

// Unsynchronized but race-free element access for parallel workers.
struct RelaxedAccess {
  static double load(const double& x) {
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  }
  static void store(double& x, double v) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  }
};

enum class Table : std::uint8_t { Instance, Doc };

// Scratch buffers reused across steps.
struct StepScratch {
  std::vector<double> center, positive;
  std::vector<std::vector<double>> negatives;
  std::vector<std::span<const double>> neg_views;
  NsGradient grad;
  struct Slot {
    Table table;
    std::uint32_t index;
    std::vector<double> g;
  };
  std::vector<Slot> slots;
  std::size_t used = 0;

  Slot& slot(Table t, std::uint32_t idx, std::size_t dim) {
    for (std::size_t s = 0; s < used; ++s)
      if (slots[s].table == t && slots[s].index == idx) return slots[s];
    if (used == slots.size()) slots.emplace_back();
    auto& s = slots[used++];
    s.table = t;
    s.index = idx;
    s.g.assign(dim, 0.0);
    return s;
  }
};

template <class Access>
void load_vec(std::span<const double> src, std::vector<double>& dst) {
  dst.resize(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = Access::load(src[i]);
}

// One step on (center instance m, positive target, negative targets) where
// targets live in `target_table`. Returns the loss before the update.
template <class Access, class Rng>
double ns_step(EmbeddingModel& model, std::uint32_t m, Table target_table,
               std::uint32_t positive, std::span<const std::uint32_t> negatives,
               double lr, bool learn_kappa, Rng& rng, StepScratch& s) {
  const std::size_t dim = model.dim();
  auto target = [&](std::uint32_t idx) -> std::span<double> {
    return target_table == Table::Doc ? model.doc_vector(idx) : model.instance_vector(idx);
  };
  load_vec<Access>(model.instance_vector(m), s.center);
  load_vec<Access>(target(positive), s.positive);
  s.negatives.resize(negatives.size());
  s.neg_views.resize(negatives.size());
  for (std::size_t k = 0; k < negatives.size(); ++k) {
    load_vec<Access>(target(negatives[k]), s.negatives[k]);
    s.neg_views[k] = s.negatives[k];
  }
  const double kappa = Access::load(model.kappa(m));

  const double loss = ns_loss(s.center, kappa, s.positive, s.neg_views);
  ns_gradient(s.center, kappa, s.positive, s.neg_views, s.grad);

  // Merge partials of aliased parameters (e.g. a context term equal to m).
  s.used = 0;
  auto add = [&](Table t, std::uint32_t idx, const std::vector<double>& g) {
    auto& slot = s.slot(t, idx, dim);
    for (std::size_t i = 0; i < dim; ++i) slot.g[i] += g[i];
  };
  add(Table::Instance, m, s.grad.center);
  add(target_table, positive, s.grad.positive);
  for (std::size_t k = 0; k < negatives.size(); ++k)
    add(target_table, negatives[k], s.grad.negatives[k]);

  std::vector<double>& buf = s.positive;  // reuse as update buffer
  for (std::size_t u = 0; u < s.used; ++u) {
    auto& slot = s.slots[u];
    auto v = slot.table == Table::Doc ? model.doc_vector(slot.index)
                                      : model.instance_vector(slot.index);
    load_vec<Access>(v, buf);
    for (std::size_t i = 0; i < dim; ++i) buf[i] -= lr * slot.g[i];
    project_to_sphere(std::span<double>(buf), rng);
    for (std::size_t i = 0; i < dim; ++i) Access::store(v[i], buf[i]);
  }
  if (learn_kappa)
    Access::store(model.kappa(m), clamp_kappa(kappa - lr * s.grad.kappa));
  return loss;
}

}  // namespace detail

// Descent step on the document objective for (m, d_pos) with fixed negatives.
// Returns the sampled loss before the update.
template <class Rng>
double sgd_step_doc(EmbeddingModel& model, std::uint32_t m, std::uint32_t d_pos,
                    std::span<const std::uint32_t> d_negs, double lr, Rng& rng,
                    bool learn_kappa = true) {
  detail::StepScratch s;
  return detail::ns_step<detail::PlainAccess>(model, m, detail::Table::Doc, d_pos, d_negs,
                                              lr, learn_kappa, rng, s);
}

// Descent step on the context objective for Term instance m and context term
// m_pos with fixed negative terms.
template <class Rng>
double sgd_step_ctxt(EmbeddingModel& model, std::uint32_t m, std::uint32_t m_pos,
                     std::span<const std::uint32_t> m_negs, double lr, Rng& rng,
                     bool learn_kappa = true) {
  detail::StepScratch s;
  return detail::ns_step<detail::PlainAccess>(model, m, detail::Table::Instance, m_pos,
                                              m_negs, lr, learn_kappa, rng, s);
}

// ---------------------------------------------------------------------------
// Positive pairs and negative distributions.

class TrainingPairs {
 public:
  TrainingPairs(const MotifInstanceIndex& index, const CorpusStore& corpus, int window)
      : window_(window) {
    // doc objective: every (instance, document) incidence
    std::vector<double> doc_w(index.doc_count());
    for (std::uint32_t d = 0; d < index.doc_count(); ++d) {
      auto row = index.by_doc(d);
      for (auto m : row) doc_pairs_.emplace_back(m, d);
      doc_w[d] = std::pow(double(row.size()), 0.75);
    }
    if (std::any_of(doc_w.begin(), doc_w.end(), [](double w) { return w > 0; }))
      doc_negatives_ = std::discrete_distribution<std::uint32_t>(doc_w.begin(), doc_w.end());

    // context objective: Term instance per token position
    std::vector<std::uint64_t> term_count(index.instance_count(), 0);
    for (std::size_t d = 0; d < corpus.size(); ++d) {
      doc_start_.push_back(token_term_.size());
      for (const auto& t : corpus.doc(d).terms) {
        auto m = index.find(term_instance_id(t));
        token_term_.push_back(m ? std::int32_t(*m) : -1);
        if (m) ++term_count[*m];
      }
    }
    doc_start_.push_back(token_term_.size());

    cumulative_.resize(token_term_.size());
    std::uint64_t total = 0;
    for (std::size_t d = 0; d + 1 < doc_start_.size(); ++d) {
      for (std::size_t p = doc_start_[d]; p < doc_start_[d + 1]; ++p) {
        if (token_term_[p] >= 0) total += valid_neighbors(d, p);
        cumulative_[p] = total;
      }
    }
    ctx_pairs_ = total;

    std::vector<double> term_w;
    for (std::uint32_t m = 0; m < index.instance_count(); ++m)
      if (index.instance(m).is_term() && term_count[m] > 0) {
        term_ids_.push_back(m);
        term_w.push_back(std::pow(double(term_count[m]), 0.75));
      }
    if (!term_w.empty())
      term_negatives_ = std::discrete_distribution<std::uint32_t>(term_w.begin(), term_w.end());
  }

  std::uint64_t doc_pair_count() const { return doc_pairs_.size(); }
  std::uint64_t context_pair_count() const { return ctx_pairs_; }
  std::pair<std::uint32_t, std::uint32_t> doc_pair(std::size_t i) const {
    return doc_pairs_[i];
  }

  // The r-th (center, context) pair in position order, r < context_pair_count().
  std::pair<std::uint32_t, std::uint32_t> context_pair(std::uint64_t r) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
    std::size_t p = std::size_t(it - cumulative_.begin());
    std::uint64_t before = p == 0 ? 0 : cumulative_[p - 1];
    std::uint64_t k = r - before;
    std::size_t d = std::size_t(
        std::upper_bound(doc_start_.begin(), doc_start_.end(), p) - doc_start_.begin() - 1);
    auto [lo, hi] = window_bounds(d, p);
    for (std::size_t q = lo; q < hi; ++q) {
      if (q == p || token_term_[q] < 0) continue;
      if (k-- == 0) return {std::uint32_t(token_term_[p]), std::uint32_t(token_term_[q])};
    }
    throw RuntimeFailure("context pair lookup out of range");
  }

  // Negative samplers: documents by #motif(d)^{3/4}, terms by count^{3/4}.
  // Each worker owns its copy.
  struct Negatives {
    std::discrete_distribution<std::uint32_t> docs;
    std::discrete_distribution<std::uint32_t> terms;
    const std::vector<std::uint32_t>* term_ids;

    template <class Rng>
    std::uint32_t doc(Rng& rng) {
      return docs(rng);
    }
    template <class Rng>
    std::uint32_t term(Rng& rng) {
      return (*term_ids)[terms(rng)];
    }
  };
  Negatives negatives() const { return {doc_negatives_, term_negatives_, &term_ids_}; }

 private:
  std::pair<std::size_t, std::size_t> window_bounds(std::size_t d, std::size_t p) const {
    std::size_t lo = p >= doc_start_[d] + std::size_t(window_) ? p - window_ : doc_start_[d];
    std::size_t hi = std::min(doc_start_[d + 1], p + std::size_t(window_) + 1);
    return {lo, hi};
  }
  std::uint64_t valid_neighbors(std::size_t d, std::size_t p) const {
    auto [lo, hi] = window_bounds(d, p);
    std::uint64_t n = 0;
    for (std::size_t q = lo; q < hi; ++q)
      if (q != p && token_term_[q] >= 0) ++n;
    return n;
  }

  int window_;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> doc_pairs_;
  std::discrete_distribution<std::uint32_t> doc_negatives_;
  std::vector<std::int32_t> token_term_;
  std::vector<std::size_t> doc_start_;
  std::vector<std::uint64_t> cumulative_;
  std::uint64_t ctx_pairs_ = 0;
  std::vector<std::uint32_t> term_ids_;
  std::discrete_distribution<std::uint32_t> term_negatives_;
};

struct TrainStats {
  std::uint64_t steps = 0;
  std::uint64_t doc_steps = 0;
  std::uint64_t context_steps = 0;
  double early_loss = 0;  // mean sampled loss, first 10% of steps
  double late_loss = 0;   // mean sampled loss, last 10% of steps
};

namespace detail {

template <class Access>
void run_worker(EmbeddingModel& model, const TrainingPairs& pairs, const TrainConfig& cfg,
                std::uint64_t begin, std::uint64_t end, std::uint64_t total,
                std::uint64_t seed, TrainStats& stats) {
  std::mt19937_64 rng(seed);
  const std::uint64_t nd = pairs.doc_pair_count(), nc = pairs.context_pair_count();
  const double p_doc = double(nd) / double(nd + nc);
  std::bernoulli_distribution choose_doc(p_doc);
  std::uniform_int_distribution<std::uint64_t> pick_doc(0, nd ? nd - 1 : 0);
  std::uniform_int_distribution<std::uint64_t> pick_ctx(0, nc ? nc - 1 : 0);
  StepScratch scratch;
  auto sampler = pairs.negatives();
  std::vector<std::uint32_t> negs;
  const std::uint64_t early_end = total / 10, late_begin = total - total / 10;
  double early = 0, late = 0;
  std::uint64_t n_early = 0, n_late = 0;

  for (std::uint64_t step = begin; step < end; ++step) {
    const double lr =
        cfg.learning_rate * (1.0 - 0.99 * double(step) / double(std::max<std::uint64_t>(total, 1)));
    double loss;
    negs.clear();
    if (choose_doc(rng)) {
      auto [m, d] = pairs.doc_pair(pick_doc(rng));
      for (int k = 0; k < cfg.negatives; ++k) {
        auto n = sampler.doc(rng);
        if (n != d) negs.push_back(n);
      }
      loss = ns_step<Access>(model, m, Table::Doc, d, negs, lr, cfg.learn_specificity, rng,
                             scratch);
      ++stats.doc_steps;
    } else {
      auto [m, c] = pairs.context_pair(pick_ctx(rng));
      for (int k = 0; k < cfg.negatives; ++k) {
        auto n = sampler.term(rng);
        if (n != c) negs.push_back(n);
      }
      loss = ns_step<Access>(model, m, Table::Instance, c, negs, lr, cfg.learn_specificity,
                             rng, scratch);
      ++stats.context_steps;
    }
    if (step < early_end) {
      early += loss;
      ++n_early;
    }
    if (step >= late_begin) {
      late += loss;
      ++n_late;
    }
  }
  stats.steps += end - begin;
  stats.early_loss = n_early ? early / double(n_early) : 0.0;
  stats.late_loss = n_late ? late / double(n_late) : 0.0;
}

}  // namespace detail

// Runs epochs x (doc pairs + context pairs) steps. Each step takes the doc
// branch with probability proportional to its pair count. The learning rate
// decays linearly from lr to lr/100.
inline EmbeddingModel train_joint(const MotifInstanceIndex& index, const CorpusStore& corpus,
                                  const TrainConfig& config, TrainStats* stats_out = nullptr) {
  auto model = init_model(index, corpus, config);
  TrainStats stats;
  if (config.epochs == 0) {
    if (stats_out) *stats_out = stats;
    return model;
  }
  TrainingPairs pairs(index, corpus, config.window);
  const std::uint64_t per_epoch = pairs.doc_pair_count() + pairs.context_pair_count();
  const std::uint64_t total = per_epoch * std::uint64_t(config.epochs);
  if (total == 0) {
    if (stats_out) *stats_out = stats;
    return model;
  }
  const std::uint64_t seed = sub_seed(config.seed, 0x747261696eULL);

  if (config.deterministic || config.workers == 1) {
    detail::run_worker<detail::PlainAccess>(model, pairs, config, 0, total, total, seed,
                                            stats);
  } else {
    // Hogwild-style: workers update shared rows without locks.
    const int w = config.workers;
    std::vector<TrainStats> per(w);
    std::vector<std::thread> threads;
    for (int t = 0; t < w; ++t) {
      std::uint64_t b = total * std::uint64_t(t) / std::uint64_t(w);
      std::uint64_t e = total * std::uint64_t(t + 1) / std::uint64_t(w);
      threads.emplace_back([&, t, b, e] {
        detail::run_worker<detail::RelaxedAccess>(model, pairs, config, b, e, total,
                                                  sub_seed(seed, std::uint64_t(t) + 1), per[t]);
      });
    }
    for (auto& th : threads) th.join();
    for (const auto& p : per) {
      stats.steps += p.steps;
      stats.doc_steps += p.doc_steps;
      stats.context_steps += p.context_steps;
    }
    stats.early_loss = per.front().early_loss;
    stats.late_loss = per.back().late_loss;
    // Interleaved element writes can leave rows slightly off the sphere.
    std::mt19937_64 fix(seed);
    for (std::size_t i = 0; i < model.instance_count(); ++i)
      project_to_sphere(model.instance_vector(i), fix);
    for (std::size_t j = 0; j < model.doc_count(); ++j)
      project_to_sphere(model.doc_vector(j), fix);
  }
  if (stats_out) *stats_out = stats;
  return model;
}

}  // namespace motifclass
