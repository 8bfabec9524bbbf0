#pragma once

// Convolutional sentence classifier (embedding -> parallel 1-D convolutions
// with ReLU and max-over-time pooling -> linear softmax), trained with
// mini-batch SGD and a hand-written backward pass.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstring>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "motifclass/core.hpp"
#include "motifclass/embedding.hpp"
#include "motifclass/pseudo.hpp"
#include "motifclass/sequence.hpp"

namespace motifclass {

struct ClassifierConfig {
  std::vector<int> widths{2, 3, 4, 5};
  int maps = 20;
  int max_length = int(kDefaultMaxSequence);
  int batch_size = 256;
  int epochs = 40;
  double learning_rate = 0.1;
  bool train_embeddings = true;
  std::uint64_t seed = 1;
  int workers = 1;

  void validate() const {
    if (widths.empty()) throw ValidationError("classifier needs at least one filter width");
    for (int w : widths)
      if (w < 1 || w > max_length)
        throw ValidationError("filter width " + std::to_string(w) + " outside [1, max_length]");
    if (maps < 1) throw ValidationError("feature maps must be >= 1");
    if (batch_size < 1) throw ValidationError("batch size must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (!(learning_rate > 0)) throw ValidationError("learning rate must be > 0");
    if (workers < 1) throw ValidationError("workers must be >= 1");
  }
};

struct Example {
  std::vector<std::uint32_t> ids;
  std::uint32_t label = 0;
};

template <std::floating_point Real>
class KimCnn {
 public:
  static constexpr std::uint32_t kPad = 0;
  static constexpr std::uint32_t kUnk = 1;

  struct Conv {
    int width = 0;
    std::vector<Real> weight;  // maps x width x dim
    std::vector<Real> bias;    // maps
  };

  // Gradient buffers; embedding rows are tracked sparsely.
  struct Gradient {
    std::vector<Real> emb;
    std::vector<std::uint32_t> touched;
    std::vector<char> is_touched;
    std::vector<Conv> convs;
    std::vector<Real> head_weight, head_bias;

    void reset(const KimCnn& net) {
      const std::size_t dim = net.dim_;
      if (emb.size() != net.emb.size()) {
        emb.assign(net.emb.size(), 0);
        is_touched.assign(net.vocab_size(), 0);
        touched.clear();
      }
      for (auto r : touched) {
        std::fill_n(emb.begin() + std::ptrdiff_t(r * dim), dim, Real(0));
        is_touched[r] = 0;
      }
      touched.clear();
      convs = net.convs;
      for (auto& c : convs) {
        std::fill(c.weight.begin(), c.weight.end(), Real(0));
        std::fill(c.bias.begin(), c.bias.end(), Real(0));
      }
      head_weight.assign(net.head_weight.size(), 0);
      head_bias.assign(net.head_bias.size(), 0);
    }
    Real* row(std::uint32_t r, std::size_t dim) {
      if (!is_touched[r]) {
        is_touched[r] = 1;
        touched.push_back(r);
      }
      return emb.data() + r * dim;
    }
    void add(const Gradient& o, std::size_t dim) {
      for (auto r : o.touched) {
        Real* dst = row(r, dim);
        const Real* src = o.emb.data() + r * dim;
        for (std::size_t i = 0; i < dim; ++i) dst[i] += src[i];
      }
      for (std::size_t c = 0; c < convs.size(); ++c) {
        for (std::size_t i = 0; i < convs[c].weight.size(); ++i)
          convs[c].weight[i] += o.convs[c].weight[i];
        for (std::size_t i = 0; i < convs[c].bias.size(); ++i) convs[c].bias[i] += o.convs[c].bias[i];
      }
      for (std::size_t i = 0; i < head_weight.size(); ++i) head_weight[i] += o.head_weight[i];
      for (std::size_t i = 0; i < head_bias.size(); ++i) head_bias[i] += o.head_bias[i];
    }
  };

  KimCnn() = default;

  // tokens: vocabulary rows after PAD and UNK; vectors: tokens.size() x dim.
  KimCnn(const ClassifierConfig& config, std::vector<std::string> labels,
         std::vector<std::string> tokens, std::span<const double> vectors, std::size_t dim)
      : config_(config), labels_(std::move(labels)), dim_(dim) {
    config_.validate();
    if (labels_.size() < 2) throw ValidationError("classifier needs at least two categories");
    if (dim_ < 1) throw ValidationError("embedding dim must be >= 1");
    if (vectors.size() != tokens.size() * dim_)
      throw ValidationError("embedding table size mismatch");
    tokens_.push_back("<pad>");
    tokens_.push_back("<unk>");
    for (auto& t : tokens) tokens_.push_back(std::move(t));
    rebuild_lookup();
    emb.assign(tokens_.size() * dim_, Real(0));
    for (std::size_t i = 0; i < vectors.size(); ++i) emb[2 * dim_ + i] = Real(vectors[i]);

    std::mt19937_64 rng(sub_seed(config_.seed, 0x636e6e));
    for (int w : config_.widths) {
      Conv c;
      c.width = w;
      c.weight.resize(std::size_t(config_.maps) * std::size_t(w) * dim_);
      c.bias.assign(std::size_t(config_.maps), Real(0));
      const double a = std::sqrt(6.0 / double(std::size_t(w) * dim_ + std::size_t(config_.maps)));
      std::uniform_real_distribution<double> u(-a, a);
      for (auto& x : c.weight) x = Real(u(rng));
      convs.push_back(std::move(c));
    }
    // zero head: the untrained network predicts the uniform distribution
    head_weight.assign(labels_.size() * features(), Real(0));
    head_bias.assign(labels_.size(), Real(0));
  }

  static KimCnn from_embeddings(const EmbeddingModel& model, std::vector<std::string> labels,
                                const ClassifierConfig& config) {
    std::vector<std::string> tokens;
    std::vector<double> vecs;
    vecs.reserve(model.instance_count() * model.dim());
    for (std::size_t i = 0; i < model.instance_count(); ++i) {
      tokens.push_back(model.instance_id(i));
      auto v = model.instance_vector(i);
      vecs.insert(vecs.end(), v.begin(), v.end());
    }
    return KimCnn(config, std::move(labels), std::move(tokens), vecs, model.dim());
  }

  const ClassifierConfig& config() const { return config_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t dim() const { return dim_; }
  std::size_t vocab_size() const { return tokens_.size(); }
  std::size_t features() const { return convs.size() * std::size_t(config_.maps); }
  std::size_t max_width() const {
    std::size_t m = 1;
    for (const auto& c : convs) m = std::max(m, std::size_t(c.width));
    return m;
  }

  std::uint32_t token_row(const std::string& t) const {
    auto it = lookup_.find(t);
    return it == lookup_.end() ? kUnk : it->second;
  }

  // Truncates to max_length and right-pads to the widest filter.
  std::vector<std::uint32_t> encode(std::span<const std::string> tokens) const {
    std::vector<std::uint32_t> ids;
    const std::size_t n = std::min(tokens.size(), std::size_t(config_.max_length));
    for (std::size_t i = 0; i < n; ++i) ids.push_back(token_row(tokens[i]));
    while (ids.size() < max_width()) ids.push_back(kPad);
    return ids;
  }

  // Pooled features h (|widths| * maps) and, optionally, argmax positions.
  void pooled(std::span<const std::uint32_t> ids, std::vector<Real>& h,
              std::vector<int>* arg = nullptr) const {
    const std::size_t M = std::size_t(config_.maps);
    h.assign(features(), Real(0));
    if (arg) arg->assign(features(), -1);
    for (std::size_t c = 0; c < convs.size(); ++c) {
      const auto& cv = convs[c];
      const std::size_t w = std::size_t(cv.width);
      const std::size_t npos = ids.size() >= w ? ids.size() - w + 1 : 0;
      for (std::size_t k = 0; k < M; ++k) {
        Real best = -std::numeric_limits<Real>::infinity();
        int bp = -1;
        const Real* W = cv.weight.data() + k * w * dim_;
        for (std::size_t p = 0; p < npos; ++p) {
          Real z = cv.bias[k];
          for (std::size_t j = 0; j < w; ++j) {
            const Real* e = emb.data() + std::size_t(ids[p + j]) * dim_;
            const Real* wj = W + j * dim_;
            for (std::size_t i = 0; i < dim_; ++i) z += wj[i] * e[i];
          }
          if (z > best) {
            best = z;
            bp = int(p);
          }
        }
        // relu(max z) == max relu(z)
        h[c * M + k] = best > 0 ? best : Real(0);
        if (arg) (*arg)[c * M + k] = best > 0 ? bp : -1;
      }
    }
  }

  std::vector<Real> logits(std::span<const Real> h) const {
    const std::size_t F = features();
    std::vector<Real> out(labels_.size());
    for (std::size_t l = 0; l < labels_.size(); ++l) {
      Real s = head_bias[l];
      const Real* u = head_weight.data() + l * F;
      for (std::size_t f = 0; f < F; ++f) s += u[f] * h[f];
      out[l] = s;
    }
    return out;
  }

  static void softmax_inplace(std::vector<Real>& x) {
    Real mx = *std::max_element(x.begin(), x.end());
    Real z = 0;
    for (auto& v : x) z += (v = std::exp(v - mx));
    for (auto& v : x) v /= z;
  }

  std::vector<Real> probabilities(std::span<const std::uint32_t> ids) const {
    std::vector<Real> h;
    pooled(ids, h);
    auto p = logits(h);
    softmax_inplace(p);
    return p;
  }

  // Adds the gradient of -log p(label) to g; returns that loss.
  Real accumulate(const Example& ex, Gradient& g) const {
    std::vector<Real> h;
    std::vector<int> arg;
    pooled(ex.ids, h, &arg);
    auto p = logits(h);
    // log-softmax for the loss, probabilities for the gradient
    Real mx = *std::max_element(p.begin(), p.end());
    Real z = 0;
    for (auto v : p) z += std::exp(v - mx);
    const Real loss = -(p[ex.label] - mx - std::log(z));
    softmax_inplace(p);
    p[ex.label] -= Real(1);  // dL/dlogits

    const std::size_t F = features(), M = std::size_t(config_.maps);
    std::vector<Real> dh(F, Real(0));
    for (std::size_t l = 0; l < labels_.size(); ++l) {
      g.head_bias[l] += p[l];
      const Real* u = head_weight.data() + l * F;
      Real* gu = g.head_weight.data() + l * F;
      for (std::size_t f = 0; f < F; ++f) {
        gu[f] += p[l] * h[f];
        dh[f] += p[l] * u[f];
      }
    }
    for (std::size_t c = 0; c < convs.size(); ++c) {
      const auto& cv = convs[c];
      auto& gc = g.convs[c];
      const std::size_t w = std::size_t(cv.width);
      for (std::size_t k = 0; k < M; ++k) {
        const int pos = arg[c * M + k];
        if (pos < 0) continue;
        const Real dz = dh[c * M + k];
        gc.bias[k] += dz;
        for (std::size_t j = 0; j < w; ++j) {
          const std::uint32_t r = ex.ids[std::size_t(pos) + j];
          const Real* e = emb.data() + std::size_t(r) * dim_;
          const Real* wj = cv.weight.data() + (k * w + j) * dim_;
          Real* gw = gc.weight.data() + (k * w + j) * dim_;
          for (std::size_t i = 0; i < dim_; ++i) gw[i] += dz * e[i];
          if (r != kPad) {
            Real* ge = g.row(r, dim_);
            for (std::size_t i = 0; i < dim_; ++i) ge[i] += dz * wj[i];
          }
        }
      }
    }
    return loss;
  }

  // Mean loss and mean gradient over a batch. The batch is cut into a fixed
  // number of chunks summed in order, so the result does not depend on the
  // worker count.
  Real batch_gradient(std::span<const Example> batch, Gradient& g, int workers = 1) const {
    constexpr std::size_t kChunks = 8;
    const std::size_t chunks = std::min(kChunks, std::max<std::size_t>(batch.size(), 1));
    std::vector<Gradient> parts(chunks);
    std::vector<Real> losses(chunks, Real(0));
    auto run = [&](std::size_t c) {
      parts[c].reset(*this);
      const std::size_t b = batch.size() * c / chunks, e = batch.size() * (c + 1) / chunks;
      for (std::size_t i = b; i < e; ++i) losses[c] += accumulate(batch[i], parts[c]);
    };
    if (workers <= 1) {
      for (std::size_t c = 0; c < chunks; ++c) run(c);
    } else {
      std::vector<std::thread> threads;
      for (int t = 0; t < workers; ++t)
        threads.emplace_back([&, t] {
          for (std::size_t c = std::size_t(t); c < chunks; c += std::size_t(workers)) run(c);
        });
      for (auto& th : threads) th.join();
    }
    g.reset(*this);
    Real loss = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
      g.add(parts[c], dim_);
      loss += losses[c];
    }
    const Real inv = Real(1) / Real(std::max<std::size_t>(batch.size(), 1));
    for (auto r : g.touched)
      for (std::size_t i = 0; i < dim_; ++i) g.emb[r * dim_ + i] *= inv;
    for (auto& c : g.convs) {
      for (auto& x : c.weight) x *= inv;
      for (auto& x : c.bias) x *= inv;
    }
    for (auto& x : g.head_weight) x *= inv;
    for (auto& x : g.head_bias) x *= inv;
    return loss * inv;
  }

  void apply(const Gradient& g, Real lr, bool train_embeddings) {
    if (train_embeddings)
      for (auto r : g.touched) {
        if (r == kPad) continue;
        for (std::size_t i = 0; i < dim_; ++i) emb[r * dim_ + i] -= lr * g.emb[r * dim_ + i];
      }
    for (std::size_t c = 0; c < convs.size(); ++c) {
      for (std::size_t i = 0; i < convs[c].weight.size(); ++i)
        convs[c].weight[i] -= lr * g.convs[c].weight[i];
      for (std::size_t i = 0; i < convs[c].bias.size(); ++i)
        convs[c].bias[i] -= lr * g.convs[c].bias[i];
    }
    for (std::size_t i = 0; i < head_weight.size(); ++i) head_weight[i] -= lr * g.head_weight[i];
    for (std::size_t i = 0; i < head_bias.size(); ++i) head_bias[i] -= lr * g.head_bias[i];
  }

  bool operator==(const KimCnn& o) const {
    auto same_convs = [&] {
      if (convs.size() != o.convs.size()) return false;
      for (std::size_t c = 0; c < convs.size(); ++c)
        if (convs[c].width != o.convs[c].width || convs[c].weight != o.convs[c].weight ||
            convs[c].bias != o.convs[c].bias)
          return false;
      return true;
    };
    return labels_ == o.labels_ && tokens_ == o.tokens_ && dim_ == o.dim_ && emb == o.emb &&
           same_convs() && head_weight == o.head_weight && head_bias == o.head_bias;
  }

  // Layout: "MCCNN001" | u32 dim, maps, max_length, n_widths, widths...
  //         | u32 n_labels, labels | u64 n_tokens, tokens | tensors as f64.
  // Strings are u32 length + bytes.
  void write_binary(std::ostream& out) const {
    out.write("MCCNN001", 8);
    put<std::uint32_t>(out, std::uint32_t(dim_));
    put<std::uint32_t>(out, std::uint32_t(config_.maps));
    put<std::uint32_t>(out, std::uint32_t(config_.max_length));
    put<std::uint32_t>(out, std::uint32_t(convs.size()));
    for (const auto& c : convs) put<std::uint32_t>(out, std::uint32_t(c.width));
    put<std::uint32_t>(out, std::uint32_t(labels_.size()));
    for (const auto& l : labels_) put_string(out, l);
    put<std::uint64_t>(out, tokens_.size());
    for (const auto& t : tokens_) put_string(out, t);
    put_tensor(out, emb);
    for (const auto& c : convs) {
      put_tensor(out, c.weight);
      put_tensor(out, c.bias);
    }
    put_tensor(out, head_weight);
    put_tensor(out, head_bias);
  }

  static KimCnn read_binary(std::istream& in) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "MCCNN001", 8) != 0)
      throw ValidationError("not a classifier checkpoint");
    KimCnn net;
    net.dim_ = get<std::uint32_t>(in);
    net.config_.maps = int(get<std::uint32_t>(in));
    net.config_.max_length = int(get<std::uint32_t>(in));
    const auto nw = get<std::uint32_t>(in);
    net.config_.widths.clear();
    for (std::uint32_t i = 0; i < nw; ++i) net.config_.widths.push_back(int(get<std::uint32_t>(in)));
    const auto nl = get<std::uint32_t>(in);
    for (std::uint32_t i = 0; i < nl; ++i) net.labels_.push_back(get_string(in));
    const auto nt = get<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < nt; ++i) net.tokens_.push_back(get_string(in));
    net.rebuild_lookup();
    const std::size_t M = std::size_t(net.config_.maps);
    net.emb = get_tensor(in, net.tokens_.size() * net.dim_);
    for (int w : net.config_.widths) {
      Conv c;
      c.width = w;
      c.weight = get_tensor(in, M * std::size_t(w) * net.dim_);
      c.bias = get_tensor(in, M);
      net.convs.push_back(std::move(c));
    }
    net.head_weight = get_tensor(in, nl * net.features());
    net.head_bias = get_tensor(in, nl);
    return net;
  }

  // Parameters are public so that tests can probe them directly.
  std::vector<Real> emb;  // vocab x dim; row 0 is padding, row 1 unknown
  std::vector<Conv> convs;
  std::vector<Real> head_weight;  // labels x features
  std::vector<Real> head_bias;

 private:
  void rebuild_lookup() {
    lookup_.clear();
    for (std::uint32_t i = 2; i < tokens_.size(); ++i) lookup_.emplace(tokens_[i], i);
  }
  template <class T>
  static void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  template <class T>
  static T get(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!in) throw ValidationError("truncated classifier checkpoint");
    return v;
  }
  static void put_string(std::ostream& out, const std::string& s) {
    put<std::uint32_t>(out, std::uint32_t(s.size()));
    out.write(s.data(), std::streamsize(s.size()));
  }
  static std::string get_string(std::istream& in) {
    std::string s(get<std::uint32_t>(in), '\0');
    in.read(s.data(), std::streamsize(s.size()));
    if (!in) throw ValidationError("truncated classifier checkpoint");
    return s;
  }
  static void put_tensor(std::ostream& out, const std::vector<Real>& t) {
    for (Real x : t) put<double>(out, double(x));
  }
  static std::vector<Real> get_tensor(std::istream& in, std::size_t n) {
    std::vector<Real> t(n);
    for (auto& x : t) x = Real(get<double>(in));
    return t;
  }

  ClassifierConfig config_;
  std::vector<std::string> labels_;
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
  std::size_t dim_ = 0;
};

struct TrainHistory {
  std::vector<double> epoch_loss;
  std::vector<double> learning_rate;
  double first_batch_loss = 0;
};

// Mini-batch SGD on mean negative log-likelihood. The learning rate is halved
// whenever an epoch fails to lower the best epoch loss.
template <std::floating_point Real>
void train(KimCnn<Real>& net, std::span<const Example> data, TrainHistory* history = nullptr) {
  const auto& cfg = net.config();
  if (data.empty()) throw ValidationError("no training examples");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(sub_seed(cfg.seed, 0x7368756666));
  typename KimCnn<Real>::Gradient g;
  std::vector<Example> batch;
  double lr = cfg.learning_rate;
  double best = std::numeric_limits<double>::infinity();
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0;
    for (std::size_t b = 0; b < order.size(); b += std::size_t(cfg.batch_size)) {
      batch.clear();
      for (std::size_t i = b; i < std::min(order.size(), b + std::size_t(cfg.batch_size)); ++i)
        batch.push_back(data[order[i]]);
      const double loss = double(net.batch_gradient(batch, g, cfg.workers));
      if (!std::isfinite(loss))
        throw RuntimeFailure("classifier loss is not finite at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(b / std::size_t(cfg.batch_size)) +
                             " (learning rate " + std::to_string(lr) + ")");
      if (history && epoch == 0 && b == 0) history->first_batch_loss = loss;
      total += loss * double(batch.size());
      net.apply(g, Real(lr), cfg.train_embeddings);
    }
    const double mean = total / double(order.size());
    if (history) {
      history->epoch_loss.push_back(mean);
      history->learning_rate.push_back(lr);
    }
    if (mean < best - 1e-4)
      best = mean;
    else
      lr *= 0.5;
  }
}

inline std::vector<Example> to_examples(const KimCnn<float>& net, const PseudoLabeledSet& set) {
  std::map<std::string, std::uint32_t> label_row;
  for (std::uint32_t l = 0; l < net.labels().size(); ++l) label_row[net.labels()[l]] = l;
  std::vector<std::size_t> per(net.labels().size(), 0);
  std::vector<Example> out;
  for (const auto& d : set.docs) {
    auto it = label_row.find(d.label_id);
    if (it == label_row.end()) throw ValidationError("pseudo label not a category: " + d.label_id);
    out.push_back({net.encode(d.tokens), it->second});
    ++per[it->second];
  }
  for (std::size_t l = 0; l < per.size(); ++l)
    if (per[l] == 0)
      throw RuntimeFailure("category '" + net.labels()[l] + "' is absent from the pseudo data");
  return out;
}

inline KimCnn<float> train_classifier(const PseudoLabeledSet& set, const EmbeddingModel& model,
                                      const ClassifierConfig& config,
                                      TrainHistory* history = nullptr) {
  auto net = KimCnn<float>::from_embeddings(model, set.labels, config);
  auto data = to_examples(net, set);
  train(net, std::span<const Example>(data), history);
  return net;
}

struct Prediction {
  std::string doc_id;
  std::size_t label = 0;
  std::vector<float> probabilities;
};

inline std::vector<Prediction> predict_all(const KimCnn<float>& net, const CorpusStore& corpus) {
  std::vector<Prediction> out;
  out.reserve(corpus.size());
  for (const auto& d : corpus.documents()) {
    auto tokens = build_input_sequence(d, corpus.schema(), std::size_t(net.config().max_length));
    auto p = net.probabilities(net.encode(tokens));
    auto best = std::size_t(std::max_element(p.begin(), p.end()) - p.begin());
    out.push_back({d.doc_id, best, std::move(p)});
  }
  return out;
}

inline void write_predictions_tsv(const KimCnn<float>& net, std::span<const Prediction> preds,
                                  std::ostream& out) {
  out << "doc_id\tlabel\tprobability\n";
  char buf[32];
  for (const auto& p : preds) {
    std::snprintf(buf, sizeof buf, "%.6f", double(p.probabilities[p.label]));
    out << p.doc_id << '\t' << net.labels()[p.label] << '\t' << buf << '\n';
  }
}

}  // namespace motifclass
