#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "motifclass/select.hpp"
#include "motifclass/synthetic.hpp"
#include "oracles.hpp"

using namespace motifclass;

namespace {

struct Fixture {
  CorpusStore corpus;
  MotifInstanceIndex index;
  EmbeddingModel model;
};

// Terms a, b, c, name in a 2-d model with chosen cosines and kappas.
Fixture handmade() {
  CorpusSchema schema;
  schema.min_freq = 1;
  CorpusStore corpus(schema, {Document{"d", {"name", "a", "b", "c"}, {}}});
  std::vector<MotifPattern> ps{MotifPattern({"Term"})};
  auto index = enumerate_instances(corpus, ps, 1);
  TrainConfig cfg;
  cfg.dim = 2;
  auto model = init_model(index, corpus, cfg);
  auto place = [&](const std::string& w, double cos, double kappa) {
    auto m = *model.find_instance("Term[" + w + "]");
    auto v = model.instance_vector(m);
    v[0] = cos;
    v[1] = std::sqrt(1 - cos * cos);
    model.kappa(m) = kappa;
  };
  place("name", 1.0, 1.0);
  place("a", 0.9, 3.0);
  place("b", 0.95, 1.5);
  place("c", 0.7, 2.5);
  return {std::move(corpus), std::move(index), std::move(model)};
}

std::vector<std::string> ids(const IndicativeSet& s) {
  std::vector<std::string> out;
  for (const auto& m : s.members) out.push_back(m.instance_id);
  return out;
}

}  // namespace

TEST_CASE("specificity filter excludes the closest but broader instance", "[select]") {
  auto f = handmade();
  CategorySpec cat{"L", "name"};
  SelectionConfig cfg;
  cfg.size = 3;
  auto set = select_indicative(f.model, f.index, cat, cfg);
  CHECK(ids(set) == std::vector<std::string>{"Term[name]", "Term[a]", "Term[c]"});
  CHECK(set.members[1].cosine == Catch::Approx(0.9));
  CHECK(set.members[1].kappa_ratio == Catch::Approx(3.0));
  CHECK_FALSE(set.shortfall);

  cfg.size = 1;
  CHECK(ids(select_indicative(f.model, f.index, cat, cfg)) ==
        std::vector<std::string>{"Term[name]"});

  cfg.specificity_filter = false;
  cfg.size = 3;
  CHECK(ids(select_indicative(f.model, f.index, cat, cfg)) ==
        std::vector<std::string>{"Term[name]", "Term[b]", "Term[a]"});
}

TEST_CASE("shortfall is a warning and a missing name is an error", "[select]") {
  auto f = handmade();
  SelectionConfig cfg;
  cfg.size = 10;
  log::ScopedCapture capture;
  auto set = select_indicative(f.model, f.index, CategorySpec{"L", "name"}, cfg);
  CHECK(set.members.size() == 3);
  CHECK(set.shortfall);
  CHECK(capture.warnings.size() == 1);
  CHECK_THROWS_AS(select_indicative(f.model, f.index, CategorySpec{"L", "absent"}, cfg),
                  ValidationError);
  cfg.eta = 1.0;
  CHECK_THROWS_AS(select_indicative(f.model, f.index, CategorySpec{"L", "name"}, cfg),
                  ValidationError);
}

TEST_CASE("rank_candidates matches the filter-then-sort oracle", "[select][oracle]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const double kref = std::uniform_real_distribution<double>(0.1, 3.0)(rng);
    const double eta = std::uniform_real_distribution<double>(1.01, 4.0)(rng);
    const std::size_t n = rng() % 40;
    std::vector<Candidate> cands;
    std::vector<oracle::Cand> ocands;
    for (std::size_t i = 0; i < n; ++i) {
      double cos = double(int(rng() % 11) - 5) / 5.0;  // coarse grid forces ties
      double kappa;
      switch (rng() % 3) {
        case 0: kappa = eta * kref; break;  // exactly on the boundary
        case 1: kappa = kref * std::uniform_real_distribution<double>(0, eta)(rng); break;
        default: kappa = kref * std::uniform_real_distribution<double>(eta, 2 * eta)(rng);
      }
      std::string id = "m" + std::to_string(rng() % 1000) + "_" + std::to_string(i);
      cands.push_back({id, cos, kappa});
      ocands.push_back({id, cos, kappa});
    }
    const std::size_t take = rng() % 20;
    auto got = rank_candidates(cands, kref, eta, take);
    std::vector<std::string> got_ids;
    for (auto i : got) got_ids.push_back(cands[i].instance_id);
    REQUIRE(got_ids == oracle::select(ocands, kref, eta, take));
  }
}

TEST_CASE("selection ignores kappa scale and global rotations", "[select][property]") {
  auto lc = synthetic::two_clusters(9);
  auto corpus = lc.store();
  auto index = enumerate_instances(corpus, corpus.schema().candidate_patterns, 2);
  TrainConfig tc;
  tc.dim = 8;
  tc.epochs = 3;
  auto model = train_joint(index, corpus, tc);
  // least specific term as the name so that the filter admits several
  std::uint32_t low = 0;
  for (std::uint32_t m = 0; m < model.instance_count(); ++m)
    if (index.instance(m).is_term() && model.kappa(m) < model.kappa(low)) low = m;
  CategorySpec cat{"a", index.instance(low).bindings[0].second};
  SelectionConfig cfg;
  cfg.size = 10;
  cfg.eta = 1.05;
  const auto base = ids(select_indicative(model, index, cat, cfg));
  REQUIRE(base.size() > 3);

  auto scaled = model;
  for (std::size_t i = 0; i < scaled.instance_count(); ++i) scaled.kappa(i) *= 3.7;
  CHECK(ids(select_indicative(scaled, index, cat, cfg)) == base);

  // random orthogonal matrix from Gram-Schmidt on Gaussian columns
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  const std::size_t d = model.dim();
  std::vector<std::vector<double>> q(d, std::vector<double>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (auto& x : q[i]) x = g(rng);
    for (std::size_t j = 0; j < i; ++j) {
      double p = dot(q[i], q[j]);
      for (std::size_t k = 0; k < d; ++k) q[i][k] -= p * q[j][k];
    }
    double n = norm(q[i]);
    for (auto& x : q[i]) x /= n;
  }
  auto rotated = model;
  for (std::size_t m = 0; m < rotated.instance_count(); ++m) {
    auto src = model.instance_vector(m);
    auto dst = rotated.instance_vector(m);
    for (std::size_t i = 0; i < d; ++i) dst[i] = dot(q[i], src);
  }
  CHECK(ids(select_indicative(rotated, index, cat, cfg)) == base);
}

TEST_CASE("specificity buckets are left-closed", "[select]") {
  std::vector<double> edges{1, 2, 3, 4};
  CHECK(bucket_of(0.5, edges) == 0);
  CHECK(bucket_of(1.0, edges) == 1);
  CHECK(bucket_of(2.0, edges) == 2);
  CHECK(bucket_of(3.999, edges) == 3);
  CHECK(bucket_of(4.0, edges) == 4);
  CHECK(bucket_of(1e9, edges) == 4);

  auto f = handmade();
  // add a broad instance: kappa 0.5 relative to the name
  f.model.kappa(*f.model.find_instance("Term[b]")) = 0.5;
  f.model.kappa(*f.model.find_instance("Term[c]")) = 2.0;
  auto rep = specificity_buckets(f.model, f.index, CategorySpec{"L", "name"});
  REQUIRE(rep.buckets.size() == 5);
  CHECK_FALSE(rep.buckets[0].selected);
  CHECK_FALSE(rep.buckets[1].selected);
  CHECK(rep.buckets[2].selected);
  REQUIRE(rep.buckets[0].top.size() == 1);
  CHECK(rep.buckets[0].top[0].instance_id == "Term[b]");
  REQUIRE(rep.buckets[2].top.size() == 1);
  CHECK(rep.buckets[2].top[0].instance_id == "Term[c]");
  CHECK(rep.buckets[3].top[0].instance_id == "Term[a]");

  std::ostringstream md;
  std::vector<BucketReport> reps{rep};
  write_buckets_markdown(reps, md);
  CHECK(md.str().find("| [0, 1) | Not Selected | 1 | Term[b] |") != std::string::npos);
  CHECK(md.str().find("| [4, inf) | Selected | 0 |  |") != std::string::npos);
}

TEST_CASE("bucket assignment equals a hand partition", "[select][oracle]") {
  std::mt19937_64 rng(4);
  std::vector<double> edges{1, 2, 3, 4};
  for (int i = 0; i < 2000; ++i) {
    double r = std::uniform_real_distribution<double>(0, 6)(rng);
    if (i % 7 == 0) r = double(rng() % 6);
    std::size_t expected = r < 1 ? 0 : r < 2 ? 1 : r < 3 ? 2 : r < 4 ? 3 : 4;
    REQUIRE(bucket_of(r, edges) == expected);
  }
}

TEST_CASE("selections TSV round trip", "[select]") {
  auto f = handmade();
  SelectionConfig cfg;
  cfg.size = 3;
  std::vector<IndicativeSet> sets{select_indicative(f.model, f.index, {"L", "name"}, cfg)};
  std::stringstream buf;
  write_selections_tsv(sets, buf);
  CHECK(buf.str().starts_with("label\trank\tinstance_id\tcosine\tkappa_ratio\nL\t1\tTerm[name]\t"));
  auto back = read_selections_tsv(buf, f.index);
  REQUIRE(back.size() == 1);
  CHECK(ids(back[0]) == ids(sets[0]));
  CHECK(back[0].members[2].cosine == sets[0].members[2].cosine);
  CHECK(back[0].members[2].instance == sets[0].members[2].instance);
}
