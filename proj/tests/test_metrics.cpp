#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "motifclass/metrics.hpp"

using namespace motifclass;

namespace {

const std::vector<std::string> kABC{"a", "b", "c"};

// Independent F1 from a confusion matrix: trace / N and the mean of
// 2 C_ll / (row_l + col_l).
std::pair<double, double> oracle_f1(const std::vector<std::vector<std::size_t>>& c) {
  const std::size_t L = c.size();
  double trace = 0, n = 0, macro = 0;
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < L; ++j) {
      n += double(c[i][j]);
      if (i == j) trace += double(c[i][j]);
    }
  for (std::size_t l = 0; l < L; ++l) {
    double row = 0, col = 0;
    for (std::size_t k = 0; k < L; ++k) {
      row += double(c[l][k]);
      col += double(c[k][l]);
    }
    macro += row + col > 0 ? 2.0 * double(c[l][l]) / (row + col) : 0.0;
  }
  return {trace / n, macro / double(L)};
}

IndicativeSet with_patterns(const std::string& label, const std::vector<std::string>& patterns) {
  IndicativeSet s{label, {}, false};
  for (std::size_t i = 0; i < patterns.size(); ++i)
    s.members.push_back({std::uint32_t(i), "m" + std::to_string(i), patterns[i], 0.0, 1.0});
  return s;
}

}  // namespace

TEST_CASE("F1 worked examples", "[eval]") {
  std::vector<std::string> all{"a", "b", "c", "a"};
  auto [mi, ma] = micro_macro_f1(all, all, kABC);
  CHECK(mi == 1.0);
  CHECK(ma == 1.0);

  std::vector<std::string> golds{"a", "a", "b", "c"}, preds{"a", "b", "b", "c"};
  auto [micro, macro] = micro_macro_f1(preds, golds, kABC);
  CHECK(micro == Catch::Approx(0.75).margin(1e-12));
  CHECK(macro == Catch::Approx(7.0 / 9.0).margin(1e-12));

  std::vector<std::size_t> p{0, 1, 1, 2}, g{0, 0, 1, 2};
  auto r = f1_report(p, g, kABC);
  CHECK(r.per_class[0].f1 == Catch::Approx(2.0 / 3.0));
  CHECK(r.per_class[0].precision == 1.0);
  CHECK(r.per_class[0].recall == 0.5);
  CHECK(r.confusion[0][1] == 1);

  std::vector<std::string> none;
  CHECK_THROWS_AS(micro_macro_f1(none, none, kABC), ValidationError);
  std::vector<std::string> bad{"z"};
  CHECK_THROWS_AS(micro_macro_f1(bad, bad, kABC), ValidationError);
}

TEST_CASE("absent classes count as zero in macro F1", "[eval]") {
  std::vector<std::size_t> p{0, 0, 1}, g{0, 0, 1};
  auto r = f1_report(p, g, kABC);
  CHECK(r.micro == 1.0);
  CHECK(r.macro == Catch::Approx(2.0 / 3.0).margin(1e-12));
}

TEST_CASE("F1 matches the confusion-matrix oracle", "[eval][oracle]") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t L = 2 + rng() % 5;
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::string> labels;
    for (std::size_t l = 0; l < L; ++l) labels.push_back("c" + std::to_string(l));
    std::vector<std::size_t> p(n), g(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = rng() % L;
      p[i] = rng() % 3 ? g[i] : rng() % L;
    }
    auto r = f1_report(p, g, labels);
    auto [mi, ma] = oracle_f1(r.confusion);
    CHECK(std::abs(r.micro - mi) <= 1e-12);
    CHECK(std::abs(r.macro - ma) <= 1e-12);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += p[i] == g[i];
    CHECK(std::abs(r.micro - double(hits) / double(n)) <= 1e-12);  // micro is accuracy
    CHECK(r.macro <= 1.0);
  }
}

TEST_CASE("balanced symmetric errors give equal micro and macro", "[eval][property]") {
  // each class: 8 right, one sent to each other class
  std::vector<std::size_t> p, g;
  for (std::size_t l = 0; l < 3; ++l) {
    for (int k = 0; k < 8; ++k) {
      p.push_back(l);
      g.push_back(l);
    }
    for (std::size_t o = 0; o < 3; ++o)
      if (o != l) {
        p.push_back(o);
        g.push_back(l);
      }
  }
  auto r = f1_report(p, g, kABC);
  CHECK(r.macro == Catch::Approx(r.micro).margin(1e-12));
}

TEST_CASE("pseudo accuracy", "[eval]") {
  // 1000 retrieved documents for one category, 800 of them correct
  std::vector<std::optional<std::string>> golds(1000);
  for (std::size_t i = 0; i < 1000; ++i) golds[i] = i % 5 == 4 ? "b" : "a";
  std::vector<std::vector<std::size_t>> ranked(2);
  for (std::size_t i = 0; i < 1000; ++i) ranked[0].push_back(i);
  std::vector<std::string> labels{"a", "b"};
  auto acc = pseudo_accuracy(ranked, labels, golds, 1000);
  REQUIRE(acc.overall);
  CHECK(*acc.overall == 0.80);
  CHECK(acc.total == 1000);
  REQUIRE(acc.curve.size() == 4);
  CHECK(std::get<0>(acc.curve[0]) == 50);
  CHECK(*std::get<1>(acc.curve[0]) == 0.80);

  // per-document loop
  std::size_t correct = 0;
  for (auto d : ranked[0]) correct += *golds[d] == "a";
  CHECK(*accuracy_fraction(correct, 1000) == *acc.overall);

  std::vector<std::vector<std::size_t>> empty(2);
  CHECK_FALSE(pseudo_accuracy(empty, labels, golds, 50).overall);
}

TEST_CASE("pattern proportions", "[eval]") {
  std::vector<std::string> pats(50, "Term");
  for (int i = 0; i < 10; ++i) pats[i] = "Venue-Year";
  std::vector<IndicativeSet> sets{with_patterns("x", pats),
                                  with_patterns("y", std::vector<std::string>(7, "Author"))};
  auto pp = pattern_proportions(sets);
  CHECK(pp.per_category.at("x").at("Venue-Year") == Catch::Approx(0.20).margin(1e-12));
  CHECK(pp.per_category.at("y").at("Author") == 1.0);
  for (const auto& [label, row] : pp.per_category) {
    double s = 0;
    for (const auto& [p, v] : row) s += v;
    CHECK(std::abs(s - 1.0) <= 1e-9);
  }
  CHECK(pp.overall.at("Author") == Catch::Approx(0.5));
  CHECK(pp.overall.at("Term") == Catch::Approx(0.4));
  double s = 0;
  for (const auto& [p, v] : pp.overall) s += v;
  CHECK(std::abs(s - 1.0) <= 1e-9);
}

TEST_CASE("report serialization", "[eval]") {
  std::vector<std::size_t> p{0, 1, 1, 2}, g{0, 0, 1, 2};
  EvaluationReport r;
  r.labels = kABC;
  r.f1 = f1_report(p, g, kABC);
  std::vector<IndicativeSet> sets{with_patterns("a", {"Term", "Venue"})};
  r.proportions = pattern_proportions(sets);
  auto j = to_json(r);
  CHECK(j["micro_f1"].get<double>() == 0.75);
  CHECK(j["pseudo_accuracy"].is_null());
  CHECK(j["confusion"][0][1] == 1);
  std::ostringstream md;
  write_report_markdown(r, md);
  CHECK(md.str().find("| 0.750 | 0.778 | 4 |") != std::string::npos);
  CHECK(md.str().find("| Overall | 0.500 | 0.500 |") != std::string::npos);
}

TEST_CASE("gold labels are reachable through the channel", "[eval]") {
  CorpusSchema s;
  CorpusStore corpus(s, {Document{"a", {"x"}, {}}}, {std::optional<std::string>("lab")});
  CHECK(GoldChannel::open(corpus)[0] == "lab");
}
