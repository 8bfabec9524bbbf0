#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "motifclass/vmf.hpp"
#include "oracles.hpp"

using namespace motifclass;

namespace {

std::vector<double> unit(std::size_t dim, std::mt19937_64& rng) {
  std::vector<double> v(dim);
  random_unit_vector(std::span<double>(v), rng);
  return v;
}

}  // namespace

TEST_CASE("Bessel ratio oracle agrees with the standard library", "[vmf][oracle]") {
  for (double nu : {1.0, 1.5, 5.0, 25.0}) {
    for (double x : {0.1, 1.0, 7.5, 50.0}) {
      double expected = std::cyl_bessel_i(nu, x) / std::cyl_bessel_i(nu - 1.0, x);
      CHECK(oracle::bessel_ratio(nu, x) == Catch::Approx(expected).epsilon(1e-10));
    }
  }
  // d = 3 has the closed form coth(k) - 1/k
  CHECK(oracle::vmf_mean_resultant(3, 2.0) ==
        Catch::Approx(1.0 / std::tanh(2.0) - 0.5).epsilon(1e-12));
}

TEST_CASE("kappa 0 is uniform on the sphere", "[vmf]") {
  std::mt19937_64 rng(1);
  const std::size_t dim = 50;
  auto mu = unit(dim, rng);
  std::vector<double> mean(dim, 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto x = sample_vmf(std::span<const double>(mu), 0.0, rng);
    for (std::size_t k = 0; k < dim; ++k) mean[k] += x[k] / n;
  }
  CHECK(norm(mean) < 0.05);
}

TEST_CASE("large kappa concentrates on the mean", "[vmf]") {
  std::mt19937_64 rng(2);
  auto mu = unit(50, rng);
  for (int i = 0; i < 1000; ++i) {
    auto x = sample_vmf(std::span<const double>(mu), 1e6, rng);
    REQUIRE(dot(x, mu) > 0.999);
  }
}

TEST_CASE("mean resultant length matches the Bessel ratio", "[vmf][oracle]") {
  std::mt19937_64 rng(3);
  const std::size_t dim = 50;
  auto mu = unit(dim, rng);
  std::vector<double> mean(dim, 0.0);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    auto x = sample_vmf(std::span<const double>(mu), 50.0, rng);
    for (std::size_t k = 0; k < dim; ++k) mean[k] += x[k] / n;
  }
  const double expected = oracle::vmf_mean_resultant(dim, 50.0);
  INFO("expected " << expected);
  CHECK(std::abs(norm(mean) - expected) < 0.02);
}

TEST_CASE("cosine to the mean follows the marginal density", "[vmf][oracle]") {
  std::mt19937_64 rng(4);
  for (double kappa : {1.0, 10.0, 100.0}) {
    const std::size_t dim = 20;
    oracle::VmfCosineCdf cdf(dim, kappa);
    auto mu = unit(dim, rng);
    std::vector<double> t;
    for (int i = 0; i < 20000; ++i) {
      auto x = sample_vmf(std::span<const double>(mu), kappa, rng);
      t.push_back(dot(x, mu));
    }
    double ks = oracle::ks_statistic(t, [&](double v) { return cdf(v); });
    INFO("kappa " << kappa << " KS " << ks);
    CHECK(ks < 0.02);
  }
}

TEST_CASE("samples are unit vectors and bad input is rejected", "[vmf]") {
  std::mt19937_64 rng(5);
  auto mu = unit(16, rng);
  std::uniform_real_distribution<double> kd(0.0, 200.0);
  for (int i = 0; i < 2000; ++i) {
    auto x = sample_vmf(std::span<const double>(mu), kd(rng), rng);
    REQUIRE(std::abs(norm(x) - 1.0) < 1e-9);
  }
  CHECK_THROWS_AS(sample_vmf(std::span<const double>(mu), -1.0, rng), ValidationError);
  std::vector<double> one{1.0};
  CHECK_THROWS_AS(sample_vmf(std::span<const double>(one), 1.0, rng), ValidationError);

  // float instantiation
  std::vector<float> muf(mu.begin(), mu.end());
  auto xf = sample_vmf(std::span<const float>(muf), 5.0f, rng);
  CHECK(std::abs(norm(xf) - 1.0f) < 1e-5f);
}
