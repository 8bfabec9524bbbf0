#pragma once

// Exact sampling from the von Mises-Fisher distribution on S^{dim-1}.
//
// The cosine t = mu^T x is drawn by rejection against Wood's (1994) envelope,
// then x = t mu + sqrt(1 - t^2) v with v uniform on the unit sphere of the
// subspace orthogonal to mu.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <random>
#include <span>
#include <vector>

#include "motifclass/core.hpp"
#include "motifclass/sphere.hpp"

namespace motifclass {

template <std::floating_point Real, class Rng>
Real sample_vmf_cosine(std::size_t dim, Real kappa, Rng& rng) {
  const double d1 = double(dim) - 1.0;
  const double k = double(kappa);
  // b = (-2k + sqrt(4k^2 + d1^2)) / d1, written without cancellation.
  const double b = d1 / (2.0 * k + std::sqrt(4.0 * k * k + d1 * d1));
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = k * x0 + d1 * std::log(1.0 - x0 * x0);

  std::gamma_distribution<double> ga(d1 / 2.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  while (true) {
    double g1 = ga(rng), g2 = ga(rng);
    double z = g1 / (g1 + g2);  // Beta(d1/2, d1/2)
    double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    double u = unif(rng);
    if (u <= 0) continue;
    if (k * w + d1 * std::log(1.0 - x0 * w) - c >= std::log(u)) return Real(w);
  }
}

// Writes one draw from vMF(mu, kappa) into `out`. mu must be unit-norm.
template <std::floating_point Real, class Rng>
void sample_vmf(std::span<const Real> mu, Real kappa, Rng& rng, std::span<Real> out) {
  const std::size_t dim = mu.size();
  if (dim < 2) throw ValidationError("sample_vmf: dimension must be >= 2");
  if (!(kappa >= 0)) throw ValidationError("sample_vmf: kappa must be >= 0");
  if (out.size() != dim) throw ValidationError("sample_vmf: output size mismatch");

  const Real t = sample_vmf_cosine<Real>(dim, kappa, rng);

  // Uniform direction orthogonal to mu.
  std::normal_distribution<Real> gauss(0, 1);
  std::vector<Real> v(dim);
  Real n = 0;
  do {
    for (auto& x : v) x = gauss(rng);
    Real along = dot(std::span<const Real>(v), mu);
    for (std::size_t i = 0; i < dim; ++i) v[i] -= along * mu[i];
    n = norm(std::span<const Real>(v));
  } while (n < Real(1e-12));

  const Real s = std::sqrt(std::max(Real(0), Real(1) - t * t));
  for (std::size_t i = 0; i < dim; ++i) out[i] = t * mu[i] + s * v[i] / n;
  // Remove rounding drift.
  Real on = norm(std::span<const Real>(out));
  for (auto& x : out) x /= on;
}

template <std::floating_point Real, class Rng>
std::vector<Real> sample_vmf(std::span<const Real> mu, Real kappa, Rng& rng) {
  std::vector<Real> out(mu.size());
  sample_vmf(mu, kappa, rng, std::span<Real>(out));
  return out;
}

}  // namespace motifclass
