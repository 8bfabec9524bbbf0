#pragma once

// Small dense-vector helpers for embeddings on the unit sphere.

#include <cmath>
#include <concepts>
#include <random>
#include <span>
#include <type_traits>
#include <utility>

#include "motifclass/core.hpp"

namespace motifclass {

template <class V>
using element_t = std::remove_cvref_t<decltype(std::declval<const V&>()[0])>;

// Accepts any contiguous container of floats (vector, span, const span).
template <class A, class B>
  requires std::floating_point<element_t<A>>
element_t<A> dot(const A& a, const B& b) {
  element_t<A> s = 0;
  for (std::size_t i = 0; i < std::size(a); ++i) s += a[i] * b[i];
  return s;
}

template <class A>
  requires std::floating_point<element_t<A>>
element_t<A> norm(const A& a) {
  return std::sqrt(dot(a, a));
}

template <class A, class B>
  requires std::floating_point<element_t<A>>
element_t<A> cosine(const A& a, const B& b) {
  auto na = norm(a), nb = norm(b);
  if (na == 0 || nb == 0) return 0;
  return dot(a, b) / (na * nb);
}

// Fills `out` with a draw uniform on the sphere (normalized Gaussian).
template <std::floating_point Real, class Rng>
void random_unit_vector(std::span<Real> out, Rng& rng) {
  std::normal_distribution<Real> gauss(0, 1);
  Real n = 0;
  do {
    for (auto& x : out) x = gauss(rng);
    n = norm(std::span<const Real>(out));
  } while (n == 0);
  for (auto& x : out) x /= n;
}

// In-place v <- v / |v|. A zero vector is replaced by a fresh random unit
// vector and logged. Returns false in that case.
template <std::floating_point Real, class Rng>
bool project_to_sphere(std::span<Real> v, Rng& rng) {
  Real n = norm(std::span<const Real>(v));
  if (!(n > 0) || !std::isfinite(n)) {
    log::warn("project_to_sphere: degenerate vector, re-randomized");
    random_unit_vector(v, rng);
    return false;
  }
  for (auto& x : v) x /= n;
  return true;
}

template <std::floating_point Real>
constexpr Real clamp_kappa(Real kappa) {
  return kappa < 0 ? Real(0) : kappa;
}

template <std::floating_point Real>
Real sigmoid(Real x) {
  if (x > 30) x = 30;
  if (x < -30) x = -30;
  return Real(1) / (Real(1) + std::exp(-x));
}

// log(sigmoid(x)) with the same argument clipping.
template <std::floating_point Real>
Real log_sigmoid(Real x) {
  if (x > 30) x = 30;
  if (x < -30) x = -30;
  return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

}  // namespace motifclass
