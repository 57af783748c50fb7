#ifndef MIXFRAC_QUADRATURE_HPP
#define MIXFRAC_QUADRATURE_HPP

#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "mixfrac/common.hpp"

namespace mixfrac {

template <class Scalar>
struct QuadratureRule {
  std::vector<Scalar> points;
  std::vector<Scalar> weights;
};

/// Gauss-Legendre nodes/weights on [-1, 1] by Newton iteration on the
/// three-term recurrence. Accurate to ~1e-15 for the sizes used here.
template <class Scalar>
QuadratureRule<Scalar> gauss_legendre(int m) {
  if (m < 1) throw DomainError("gauss_legendre: need at least one node");
  QuadratureRule<Scalar> rule;
  rule.points.resize(m);
  rule.weights.resize(m);
  const int half = (m + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess for the i-th positive root
    Scalar z = std::cos(std::numbers::pi_v<Scalar> * (Scalar(i) + Scalar(0.75)) /
                        (Scalar(m) + Scalar(0.5)));
    Scalar pp = 0;
    for (int iter = 0; iter < 100; ++iter) {
      Scalar p1 = 1, p2 = 0;
      for (int j = 0; j < m; ++j) {
        Scalar p3 = p2;
        p2 = p1;
        p1 = ((2 * Scalar(j) + 1) * z * p2 - Scalar(j) * p3) / (Scalar(j) + 1);
      }
      pp = Scalar(m) * (z * p1 - p2) / (z * z - 1);
      Scalar dz = p1 / pp;
      z -= dz;
      if (std::abs(dz) < Scalar(1e-16)) break;
    }
    rule.points[i] = -z;
    rule.points[m - 1 - i] = z;
    Scalar w = 2 / ((1 - z * z) * pp * pp);
    rule.weights[i] = w;
    rule.weights[m - 1 - i] = w;
  }
  return rule;
}

/// Same rule mapped onto [lo, hi]; weights sum to (hi - lo).
template <class Scalar>
QuadratureRule<Scalar> gauss_legendre(int m, Scalar lo, Scalar hi) {
  QuadratureRule<Scalar> rule = gauss_legendre<Scalar>(m);
  const Scalar mid = (lo + hi) / 2;
  const Scalar rad = (hi - lo) / 2;
  for (int i = 0; i < m; ++i) {
    rule.points[i] = mid + rad * rule.points[i];
    rule.weights[i] *= rad;
  }
  return rule;
}

namespace detail {

/// Fixed 16-point Gauss-Legendre estimate of \int_lo^hi f.
template <class Scalar, class F>
Scalar gl16(const F& f, Scalar lo, Scalar hi, long& evals) {
  static const QuadratureRule<Scalar> base = gauss_legendre<Scalar>(16);
  const Scalar mid = (lo + hi) / 2;
  const Scalar rad = (hi - lo) / 2;
  Scalar acc = 0;
  for (int i = 0; i < 16; ++i) acc += base.weights[i] * f(mid + rad * base.points[i]);
  evals += 16;
  return acc * rad;
}

/// Adaptive bisection around gl16: accept a panel once splitting it changes
/// the estimate by less than tol (absolute).
template <class Scalar, class F>
Scalar adaptive_panel(const F& f, Scalar lo, Scalar hi, Scalar tol, long& evals,
                      long budget, int depth = 0) {
  const Scalar whole = gl16(f, lo, hi, evals);
  if (evals > budget) throw NonConvergence("adaptive quadrature: evaluation budget exhausted");
  const Scalar mid = (lo + hi) / 2;
  const Scalar left = gl16(f, lo, mid, evals);
  const Scalar right = gl16(f, mid, hi, evals);
  const Scalar split = left + right;
  if (std::abs(split - whole) <= tol || depth >= 48) return split;
  return adaptive_panel(f, lo, mid, tol / 2, evals, budget, depth + 1) +
         adaptive_panel(f, mid, hi, tol / 2, evals, budget, depth + 1);
}

}  // namespace detail

}  // namespace mixfrac

#endif  // MIXFRAC_QUADRATURE_HPP
