#ifndef MIXFRAC_KERNEL_HPP
#define MIXFRAC_KERNEL_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "mixfrac/common.hpp"
#include "mixfrac/quadrature.hpp"

namespace mixfrac {

/// Uniform partition of (a, b) with n interior nodes. Grid functions are
/// implicitly zero at the endpoints and outside.
template <class Scalar>
struct Grid {
  Scalar a;
  Scalar b;
  Index n;

  Grid(Scalar left, Scalar right, Index interior) : a(left), b(right), n(interior) {
    if (!(b > a)) throw DomainError("grid: need b > a");
    if (n < 2) throw DomainError("grid: need at least two interior nodes");
  }

  Scalar h() const { return (b - a) / Scalar(n + 1); }

  /// Interior node x_{i+1} = a + (i+1) h for i in [0, n).
  Scalar node(Index i) const { return a + Scalar(i + 1) * h(); }

  bool operator==(const Grid& other) const {
    return a == other.a && b == other.b && n == other.n;
  }
};

/// Real values at the interior nodes of a grid, zero outside by convention.
template <class Scalar>
struct GridFunction {
  Grid<Scalar> grid;
  Vector<Scalar> values;

  GridFunction(Grid<Scalar> g, Vector<Scalar> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.n) throw GridMismatch("grid function: wrong sample count");
    if (!values.allFinite()) throw DomainError("grid function: non-finite samples");
  }

  static GridFunction zero(Grid<Scalar> g) {
    return GridFunction(g, Vector<Scalar>::Zero(g.n));
  }

  /// Piecewise-linear interpolant with zero extension outside (a, b).
  Scalar interpolate(Scalar x) const {
    const Scalar h = grid.h();
    if (x <= grid.a || x >= grid.b) return 0;
    const Scalar t = (x - grid.a) / h;
    Index cell = static_cast<Index>(std::floor(t));
    if (cell < 0) cell = 0;
    if (cell > grid.n) cell = grid.n;
    const Scalar frac = t - Scalar(cell);
    const Scalar left = (cell >= 1 && cell <= grid.n) ? values[cell - 1] : Scalar(0);
    const Scalar right = (cell + 1 >= 1 && cell + 1 <= grid.n) ? values[cell] : Scalar(0);
    return left + frac * (right - left);
  }
};

/// Normalizing constant of the fractional Laplacian,
///   c_{N,s} = 2^{2s-1} Gamma((N+2s)/2) / (pi^{N/2} Gamma(2-s)) * s(1-s),
/// with exact zeros at s = 0 and s = 1.
template <class Scalar>
Scalar normalization_constant(int dim, Scalar s) {
  if (dim < 1) throw DomainError("normalization_constant: dimension must be >= 1");
  if (!(s >= 0 && s <= 1)) throw DomainError("normalization_constant: s must lie in [0,1]");
  if (s == 0 || s == 1) return 0;
  const Scalar num = std::pow(Scalar(2), 2 * s - 1) * std::tgamma((Scalar(dim) + 2 * s) / 2);
  const Scalar den =
      std::pow(std::numbers::pi_v<Scalar>, Scalar(dim) / 2) * std::tgamma(2 - s);
  return num / den * s * (1 - s);
}

/// Toeplitz representation of the discrete operator of order s on a grid:
/// diagonal value plus the off-diagonal band indexed by |i-j| - 1.
template <class Scalar>
struct KernelWeights {
  Scalar diag = 0;
  Vector<Scalar> offdiag;  // entry A_{ij} for |i-j| = k+1 at index k
};

namespace detail {

/// (k^p - (k-1)^p) / p, stable for small |p| and large k; the p = 0 limit is
/// log(k/(k-1)). Requires k >= 2.
template <class Scalar>
Scalar power_difference_ratio(Index k, Scalar p) {
  const Scalar log_ratio = std::log1p(Scalar(-1) / Scalar(k));  // log((k-1)/k) < 0
  if (p == 0) return -log_ratio;
  return std::pow(Scalar(k), p) * (-std::expm1(p * log_ratio)) / p;
}

}  // namespace detail

/// Second-difference quadrature weights for the order-s kernel on a uniform
/// grid: the symmetrized difference of the piecewise-linear interpolant is
/// integrated exactly against |y|^{-1-2s} panel by panel, except on the first
/// panel where the quadratic-consistency weight h^{-2s}/(2-2s) replaces the
/// divergent interpolant integral. Exterior tails are folded in exactly, which
/// makes the diagonal constant:
///   A_ii = 4 c_{1,s} h^{-2s} (1/(2-2s) + 1/(2s)),   A_ij = -2 c_{1,s} q_{|i-j|}.
template <class Scalar>
KernelWeights<Scalar> kernel_weights(const Grid<Scalar>& grid, Scalar s) {
  if (!(s > 0 && s < 1)) throw DomainError("kernel_weights: s must lie in (0,1)");
  const Scalar h = grid.h();
  const Scalar c = normalization_constant(1, s);
  const Scalar h2s = std::pow(h, -2 * s);
  const Index n = grid.n;

  // panel moments over [(k-1)h, kh]:
  //   m0_k = \int y^{-1-2s} dy = h^{-2s} * pdr(k, -2s)
  //   m1_k = \int y^{-2s}   dy = h^{1-2s} * pdr(k, 1-2s)
  auto beta = [&](Index k, Scalar& rising, Scalar& falling) {
    const Scalar m0 = h2s * detail::power_difference_ratio(k, -2 * s);
    const Scalar m1_over_h = h2s * detail::power_difference_ratio(k, 1 - 2 * s);
    rising = m1_over_h - Scalar(k - 1) * m0;
    falling = Scalar(k) * m0 - m1_over_h;
  };

  KernelWeights<Scalar> w;
  w.diag = 4 * c * h2s * (1 / (2 - 2 * s) + 1 / (2 * s));
  w.offdiag.resize(n > 1 ? n - 1 : 0);

  Scalar rising = 0, falling = 0;
  beta(2, rising, falling);
  for (Index k = 1; k < n; ++k) {
    Scalar q;
    if (k == 1) {
      q = h2s / (2 - 2 * s) + falling;  // quadratic first panel + falling ramp of panel 2
    } else {
      const Scalar rising_k = rising;
      beta(k + 1, rising, falling);
      q = rising_k + falling;
    }
    w.offdiag[k - 1] = -2 * c * q;
  }
  return w;
}

/// Applies the Toeplitz operator to samples, accumulating per row in
/// ascending |i-j| so results are deterministic.
template <class Scalar>
Vector<Scalar> apply_kernel(const KernelWeights<Scalar>& w, const Vector<Scalar>& u) {
  const Index n = u.size();
  Vector<Scalar> out(n);
  for (Index i = 0; i < n; ++i) {
    Scalar acc = w.diag * u[i];
    for (Index k = 1; k < n; ++k) {
      Scalar neighbors = 0;
      if (i - k >= 0) neighbors += u[i - k];
      if (i + k < n) neighbors += u[i + k];
      if (neighbors != 0) acc += w.offdiag[k - 1] * neighbors;
      if (i - k < 0 && i + k >= n) break;
    }
    out[i] = acc;
  }
  return out;
}

/// Dense matrix of the discretized operator of a single order s:
/// s = 0 gives the identity, s = 1 the classical three-point Laplacian,
/// s in (0,1) the symmetric Toeplitz kernel matrix.
template <class Scalar>
DenseMatrix<Scalar> component_matrix(const Grid<Scalar>& grid, Scalar s) {
  if (!(s >= 0 && s <= 1)) throw DomainError("component_matrix: s must lie in [0,1]");
  const Index n = grid.n;
  if (s == 0) return DenseMatrix<Scalar>::Identity(n, n);
  if (s == 1) {
    const Scalar inv_h2 = 1 / (grid.h() * grid.h());
    DenseMatrix<Scalar> lap = DenseMatrix<Scalar>::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
      lap(i, i) = 2 * inv_h2;
      if (i + 1 < n) {
        lap(i, i + 1) = -inv_h2;
        lap(i + 1, i) = -inv_h2;
      }
    }
    return lap;
  }
  const KernelWeights<Scalar> w = kernel_weights(grid, s);
  DenseMatrix<Scalar> mat(n, n);
  for (Index i = 0; i < n; ++i) {
    mat(i, i) = w.diag;
    for (Index j = i + 1; j < n; ++j) {
      mat(i, j) = w.offdiag[j - i - 1];
      mat(j, i) = mat(i, j);
    }
  }
  return mat;
}

/// Squared Gagliardo seminorm of order s of a grid function: the discrete L^2
/// norm at s = 0, the discrete gradient norm at s = 1, and the kernel-matrix
/// quadratic form h u^T A_s u for s in (0,1) so that seminorm and matrix are
/// consistent by construction.
template <class Scalar>
Scalar gagliardo_seminorm_sq(const GridFunction<Scalar>& u, Scalar s) {
  if (!(s >= 0 && s <= 1)) throw DomainError("gagliardo_seminorm_sq: s must lie in [0,1]");
  const Scalar h = u.grid.h();
  const Index n = u.grid.n;
  if (s == 0) return h * u.values.squaredNorm();
  if (s == 1) {
    Scalar acc = u.values[0] * u.values[0];  // cell (x_0, x_1), u_0 = 0
    for (Index i = 0; i + 1 < n; ++i) {
      const Scalar d = u.values[i + 1] - u.values[i];
      acc += d * d;
    }
    acc += u.values[n - 1] * u.values[n - 1];  // cell (x_n, x_{n+1})
    return acc / h;
  }
  const KernelWeights<Scalar> w = kernel_weights(u.grid, s);
  return h * u.values.dot(apply_kernel(w, u.values));
}

/// A function on the whole line with a known constant value outside a finite
/// radius; the plateau makes exterior tails of singular integrals exact.
/// An infinite radius means no closed tail and panels are continued until the
/// relative contribution stalls below tolerance. Known kink locations can be
/// listed in breakpoints so quadrature panels can be aligned with them.
template <class Scalar>
struct PointwiseFunction {
  std::function<Scalar(Scalar)> eval;
  Scalar plateau_radius = std::numeric_limits<Scalar>::infinity();
  Scalar plateau_value = 0;
  std::vector<Scalar> breakpoints;

  Scalar operator()(Scalar x) const { return eval(x); }
};

/// Pointwise fractional Laplacian by adaptive singular quadrature:
///   c_{1,s} \int_R (2u(x) - u(x+y) - u(x-y)) |y|^{-1-2s} dy.
/// The near field is covered by geometrically shrinking panels (the
/// symmetrized second difference makes the integrand O(y^{1-2s}), so no
/// principal value is involved); the far field by doubling panels with the
/// plateau tail added in closed form. Throws NonConvergence when the budget
/// of integrand evaluations is exhausted before reaching tol.
template <class Scalar>
Scalar frac_laplacian_pointwise(const PointwiseFunction<Scalar>& u, Scalar x, Scalar s,
                                Scalar tol = Scalar(1e-10), long budget = 1000000,
                                Scalar h0 = Scalar(-1)) {
  if (!(s > 0 && s < 1)) throw DomainError("frac_laplacian_pointwise: s must lie in (0,1)");
  if (!(tol > 0)) throw DomainError("frac_laplacian_pointwise: tol must be positive");
  const Scalar scale =
      std::isfinite(u.plateau_radius) ? std::max(Scalar(1), u.plateau_radius + std::abs(x))
                                      : Scalar(1);
  if (h0 <= 0) h0 = Scalar(1e-3) * scale;

  const Scalar ux = u(x);
  auto second_diff = [&](Scalar y) { return 2 * ux - u(x + y) - u(x - y); };
  auto integrand = [&](Scalar y) { return second_diff(y) * std::pow(y, -1 - 2 * s); };

  // kinks of y -> u(x +- y), plus the plateau corners
  std::vector<Scalar> kinks;
  for (Scalar t : u.breakpoints) {
    const Scalar y = std::abs(t - x);
    if (y > 0) kinks.push_back(y);
  }
  if (std::isfinite(u.plateau_radius)) {
    for (Scalar y : {u.plateau_radius - x, u.plateau_radius + x})
      if (y > 0) kinks.push_back(y);
  }
  std::sort(kinks.begin(), kinks.end());
  auto next_kink_below = [&](Scalar y) -> Scalar {
    auto it = std::lower_bound(kinks.begin(), kinks.end(), y);
    return it == kinks.begin() ? Scalar(0) : *(it - 1);
  };
  auto next_kink_above = [&](Scalar y) -> Scalar {
    auto it = std::upper_bound(kinks.begin(), kinks.end(), y);
    return it == kinks.end() ? std::numeric_limits<Scalar>::infinity() : *it;
  };

  long evals = 0;

  // magnitude estimate pass: coarse kink-aligned panels, fixed rule
  Scalar estimate = 0;
  {
    const Scalar far_limit = std::isfinite(u.plateau_radius)
                                 ? u.plateau_radius + std::abs(x)
                                 : Scalar(1e6) * scale;
    Scalar lo = h0;
    while (lo < far_limit) {
      Scalar hi = std::min({2 * lo, far_limit, next_kink_above(lo)});
      if (hi - lo < Scalar(1e-12) * lo) hi = std::min(2 * lo, far_limit);
      estimate += detail::gl16<Scalar>(integrand, lo, hi, evals);
      lo = hi;
    }
    Scalar nhi = h0;
    for (int m = 0; m < 4 && nhi > 0; ++m) {
      const Scalar nlo = std::max(nhi / 8, next_kink_below(nhi));
      estimate += detail::gl16<Scalar>(integrand, nlo, nhi, evals);
      nhi = nlo;
    }
  }
  const Scalar magnitude = std::max(std::abs(estimate), Scalar(1e-300));
  const Scalar panel_tol = tol * magnitude / 64;

  Scalar total = 0;

  // Near field. The symmetrized second difference of a C^2 function is
  // a y^2 + O(y^4), but evaluating it below sqrt(eps) of the local scale
  // only returns rounding noise, and noise * y^{-1-2s} diverges. So real
  // panels stop at a noise-safe cutoff delta and the remaining [0, delta]
  // is added through the quadratic model a delta^{2-2s}/(2-2s) with
  // a = phi(delta)/delta^2; both the model error O(delta^{4-2s}) and the
  // noise in a are below tol by construction of delta.
  {
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    const Scalar local_scale =
        std::max({std::abs(ux), std::abs(u(x + h0)), std::abs(u(x - h0)), Scalar(1)});
    Scalar curvature = 0;
    for (Scalar y : {h0, h0 / 2, h0 / 4})
      curvature = std::max(curvature, std::abs(second_diff(y)) / (y * y));
    const Scalar noise_y =
        std::sqrt(eps * local_scale / std::max(curvature, Scalar(1e-30)));
    // below noise_accept the integrand noise eps*U*y^{-1-2s} would defeat
    // the panel acceptance test itself
    const Scalar noise_accept =
        std::pow(eps * local_scale / panel_tol, 1 / (2 * s));
    const Scalar min_kink = kinks.empty() ? std::numeric_limits<Scalar>::infinity()
                                          : kinks.front();
    const Scalar delta =
        std::min({h0, min_kink / 2,
                  std::max({300 * noise_y, noise_accept, Scalar(1e-12) * h0})});

    Scalar hi = h0;
    while (hi > delta * (1 + Scalar(1e-12))) {
      Scalar lo = std::max({hi / 10, next_kink_below(hi), delta});
      if (hi - lo < Scalar(1e-12) * hi) lo = std::max(hi / 10, delta);
      total += detail::adaptive_panel<Scalar>(integrand, lo, hi, panel_tol, evals, budget);
      hi = lo;
    }
    const Scalar a = second_diff(delta) / (delta * delta);
    total += a * std::pow(delta, 2 - 2 * s) / (2 - 2 * s);
  }

  // far field: doubling kink-aligned panels, then the exact plateau tail
  if (std::isfinite(u.plateau_radius)) {
    const Scalar far = u.plateau_radius + std::abs(x);
    Scalar lo = h0;
    while (lo < far) {
      Scalar hi = std::min({2 * lo, far, next_kink_above(lo)});
      if (hi - lo < Scalar(1e-12) * lo) hi = std::min(2 * lo, far);
      total += detail::adaptive_panel<Scalar>(integrand, lo, hi, panel_tol, evals, budget);
      lo = hi;
    }
    const Scalar phi_inf = 2 * ux - 2 * u.plateau_value;
    total += phi_inf * std::pow(far, -2 * s) / (2 * s);
  } else {
    Scalar lo = h0;
    int below = 0;
    while (true) {
      Scalar hi = std::min(2 * lo, next_kink_above(lo));
      if (hi - lo < Scalar(1e-12) * lo) hi = 2 * lo;
      const Scalar part =
          detail::adaptive_panel<Scalar>(integrand, lo, hi, panel_tol, evals, budget);
      total += part;
      below = (std::abs(part) < panel_tol * (1 - std::pow(Scalar(2), -2 * s))) ? below + 1 : 0;
      if (below >= 2) break;
      if (evals > budget)
        throw NonConvergence("frac_laplacian_pointwise: far-field budget exhausted");
      lo = hi;
    }
  }

  return 2 * normalization_constant(1, s) * total;
}

}  // namespace mixfrac

#endif  // MIXFRAC_KERNEL_HPP
