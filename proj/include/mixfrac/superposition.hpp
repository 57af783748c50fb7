#ifndef MIXFRAC_SUPERPOSITION_HPP
#define MIXFRAC_SUPERPOSITION_HPP

#include <cmath>
#include <utility>
#include <vector>

#include "mixfrac/common.hpp"
#include "mixfrac/kernel.hpp"
#include "mixfrac/measure.hpp"

namespace mixfrac {

/// Toeplitz weights for any admissible order, including the endpoint cases:
/// s = 0 is the identity, s = 1 the three-point Laplacian.
template <class Scalar>
KernelWeights<Scalar> component_weights(const Grid<Scalar>& grid, Scalar s) {
  if (!(s >= 0 && s <= 1)) throw DomainError("component_weights: s must lie in [0,1]");
  const Index n = grid.n;
  KernelWeights<Scalar> w;
  if (s == 0) {
    w.diag = 1;
    w.offdiag = Vector<Scalar>::Zero(n > 1 ? n - 1 : 0);
    return w;
  }
  if (s == 1) {
    const Scalar inv_h2 = 1 / (grid.h() * grid.h());
    w.diag = 2 * inv_h2;
    w.offdiag = Vector<Scalar>::Zero(n > 1 ? n - 1 : 0);
    if (n > 1) w.offdiag[0] = -inv_h2;
    return w;
  }
  return kernel_weights(grid, s);
}

/// The assembled discrete superposition operator together with the quadrature
/// nodes it was built from and their per-order Toeplitz weights. Immutable
/// after assembly; all queries are const.
template <class Scalar>
struct OperatorMatrix {
  Grid<Scalar> grid;
  DenseMatrix<Scalar> matrix;
  std::vector<QuadratureNode<Scalar>> nodes;
  std::vector<KernelWeights<Scalar>> node_weights;
  HypothesisReport<Scalar> hypothesis;
  Scalar sbar = 1;

  bool minus_side_empty() const {
    for (const auto& node : nodes)
      if (node.sign < 0) return false;
    return true;
  }
};

/// Sum of sign * w * A_s over the atomized measure. Hypothesis failures are
/// rejected unless force is set (the counterexample workflow sets it).
template <class Scalar>
OperatorMatrix<Scalar> assemble(const SignedMeasure<Scalar>& m, const Grid<Scalar>& grid,
                                int nodes_per_piece = 32, bool force = false) {
  HypothesisReport<Scalar> report = validate_hypotheses(m);
  if (!force && !report.ok()) {
    if (!report.mu0_ok) throw HypothesisViolation("mu0 fails: no positive mass in [sbar, 1]");
    throw HypothesisViolation("mu1 fails: negative mass present in [sbar, 1]");
  }

  OperatorMatrix<Scalar> op{grid,
                            DenseMatrix<Scalar>::Zero(grid.n, grid.n),
                            atomize(m, nodes_per_piece),
                            {},
                            report,
                            m.sbar};
  op.node_weights.reserve(op.nodes.size());
  for (const auto& node : op.nodes) {
    KernelWeights<Scalar> w = component_weights(grid, node.s);
    const Scalar factor = Scalar(node.sign) * node.w;
    op.matrix.diagonal().array() += factor * w.diag;
    for (Index k = 1; k < grid.n; ++k) {
      const Scalar value = factor * w.offdiag[k - 1];
      if (value != 0)
        for (Index i = 0; i + k < grid.n; ++i) {
          op.matrix(i, i + k) += value;
          op.matrix(i + k, i) += value;
        }
    }
    op.node_weights.push_back(std::move(w));
  }
  return op;
}

namespace detail {

template <class Scalar>
void check_same_grid(const OperatorMatrix<Scalar>& op, const GridFunction<Scalar>& u,
                     const GridFunction<Scalar>& v) {
  if (!(u.grid == op.grid) || !(v.grid == op.grid))
    throw GridMismatch("inner product: operands live on different grids");
}

/// h v^T W u for one quadrature node's Toeplitz weights.
template <class Scalar>
Scalar node_form(const OperatorMatrix<Scalar>& op, std::size_t node_index,
                 const Vector<Scalar>& u, const Vector<Scalar>& v) {
  return op.grid.h() * v.dot(apply_kernel(op.node_weights[node_index], u));
}

}  // namespace detail

/// <u, v> over the positive part of the measure (all plus nodes).
template <class Scalar>
Scalar inner_plus(const OperatorMatrix<Scalar>& op, const GridFunction<Scalar>& u,
                  const GridFunction<Scalar>& v) {
  detail::check_same_grid(op, u, v);
  Scalar acc = 0;
  for (std::size_t i = 0; i < op.nodes.size(); ++i)
    if (op.nodes[i].sign > 0) acc += op.nodes[i].w * detail::node_form(op, i, u.values, v.values);
  return acc;
}

/// <u, v> over the negative part, restricted to orders below sbar.
template <class Scalar>
Scalar inner_minus(const OperatorMatrix<Scalar>& op, const GridFunction<Scalar>& u,
                   const GridFunction<Scalar>& v) {
  detail::check_same_grid(op, u, v);
  Scalar acc = 0;
  for (std::size_t i = 0; i < op.nodes.size(); ++i)
    if (op.nodes[i].sign < 0 && op.nodes[i].s < op.sbar)
      acc += op.nodes[i].w * detail::node_form(op, i, u.values, v.values);
  return acc;
}

/// The mixed bilinear form <u, v> = <u, v>_+ - <u, v>_-.
template <class Scalar>
Scalar inner(const OperatorMatrix<Scalar>& op, const GridFunction<Scalar>& u,
             const GridFunction<Scalar>& v) {
  return inner_plus(op, u, v) - inner_minus(op, u, v);
}

/// Norm of the positive form.
template <class Scalar>
Scalar norm_X(const OperatorMatrix<Scalar>& op, const GridFunction<Scalar>& u) {
  return std::sqrt(std::max(inner_plus(op, u, u), Scalar(0)));
}

inline constexpr double kIndefiniteTol = -1e-12;

/// Norm of the mixed form; a radicand below the indefiniteness tolerance
/// signals that gamma is too large for the form to stay a dot product.
template <class Scalar>
Scalar norm_mixed(const OperatorMatrix<Scalar>& op, const GridFunction<Scalar>& u) {
  const Scalar r = inner(op, u, u);
  if (r < Scalar(kIndefiniteTol))
    throw IndefiniteForm("norm_mixed: negative radicand, the mixed form is indefinite");
  return std::sqrt(std::max(r, Scalar(0)));
}

/// Empirical lower bound for c0*gamma: the largest observed ratio of negative
/// to high-order energy over seeded random grid functions.
template <class Scalar>
Scalar empirical_reabsorption_constant(const OperatorMatrix<Scalar>& op, int samples,
                                       std::uint64_t seed) {
  if (!op.hypothesis.mu0_ok)
    throw HypothesisViolation("empirical_reabsorption_constant: mu0 must hold");
  Scalar best = 0;
  for (int t = 0; t < samples; ++t) {
    Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(t));
    Vector<Scalar> u(op.grid.n);
    for (Index i = 0; i < op.grid.n; ++i) u[i] = Scalar(rng.symmetric());
    Scalar low_minus = 0, high = 0;
    for (std::size_t i = 0; i < op.nodes.size(); ++i) {
      const Scalar form = op.nodes[i].w * op.grid.h() *
                          u.dot(apply_kernel(op.node_weights[i], u));
      if (op.nodes[i].sign < 0 && op.nodes[i].s < op.sbar) low_minus += form;
      if (op.nodes[i].s >= op.sbar) high += Scalar(op.nodes[i].sign) * form;
    }
    if (high > 0) best = std::max(best, low_minus / high);
  }
  return best;
}

}  // namespace mixfrac

#endif  // MIXFRAC_SUPERPOSITION_HPP
