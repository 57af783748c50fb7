#ifndef MIXFRAC_EIGENSOLVER_HPP
#define MIXFRAC_EIGENSOLVER_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mixfrac/common.hpp"
#include "mixfrac/superposition.hpp"

namespace mixfrac {

enum class SpectrumMethod { Direct, Recursive };

/// Ascending eigenvalues with L2-orthonormal eigenfunctions (h e_i^T e_j =
/// delta_ij) and the partition of indices into near-degenerate groups.
/// Sign convention: first nonzero sample positive.
template <class Scalar>
struct Spectrum {
  std::vector<Scalar> lambdas;
  std::vector<GridFunction<Scalar>> vectors;
  std::vector<std::vector<int>> groups;
  SpectrumMethod method = SpectrumMethod::Direct;
};

inline constexpr double kGroupRelTol = 1e-8;

namespace detail {

template <class Scalar>
void fix_sign(Vector<Scalar>& v) {
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] != 0) {
      if (v[i] < 0) v = -v;
      return;
    }
  }
}

template <class Scalar>
std::vector<std::vector<int>> group_by_gap(const std::vector<Scalar>& lambdas,
                                           Scalar rel_tol) {
  std::vector<std::vector<int>> groups;
  for (int i = 0; i < static_cast<int>(lambdas.size()); ++i) {
    const Scalar scale = std::max(std::abs(lambdas[i]), Scalar(1e-300));
    if (!groups.empty() &&
        std::abs(lambdas[i] - lambdas[groups.back().back()]) < rel_tol * scale) {
      groups.back().push_back(i);
    } else {
      groups.push_back({i});
    }
  }
  return groups;
}

template <class Scalar>
void require_definite(const OperatorMatrix<Scalar>& op, Scalar lambda_min, Scalar lambda_max) {
  if (lambda_min < Scalar(kIndefiniteTol) * std::max(Scalar(1), std::abs(lambda_max)))
    throw IndefiniteForm("operator form is not positive definite");
}

}  // namespace detail

/// Full symmetric eigendecomposition truncated to the first k pairs. With the
/// lumped mass h I the weak problem reduces to the standard one on the
/// assembled matrix, so eigenvectors are rescaled by 1/sqrt(h) to be
/// L2-orthonormal.
template <class Scalar>
Spectrum<Scalar> solve_direct(const OperatorMatrix<Scalar>& op, int k) {
  const Index n = op.grid.n;
  if (k < 1 || k > n) throw DomainError("solve_direct: k must lie in [1, n]");
  Eigen::SelfAdjointEigenSolver<DenseMatrix<Scalar>> es(op.matrix);
  if (es.info() != Eigen::Success)
    throw ConvergenceFailure("solve_direct: eigendecomposition failed");
  detail::require_definite(op, es.eigenvalues()[0], es.eigenvalues()[n - 1]);

  Spectrum<Scalar> spec;
  spec.method = SpectrumMethod::Direct;
  const Scalar inv_sqrt_h = 1 / std::sqrt(op.grid.h());
  for (int i = 0; i < k; ++i) {
    spec.lambdas.push_back(es.eigenvalues()[i]);
    Vector<Scalar> v = es.eigenvectors().col(i) * inv_sqrt_h;
    detail::fix_sign(v);
    spec.vectors.emplace_back(op.grid, std::move(v));
  }
  spec.groups = detail::group_by_gap(spec.lambdas, Scalar(kGroupRelTol));
  return spec;
}

/// The variational recursion: lambda_1 minimizes the mixed Rayleigh quotient,
/// lambda_{k+1} minimizes it over the mixed-orthogonal complement of the
/// previous eigenfunctions. Minimization is inverse-power iteration with
/// Gram-Schmidt re-deflation in the mixed inner product each sweep; converged
/// when the Rayleigh quotient stops moving relatively by tol.
template <class Scalar>
Spectrum<Scalar> solve_recursive_rayleigh(const OperatorMatrix<Scalar>& op, int k,
                                          Scalar tol = Scalar(1e-12), int max_iter = 10000) {
  const Index n = op.grid.n;
  if (k < 1 || k > n) throw DomainError("solve_recursive_rayleigh: k must lie in [1, n]");

  Eigen::LLT<DenseMatrix<Scalar>> llt(op.matrix);
  if (llt.info() != Eigen::Success)
    throw IndefiniteForm("solve_recursive_rayleigh: the quadratic form is not positive definite");

  const Scalar h = op.grid.h();
  // mixed inner product through the assembled matrix (identical to the
  // node-wise sum by linearity of the assembly)
  auto mixed = [&](const Vector<Scalar>& a, const Vector<Scalar>& b) {
    return h * b.dot(op.matrix * a);
  };

  Spectrum<Scalar> spec;
  spec.method = SpectrumMethod::Recursive;
  std::vector<Vector<Scalar>> basis;          // found eigenvectors
  std::vector<Scalar> basis_mixed_norm_sq;    // <e_j, e_j>

  for (int j = 0; j < k; ++j) {
    Rng rng = Rng::stream(0x6D69786672616365ULL, static_cast<std::uint64_t>(j));
    Vector<Scalar> v(n);
    for (Index i = 0; i < n; ++i) v[i] = Scalar(rng.symmetric());

    auto deflate = [&](Vector<Scalar>& w) {
      for (std::size_t m = 0; m < basis.size(); ++m)
        w -= basis[m] * (mixed(w, basis[m]) / basis_mixed_norm_sq[m]);
    };

    deflate(v);
    v /= std::sqrt(h) * v.norm();

    Scalar rho_prev = 0;
    Scalar rho = h * v.dot(op.matrix * v);
    bool converged = false;
    for (int iter = 0; iter < max_iter; ++iter) {
      Vector<Scalar> w = llt.solve(v);
      deflate(w);
      const Scalar norm = std::sqrt(h) * w.norm();
      if (!(norm > 0))
        throw ConvergenceFailure("solve_recursive_rayleigh: deflated iterate vanished");
      w /= norm;
      rho_prev = rho;
      rho = h * w.dot(op.matrix * w);
      v = std::move(w);
      if (std::abs(rho - rho_prev) < tol * std::abs(rho)) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw ConvergenceFailure("solve_recursive_rayleigh: max_iter exceeded");

    detail::fix_sign(v);
    basis.push_back(v);
    basis_mixed_norm_sq.push_back(mixed(v, v));
    spec.lambdas.push_back(rho);
    spec.vectors.emplace_back(op.grid, std::move(v));
  }
  spec.groups = detail::group_by_gap(spec.lambdas, Scalar(kGroupRelTol));
  return spec;
}

/// L2 orthonormality and mixed-form orthogonality attained by a spectrum.
template <class Scalar>
struct OrthogonalityReport {
  Scalar max_l2_deviation = 0;     // |h e_i^T e_j - delta_ij|
  Scalar max_mixed_offdiag = 0;    // |<e_i, e_j>|, i != j
  bool pass = false;
};

template <class Scalar>
OrthogonalityReport<Scalar> verify_orthogonality(const Spectrum<Scalar>& spec,
                                                 const OperatorMatrix<Scalar>& op) {
  OrthogonalityReport<Scalar> report;
  const int k = static_cast<int>(spec.vectors.size());
  const Scalar h = op.grid.h();
  Scalar lambda_max = 0;
  for (Scalar l : spec.lambdas) lambda_max = std::max(lambda_max, std::abs(l));
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j <= i; ++j) {
      const Scalar dot = h * spec.vectors[i].values.dot(spec.vectors[j].values);
      const Scalar expected = (i == j) ? Scalar(1) : Scalar(0);
      report.max_l2_deviation = std::max(report.max_l2_deviation, std::abs(dot - expected));
      if (i != j) {
        const Scalar x = inner(op, spec.vectors[i], spec.vectors[j]);
        report.max_mixed_offdiag = std::max(report.max_mixed_offdiag, std::abs(x));
      }
    }
  }
  report.pass = report.max_l2_deviation <= Scalar(1e-10) &&
                report.max_mixed_offdiag <= Scalar(1e-8) * std::max(lambda_max, Scalar(1));
  return report;
}

/// Testing the eigen-equation for e against itself: <e_k, e_k> = lambda_k for
/// L2-normalized eigenfunctions.
template <class Scalar>
struct RayleighIdentityReport {
  Scalar max_deviation = 0;  // |<e,e> - lambda| / (1 + lambda)
  bool pass = false;
};

template <class Scalar>
RayleighIdentityReport<Scalar> rayleigh_identity(const Spectrum<Scalar>& spec,
                                                 const OperatorMatrix<Scalar>& op) {
  RayleighIdentityReport<Scalar> report;
  for (std::size_t i = 0; i < spec.vectors.size(); ++i) {
    const Scalar energy = inner(op, spec.vectors[i], spec.vectors[i]);
    report.max_deviation =
        std::max(report.max_deviation,
                 std::abs(energy - spec.lambdas[i]) / (1 + std::abs(spec.lambdas[i])));
  }
  report.pass = report.max_deviation <= Scalar(1e-8);
  return report;
}

/// Partition into near-degenerate groups plus a span check: random in-group
/// combinations must satisfy the eigen-relation, mixing adjacent groups must
/// break it.
template <class Scalar>
struct MultiplicityReport {
  std::vector<std::vector<int>> groups;
  Scalar max_in_group_residual = 0;
  Scalar min_cross_residual = std::numeric_limits<Scalar>::infinity();
  bool verified = false;
};

template <class Scalar>
MultiplicityReport<Scalar> multiplicity_groups(const Spectrum<Scalar>& spec,
                                               const OperatorMatrix<Scalar>& op,
                                               Scalar rel_tol = Scalar(kGroupRelTol),
                                               std::uint64_t seed = 2024) {
  MultiplicityReport<Scalar> report;
  report.groups = detail::group_by_gap(spec.lambdas, rel_tol);

  auto residual = [&](const Vector<Scalar>& v, Scalar lambda) {
    return (op.matrix * v - lambda * v).norm() / (std::max(std::abs(lambda), Scalar(1)) * v.norm());
  };

  Rng rng(seed);
  for (std::size_t g = 0; g < report.groups.size(); ++g) {
    const auto& group = report.groups[g];
    Scalar lambda_bar = 0;
    for (int idx : group) lambda_bar += spec.lambdas[idx];
    lambda_bar /= Scalar(group.size());

    Vector<Scalar> combo = Vector<Scalar>::Zero(op.grid.n);
    for (int idx : group) combo += Scalar(rng.symmetric()) * spec.vectors[idx].values;
    report.max_in_group_residual =
        std::max(report.max_in_group_residual, residual(combo, lambda_bar));

    if (g + 1 < report.groups.size()) {
      Vector<Scalar> mixed_combo = combo + spec.vectors[report.groups[g + 1].front()].values;
      report.min_cross_residual =
          std::min(report.min_cross_residual, residual(mixed_combo, lambda_bar));
    }
  }
  report.verified = report.max_in_group_residual <= Scalar(1e-7) &&
                    (report.groups.size() < 2 || report.min_cross_residual > Scalar(1e-7));
  return report;
}

/// Coefficients of f against the mixed-normalized eigenbasis and the mixed
/// norm of the remainder after each partial sum (residuals[j] is the
/// remainder after j terms).
template <class Scalar>
struct Expansion {
  Vector<Scalar> coefficients;
  std::vector<Scalar> residuals;
};

template <class Scalar>
Expansion<Scalar> expand_in_eigenbasis(const GridFunction<Scalar>& f,
                                       const Spectrum<Scalar>& spec,
                                       const OperatorMatrix<Scalar>& op) {
  const Index n = op.grid.n;
  if (static_cast<Index>(spec.vectors.size()) != n)
    throw DomainError("expand_in_eigenbasis: needs the full spectrum (k = n)");
  if (!(f.grid == op.grid)) throw GridMismatch("expand_in_eigenbasis: wrong grid");

  Expansion<Scalar> out;
  out.coefficients.resize(n);
  std::vector<Vector<Scalar>> unit(n);
  for (Index i = 0; i < n; ++i) {
    const GridFunction<Scalar>& e = spec.vectors[i];
    const Scalar mixed_norm = norm_mixed(op, e);
    unit[i] = e.values / mixed_norm;
    GridFunction<Scalar> tilde(op.grid, unit[i]);
    out.coefficients[i] = inner(op, f, tilde);
  }

  Vector<Scalar> remainder = f.values;
  out.residuals.push_back(norm_mixed(op, f));
  for (Index i = 0; i < n; ++i) {
    remainder -= out.coefficients[i] * unit[i];
    out.residuals.push_back(norm_mixed(op, GridFunction<Scalar>(op.grid, remainder)));
  }
  return out;
}

}  // namespace mixfrac

#endif  // MIXFRAC_EIGENSOLVER_HPP
