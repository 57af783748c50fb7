#ifndef MIXFRAC_MEASURE_HPP
#define MIXFRAC_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "mixfrac/common.hpp"
#include "mixfrac/quadrature.hpp"

namespace mixfrac {

/// One building block of a nonnegative measure on [0, 1]: either a point mass
/// or a constant density over a subinterval of orders.
template <class Scalar>
struct MeasureComponent {
  enum class Kind { Atom, Density };

  Kind kind;
  Scalar location = 0;  // atom position in [0, 1]
  Scalar weight = 0;    // atom mass, > 0
  Scalar s_lo = 0;      // density support, 0 <= s_lo < s_hi <= 1
  Scalar s_hi = 0;
  Scalar coeff = 0;     // density value, >= 0

  static MeasureComponent atom(Scalar s, Scalar w) {
    if (!(s >= 0 && s <= 1)) throw DomainError("atom location must lie in [0,1]");
    if (!(w > 0)) throw DomainError("atom weight must be positive");
    MeasureComponent c;
    c.kind = Kind::Atom;
    c.location = s;
    c.weight = w;
    return c;
  }

  static MeasureComponent density(Scalar lo, Scalar hi, Scalar value) {
    if (!(lo >= 0 && lo < hi && hi <= 1))
      throw DomainError("density support must satisfy 0 <= s_lo < s_hi <= 1");
    if (!(value >= 0)) throw DomainError("density coefficient must be nonnegative");
    MeasureComponent c;
    c.kind = Kind::Density;
    c.s_lo = lo;
    c.s_hi = hi;
    c.coeff = value;
    return c;
  }
};

/// mu = mu_plus - mu_minus with the threshold sbar separating the orders where
/// negative mass is admissible ([0, sbar)) from where it is not ([sbar, 1]).
template <class Scalar>
struct SignedMeasure {
  std::vector<MeasureComponent<Scalar>> plus;
  std::vector<MeasureComponent<Scalar>> minus;
  Scalar sbar = 1;

  SignedMeasure(std::vector<MeasureComponent<Scalar>> plus_parts,
                std::vector<MeasureComponent<Scalar>> minus_parts, Scalar threshold)
      : plus(std::move(plus_parts)), minus(std::move(minus_parts)), sbar(threshold) {
    if (!(sbar > 0 && sbar <= 1)) throw DomainError("sbar must lie in (0,1]");
    if (plus.empty() && minus.empty()) throw DomainError("measure has no components");
  }
};

/// Outcome of checking the structural hypotheses on a signed measure.
template <class Scalar>
struct HypothesisReport {
  bool mu0_ok = false;  // positive mass at or above sbar
  bool mu1_ok = false;  // no negative mass at or above sbar
  Scalar gamma = 0;     // mu_minus([0,sbar)) / mu_plus([sbar,1]), when mu0 holds
  std::optional<Scalar> s_sharp;  // sup of the plus support within [sbar,1]

  bool ok() const { return mu0_ok && mu1_ok; }
};

/// A point of the discretized measure: ∫ f dmu ≈ Σ sign·w·f(s).
template <class Scalar>
struct QuadratureNode {
  Scalar s = 0;
  Scalar w = 0;
  int sign = +1;
};

/// Mass of the components over the closed interval [lo, hi]. Atoms count when
/// their location lies in the interval (endpoints included); densities
/// contribute coeff times the overlap length.
template <class Scalar>
Scalar mass(const std::vector<MeasureComponent<Scalar>>& components, Scalar lo, Scalar hi) {
  if (!(lo <= hi && lo >= 0 && hi <= 1)) throw DomainError("mass: bad interval");
  Scalar total = 0;
  for (const auto& c : components) {
    if (c.kind == MeasureComponent<Scalar>::Kind::Atom) {
      if (c.location >= lo && c.location <= hi) total += c.weight;
    } else {
      const Scalar a = std::max(lo, c.s_lo);
      const Scalar b = std::min(hi, c.s_hi);
      if (b > a) total += c.coeff * (b - a);
    }
  }
  return total;
}

namespace detail {

/// Mass over the half-open [lo, hi): atoms exactly at hi are excluded.
/// Density overlap is unaffected by the open endpoint.
template <class Scalar>
Scalar mass_half_open(const std::vector<MeasureComponent<Scalar>>& components, Scalar lo,
                      Scalar hi) {
  Scalar total = mass(components, lo, hi);
  for (const auto& c : components)
    if (c.kind == MeasureComponent<Scalar>::Kind::Atom && c.location == hi && hi >= lo)
      total -= c.weight;
  return total;
}

}  // namespace detail

/// Checks the structural hypotheses: positive mass at or above sbar, no
/// negative mass there, and the ratio gamma of low negative mass to high
/// positive mass. s_sharp is taken as large as possible.
template <class Scalar>
HypothesisReport<Scalar> validate_hypotheses(const SignedMeasure<Scalar>& m) {
  HypothesisReport<Scalar> report;
  const Scalar high_plus = mass(m.plus, m.sbar, Scalar(1));
  report.mu0_ok = high_plus > 0;
  report.mu1_ok = mass(m.minus, m.sbar, Scalar(1)) == 0;
  if (report.mu0_ok) {
    report.gamma = detail::mass_half_open(m.minus, Scalar(0), m.sbar) / high_plus;
    Scalar top = m.sbar;
    for (const auto& c : m.plus) {
      if (c.kind == MeasureComponent<Scalar>::Kind::Atom) {
        if (c.location >= m.sbar) top = std::max(top, c.location);
      } else if (c.coeff > 0 && c.s_hi > std::max(c.s_lo, m.sbar)) {
        top = std::max(top, c.s_hi);
      }
    }
    report.s_sharp = top;
  }
  return report;
}

/// Throws unless both hypotheses hold.
template <class Scalar>
HypothesisReport<Scalar> require_hypotheses(const SignedMeasure<Scalar>& m) {
  HypothesisReport<Scalar> report = validate_hypotheses(m);
  if (!report.mu0_ok)
    throw HypothesisViolation("mu0 fails: no positive mass in [sbar, 1]");
  if (!report.mu1_ok)
    throw HypothesisViolation("mu1 fails: negative mass present in [sbar, 1]");
  return report;
}

/// Turns the measure into a finite node list: atoms pass through, each density
/// piece (split at sbar when it straddles it) becomes a Gauss-Legendre rule.
/// Order is deterministic: plus nodes before minus nodes, each ascending in s.
template <class Scalar>
std::vector<QuadratureNode<Scalar>> atomize(const SignedMeasure<Scalar>& m,
                                            int nodes_per_piece = 32) {
  if (nodes_per_piece < 1) throw DomainError("atomize: nodes_per_piece must be >= 1");

  auto side_nodes = [&](const std::vector<MeasureComponent<Scalar>>& side, int sign) {
    std::vector<QuadratureNode<Scalar>> nodes;
    for (const auto& c : side) {
      if (c.kind == MeasureComponent<Scalar>::Kind::Atom) {
        nodes.push_back({c.location, c.weight, sign});
        continue;
      }
      if (c.coeff == 0) continue;
      std::vector<std::pair<Scalar, Scalar>> pieces;
      if (c.s_lo < m.sbar && m.sbar < c.s_hi) {
        pieces.push_back({c.s_lo, m.sbar});
        pieces.push_back({m.sbar, c.s_hi});
      } else {
        pieces.push_back({c.s_lo, c.s_hi});
      }
      for (auto [lo, hi] : pieces) {
        QuadratureRule<Scalar> rule = gauss_legendre(nodes_per_piece, lo, hi);
        for (int i = 0; i < nodes_per_piece; ++i)
          nodes.push_back({rule.points[i], c.coeff * rule.weights[i], sign});
      }
    }
    std::stable_sort(nodes.begin(), nodes.end(),
                     [](const auto& a, const auto& b) { return a.s < b.s; });
    return nodes;
  };

  std::vector<QuadratureNode<Scalar>> nodes = side_nodes(m.plus, +1);
  std::vector<QuadratureNode<Scalar>> minus_nodes = side_nodes(m.minus, -1);
  nodes.insert(nodes.end(), minus_nodes.begin(), minus_nodes.end());
  return nodes;
}

}  // namespace mixfrac

#endif  // MIXFRAC_MEASURE_HPP
