#pragma once

// Coefficient p and boundary datum g.

#include "critlab/grid.hpp"

#include <algorithm>
#include <optional>
#include <string>

namespace critlab {

enum class WeightKind { constant, power_bump, tabulated };

inline const char* to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::constant: return "constant";
    case WeightKind::power_bump: return "power_bump";
    case WeightKind::tabulated: return "tabulated";
  }
  return "unknown";
}

/// p(x). The power bump is p0 + gamma |x - a|^alpha, frozen at its value on
/// |x - a| = R_bump outside the bump ball; a tabulated weight is a radial
/// profile about `center`, linear between entries and flat past the last one.
template <typename Scalar>
struct WeightSpec {
  WeightKind kind = WeightKind::constant;
  Scalar p0 = 1;
  Scalar gamma = 0;
  Scalar alpha = 2;
  Scalar bump_radius = 1;
  Point<Scalar> center;  // empty means the origin
  Vector<Scalar> table_radii;
  Vector<Scalar> table_values;

  static WeightSpec constant(Scalar value) {
    WeightSpec p;
    p.kind = WeightKind::constant;
    p.p0 = value;
    return p;
  }

  static WeightSpec power_bump(Scalar p0, Scalar gamma, Scalar alpha, Point<Scalar> center,
                               Scalar bump_radius) {
    if (!(alpha > 1)) throw Error(ErrorKind::validation, "power_bump alpha must be > 1");
    if (!(gamma > 0)) throw Error(ErrorKind::validation, "power_bump gamma must be > 0");
    if (!(bump_radius > 0)) throw Error(ErrorKind::validation, "power_bump R_bump must be > 0");
    WeightSpec p;
    p.kind = WeightKind::power_bump;
    p.p0 = p0;
    p.gamma = gamma;
    p.alpha = alpha;
    p.center = std::move(center);
    p.bump_radius = bump_radius;
    return p;
  }

  static WeightSpec tabulated(Vector<Scalar> radii, Vector<Scalar> values,
                              Point<Scalar> center = {}) {
    if (radii.size() < 1 || radii.size() != values.size())
      throw Error(ErrorKind::validation, "tabulated weight needs matching, nonempty radii/values");
    for (Index i = 0; i + 1 < radii.size(); ++i)
      if (!(radii[i + 1] > radii[i]))
        throw Error(ErrorKind::validation, "tabulated radii must be strictly increasing");
    WeightSpec p;
    p.kind = WeightKind::tabulated;
    p.table_radii = std::move(radii);
    p.table_values = std::move(values);
    p.center = std::move(center);
    return p;
  }

  /// Evaluation without any domain check.
  Scalar operator()(const Point<Scalar>& x) const {
    switch (kind) {
      case WeightKind::constant: return p0;
      case WeightKind::power_bump: {
        const Scalar r = std::min(distance(x), bump_radius);
        return p0 + gamma * std::pow(r, alpha);
      }
      case WeightKind::tabulated: {
        const Scalar r = distance(x);
        const Index last = table_radii.size() - 1;
        if (r <= table_radii[0]) return table_values[0];
        if (r >= table_radii[last]) return table_values[last];
        const auto* begin = table_radii.data();
        const Index hi = Index(std::upper_bound(begin, begin + last + 1, r) - begin);
        const Scalar t = (r - table_radii[hi - 1]) / (table_radii[hi] - table_radii[hi - 1]);
        return (1 - t) * table_values[hi - 1] + t * table_values[hi];
      }
    }
    return p0;
  }

  /// Declared lower bound c1 (the global minimum for the analytic kinds).
  Scalar lower_bound() const {
    if (kind == WeightKind::tabulated) return table_values.minCoeff();
    return p0;
  }
  /// Declared upper bound c2.
  Scalar upper_bound() const {
    switch (kind) {
      case WeightKind::constant: return p0;
      case WeightKind::power_bump: return p0 + gamma * std::pow(bump_radius, alpha);
      case WeightKind::tabulated: return table_values.maxCoeff();
    }
    return p0;
  }

  /// Radii where p loses smoothness (useful as quadrature breakpoints).
  std::vector<Scalar> kinks() const {
    if (kind == WeightKind::power_bump) return {bump_radius};
    if (kind == WeightKind::tabulated)
      return std::vector<Scalar>(table_radii.data(), table_radii.data() + table_radii.size());
    return {};
  }

  bool centered_at_origin() const { return center.size() == 0 || center.norm() == 0; }

 private:
  Scalar distance(const Point<Scalar>& x) const {
    return center.size() == 0 ? x.norm() : (x - center).norm();
  }
};

/// c * p, exactly (all the analytic kinds are linear in their amplitudes).
template <typename Scalar>
WeightSpec<Scalar> scaled(WeightSpec<Scalar> p, Scalar c) {
  p.p0 *= c;
  p.gamma *= c;
  p.table_values *= c;
  return p;
}

template <typename Scalar>
Scalar eval_weight(const WeightSpec<Scalar>& p, const Domain<Scalar>& domain,
                   const Point<Scalar>& x) {
  if (!contains(domain, x))
    throw Error(ErrorKind::out_of_domain, "weight evaluated outside the domain");
  return p(x);
}

/// Raises if p cannot live on this grid (dimension or, for radial grids, a
/// center away from the origin).
template <typename Scalar>
void require_compatible(const WeightSpec<Scalar>& p, const Grid<Scalar>& grid) {
  const int dim = layout(grid).dimension();
  if (p.center.size() != 0 && p.center.size() != dim)
    throw Error(ErrorKind::dimension_mismatch, "weight center dimension " +
                                                   std::to_string(p.center.size()) +
                                                   " does not match grid dimension " +
                                                   std::to_string(dim));
  if (std::holds_alternative<RadialGrid<Scalar>>(grid) && !p.centered_at_origin())
    throw Error(ErrorKind::dimension_mismatch, "radial grids need weights centered at the origin");
  if (p.kind == WeightKind::power_bump && p.center.size() != 0 &&
      !(inner_distance(grid_domain(grid), p.center) > 0))
    throw Error(ErrorKind::geometry, "power_bump center must be interior to the domain");
}

template <typename Scalar>
struct WeightReport {
  Scalar min = 0;
  Scalar max = 0;
  Index argmin = 0;
  Index argmax = 0;
};

/// Measures p on every node; raises if p <= 0 somewhere or leaves [c1, c2].
template <typename Scalar>
WeightReport<Scalar> validate(const WeightSpec<Scalar>& p, const Grid<Scalar>& grid) {
  require_compatible(p, grid);
  if (p.kind == WeightKind::tabulated)
    for (Index i = 0; i < p.table_values.size(); ++i)
      if (!(p.table_values[i] > 0))
        throw Error(ErrorKind::validation,
                    "tabulated weight entry " + std::to_string(i) + " is not positive");
  const Index nodes = layout(grid).node_count();
  WeightReport<Scalar> report;
  report.min = std::numeric_limits<Scalar>::infinity();
  report.max = -report.min;
  const Scalar c1 = p.lower_bound(), c2 = p.upper_bound();
  const Scalar slack = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * std::abs(c2);
  for (Index i = 0; i < nodes; ++i) {
    const Scalar value = p(node_point(grid, i));
    if (!std::isfinite(value) || !(value > 0) || value < c1 - slack || value > c2 + slack)
      throw Error(ErrorKind::validation, "weight bound violated at node " + std::to_string(i) +
                                             " (value " + std::to_string(double(value)) + ")");
    if (value < report.min) report.min = value, report.argmin = i;
    if (value > report.max) report.max = value, report.argmax = i;
  }
  if (!(c1 > 0)) throw Error(ErrorKind::validation, "weight lower bound c1 must be > 0");
  return report;
}

/// Weighted Dirichlet energy with an explicit compatibility check.
template <typename Scalar>
Scalar h1_seminorm_weighted(const Field<Scalar>& f, const WeightSpec<Scalar>& p) {
  require_compatible(p, f.grid());
  return h1_seminorm_weighted(f, [&p](const Point<Scalar>& x) { return p(x); });
}

enum class TraceFunction { x1x2x3, exp_cos, linear };

inline const char* to_string(TraceFunction f) {
  switch (f) {
    case TraceFunction::x1x2x3: return "x1x2x3";
    case TraceFunction::exp_cos: return "exp_cos";
    case TraceFunction::linear: return "linear";
  }
  return "unknown";
}

/// Dirichlet datum g: a constant or the trace of a named harmonic function
/// (x1 x2 x3, exp(x1) cos(x2), x1 + x2 + x3) scaled by `value`.
template <typename Scalar>
struct BoundarySpec {
  enum class Kind { constant, trace_of };
  Kind kind = Kind::constant;
  Scalar value = 0;
  TraceFunction function = TraceFunction::x1x2x3;
  bool nonnegative = false;

  static BoundarySpec constant(Scalar c, bool nonnegative = false) {
    BoundarySpec g;
    g.kind = Kind::constant;
    g.value = c;
    g.nonnegative = nonnegative;
    return g;
  }

  static BoundarySpec trace_of(TraceFunction f, Scalar scale = 1, bool nonnegative = false) {
    BoundarySpec g;
    g.kind = Kind::trace_of;
    g.function = f;
    g.value = scale;
    g.nonnegative = nonnegative;
    return g;
  }

  Scalar operator()(const Point<Scalar>& x) const {
    if (kind == Kind::constant) return value;
    if (x.size() < 3 && function != TraceFunction::linear)
      throw Error(ErrorKind::dimension_mismatch, "trace function needs at least 3 coordinates");
    switch (function) {
      case TraceFunction::x1x2x3: return value * x[0] * x[1] * x[2];
      case TraceFunction::exp_cos: return value * std::exp(x[0]) * std::cos(x[1]);
      case TraceFunction::linear: return value * x.sum();
    }
    return 0;
  }
};

/// g sampled on the boundary nodes, in boundary-node order. Enforces the
/// sign flag (g >= 0 and g not identically zero).
template <typename Scalar>
Vector<Scalar> boundary_values(const BoundarySpec<Scalar>& g, const Grid<Scalar>& grid) {
  const auto& nodes = layout(grid).boundary_nodes();
  Vector<Scalar> values(Index(nodes.size()));
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    values[Index(k)] = g(node_point(grid, nodes[k]));
    if (!std::isfinite(values[Index(k)]))
      throw Error(ErrorKind::validation, "boundary datum is not finite at node " +
                                             std::to_string(nodes[k]));
  }
  if (g.nonnegative) {
    if ((values.array() < 0).any())
      throw Error(ErrorKind::validation, "boundary datum flagged nonnegative takes negative values");
    if ((values.array() == 0).all())
      throw Error(ErrorKind::validation, "boundary datum flagged nonnegative vanishes identically");
  }
  return values;
}

}  // namespace critlab
