#pragma once

// Aubin-Talenti bubbles: constants, truncated bubbles, their energies and
// norms, and power-law fits of the epsilon -> 0 remainders.

#include "critlab/elliptic.hpp"
#include "critlab/quadrature.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <utility>
#include <vector>

namespace critlab {

/// J(s, m) = int_0^inf r^s / (1 + r^2)^m dr = B((s+1)/2, m - (s+1)/2) / 2.
template <typename Scalar>
Scalar beta_integral(Scalar s, Scalar m) {
  const Scalar a = (s + 1) / 2, b = m - a;
  if (!(b > 0)) throw Error(ErrorKind::domain, "J(s, m) diverges for m <= (s+1)/2");
  return std::exp(std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b)) / 2;
}

/// J(s, m) by adaptive quadrature after r = tan(theta).
template <typename Scalar>
Scalar quadrature_integral(Scalar s, Scalar m) {
  if (!(m - (s + 1) / 2 > 0)) throw Error(ErrorKind::domain, "J(s, m) diverges");
  const Scalar c = 2 * m - s - 2;
  auto f = [s, c](Scalar t) { return std::pow(std::sin(t), s) * std::pow(std::cos(t), c); };
  return integrate_adaptive<Scalar>(f, 0, pi<Scalar>() / 2, Scalar(1e-15));
}

/// pi n (n-2) (Gamma(n/2) / Gamma(n))^{2/n}.
template <typename Scalar>
Scalar sobolev_constant(int n) {
  if (n < 3) throw Error(ErrorKind::domain, "Sobolev constant needs n >= 3");
  const Scalar ratio = std::exp(std::lgamma(Scalar(n) / 2) - std::lgamma(Scalar(n)));
  return pi<Scalar>() * Scalar(n * (n - 2)) * std::pow(ratio, Scalar(2) / Scalar(n));
}

template <typename Scalar>
struct BubbleConstants {
  int n = 0;
  Scalar q = 0;
  Scalar omega = 0;
  Scalar K1 = 0;
  Scalar K2 = 0;
  Scalar K3 = std::numeric_limits<Scalar>::quiet_NaN();
  bool k3_applicable = false;  // only n >= 5; n = 3, 4 are the linear / log cases
  Scalar D = 0;
  Scalar S = 0;                // K1 / K2^{2/q}
  Scalar c_n = 0;              // -Delta U = c_n U^{q-1}
  /// Largest relative gap between quadrature and Beta values of J.
  Scalar quadrature_discrepancy = 0;
};

template <typename Scalar>
BubbleConstants<Scalar> analytic_constants(int n) {
  if (n < 3) throw Error(ErrorKind::domain, "bubble constants need n >= 3");
  BubbleConstants<Scalar> c;
  c.n = n;
  c.q = critical_exponent<Scalar>(n);
  c.omega = sphere_area<Scalar>(n);
  const Scalar nn = Scalar(n);
  Scalar gap = 0;
  auto J = [&gap](Scalar s, Scalar m) {
    const Scalar exact = beta_integral(s, m);
    const Scalar quad = quadrature_integral(s, m);
    gap = std::max(gap, std::abs(quad - exact) / exact);
    return quad;
  };
  c.K1 = (nn - 2) * (nn - 2) * c.omega * J(nn + 1, nn);
  c.K2 = c.omega * J(nn - 1, nn);
  if (n >= 5) {
    c.K3 = c.omega * J(nn - 1, nn - 2);
    c.k3_applicable = true;
  }
  c.D = c.omega * J(nn - 1, (nn + 2) / 2);
  c.S = c.K1 / std::pow(c.K2, 2 / c.q);
  c.c_n = nn * (nn - 2);
  c.quadrature_discrepancy = gap;
  return c;
}

/// U_{a,eps}(r) = (eps / (eps^2 + r^2))^{(n-2)/2}.
template <typename Scalar>
Scalar talenti(Scalar r, Scalar eps, int n) {
  return std::pow(eps / (eps * eps + r * r), Scalar(n - 2) / 2);
}

template <typename Scalar>
Scalar talenti_slope(Scalar r, Scalar eps, int n) {
  return -Scalar(n - 2) * r * std::pow(eps, Scalar(n - 2) / 2) *
         std::pow(eps * eps + r * r, -Scalar(n) / 2);
}

/// C^1 cubic smoothstep: 1 on [0, rc], 0 beyond 2 rc.
template <typename Scalar>
Scalar cutoff(Scalar r, Scalar rc) {
  const Scalar s = std::clamp((r - rc) / rc, Scalar(0), Scalar(1));
  return 1 - s * s * (3 - 2 * s);
}

template <typename Scalar>
Scalar cutoff_slope(Scalar r, Scalar rc) {
  const Scalar s = std::clamp((r - rc) / rc, Scalar(0), Scalar(1));
  return -6 * s * (1 - s) / rc;
}

template <typename Scalar>
struct BubbleParams {
  Point<Scalar> center;
  Scalar epsilon = 0;
  Scalar cutoff = 0;
  int dimension = 0;
};

/// r_cut = dist(a, boundary) / 4.
template <typename Scalar>
Scalar default_cutoff(const Grid<Scalar>& grid, const Point<Scalar>& center) {
  return inner_distance(grid_domain(grid), center) / 4;
}

template <typename Scalar>
void check_bubble(const BubbleParams<Scalar>& bp, const Grid<Scalar>& grid) {
  if (!(bp.epsilon > 0)) throw Error(ErrorKind::validation, "bubble scale epsilon must be > 0");
  if (!(bp.cutoff > 0)) throw Error(ErrorKind::validation, "bubble cutoff radius must be > 0");
  if (bp.dimension != layout(grid).dimension() || bp.center.size() != bp.dimension)
    throw Error(ErrorKind::dimension_mismatch, "bubble dimension does not match the grid");
  if (std::holds_alternative<RadialGrid<Scalar>>(grid) && bp.center.norm() != 0)
    throw Error(ErrorKind::geometry, "radial grids only carry bubbles centered at the origin");
  if (!(2 * bp.cutoff < inner_distance(grid_domain(grid), bp.center)))
    throw Error(ErrorKind::geometry, "cutoff ball B(a, 2 r_cut) is not inside the domain");
}

/// Nodal samples of psi(|x - a|) U_{a,eps}(x).
template <typename Scalar>
Field<Scalar> truncated_bubble(const BubbleParams<Scalar>& bp, GridPtr<Scalar> grid) {
  check_bubble(bp, *grid);
  return Field<Scalar>::sample(std::move(grid), [&bp](const Point<Scalar>& x) {
    const Scalar r = (x - bp.center).norm();
    return cutoff(r, bp.cutoff) * talenti(r, bp.epsilon, bp.dimension);
  });
}

/// Composite 8-point Gauss-Legendre on the radial cells, split at `breaks`;
/// weights include the shell factor omega r^{n-1}.
template <typename Scalar>
struct RadialRule {
  std::vector<Scalar> r;
  std::vector<Scalar> w;
};

template <typename Scalar>
RadialRule<Scalar> panel_rule(const RadialGrid<Scalar>& grid, std::vector<Scalar> breaks) {
  static const GaussRule<Scalar> gauss = gauss_legendre<Scalar>(8);
  const auto& nodes = grid.nodes();
  std::vector<Scalar> points(nodes.data(), nodes.data() + nodes.size());
  for (Scalar b : breaks)
    if (b > 0 && b < grid.outer_radius()) points.push_back(b);
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  RadialRule<Scalar> rule;
  rule.r.reserve(points.size() * gauss.nodes.size());
  rule.w.reserve(points.size() * gauss.nodes.size());
  const int n = grid.dimension();
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    const Scalar a = points[i], b = points[i + 1];
    const Scalar mid = (a + b) / 2, half = (b - a) / 2;
    for (std::size_t k = 0; k < gauss.nodes.size(); ++k) {
      const Scalar r = mid + half * gauss.nodes[k];
      rule.r.push_back(r);
      rule.w.push_back(half * gauss.weights[k] * grid.sphere_area() * std::pow(r, n - 1));
    }
  }
  return rule;
}

template <typename Scalar>
struct BubbleQuantity {
  Scalar value = 0;
  bool resolved = false;   // at least 8 nodes inside radius epsilon
  Index nodes_in_core = 0;
};

template <typename Scalar>
Index nodes_in_core(const BubbleParams<Scalar>& bp, const Grid<Scalar>& grid) {
  if (const auto* radial = std::get_if<RadialGrid<Scalar>>(&grid))
    return radial->nodes_inside(bp.epsilon);
  const Vector<Scalar> d = distances_from(grid, bp.center);
  return Index((d.array() < bp.epsilon).count());
}

namespace detail {

template <typename Scalar, typename Integrand>
BubbleQuantity<Scalar> bubble_quantity(const BubbleParams<Scalar>& bp, const Grid<Scalar>& grid,
                                       std::vector<Scalar> breaks, const Integrand& integrand) {
  check_bubble(bp, grid);
  const auto& radial = as_radial(grid);
  breaks.push_back(bp.cutoff);
  breaks.push_back(2 * bp.cutoff);
  const auto rule = panel_rule(radial, std::move(breaks));
  Scalar sum = 0;
  for (std::size_t k = 0; k < rule.r.size(); ++k) {
    const Scalar r = rule.r[k];
    const Scalar psi = cutoff(r, bp.cutoff);
    const Scalar u = talenti(r, bp.epsilon, bp.dimension);
    const Scalar du = cutoff_slope(r, bp.cutoff) * u + psi * talenti_slope(r, bp.epsilon, bp.dimension);
    sum += rule.w[k] * integrand(r, psi * u, du);
  }
  BubbleQuantity<Scalar> out;
  out.value = sum;
  out.nodes_in_core = nodes_in_core(bp, grid);
  out.resolved = out.nodes_in_core >= 8;
  return out;
}

}  // namespace detail

/// int p |grad u_{a,eps}|^2. Radial grids integrate the closed-form profile
/// panel by panel; tensor grids fall back to the nodal edge quadrature.
template <typename Scalar>
BubbleQuantity<Scalar> bubble_energy(const BubbleParams<Scalar>& bp, const WeightSpec<Scalar>& p,
                                     GridPtr<Scalar> grid) {
  require_compatible(p, *grid);
  if (std::holds_alternative<TensorGrid<Scalar>>(*grid)) {
    BubbleQuantity<Scalar> out;
    out.value = h1_seminorm_weighted(truncated_bubble(bp, grid), p);
    out.nodes_in_core = nodes_in_core(bp, *grid);
    out.resolved = out.nodes_in_core >= 8;
    return out;
  }
  Point<Scalar> x = Point<Scalar>::Zero(bp.dimension);
  return detail::bubble_quantity(bp, *grid, p.kinks(), [&](Scalar r, Scalar, Scalar du) {
    x[0] = r;
    return p(x) * du * du;
  });
}

/// int |u_{a,eps}|^q with q critical.
template <typename Scalar>
BubbleQuantity<Scalar> bubble_lq(const BubbleParams<Scalar>& bp, GridPtr<Scalar> grid) {
  const Scalar q = critical_exponent<Scalar>(bp.dimension);
  if (std::holds_alternative<TensorGrid<Scalar>>(*grid)) {
    BubbleQuantity<Scalar> out;
    out.value = integrate(truncated_bubble(bp, grid), q);
    out.nodes_in_core = nodes_in_core(bp, *grid);
    out.resolved = out.nodes_in_core >= 8;
    return out;
  }
  return detail::bubble_quantity(bp, *grid, {}, [q](Scalar, Scalar u, Scalar) {
    return std::pow(std::abs(u), q);
  });
}

/// int u_{a,eps}^2.
template <typename Scalar>
BubbleQuantity<Scalar> bubble_l2(const BubbleParams<Scalar>& bp, GridPtr<Scalar> grid) {
  if (std::holds_alternative<TensorGrid<Scalar>>(*grid)) {
    BubbleQuantity<Scalar> out;
    out.value = integrate(truncated_bubble(bp, grid), Scalar(2));
    out.nodes_in_core = nodes_in_core(bp, *grid);
    out.resolved = out.nodes_in_core >= 8;
    return out;
  }
  return detail::bubble_quantity(bp, *grid, {}, [](Scalar, Scalar u, Scalar) { return u * u; });
}

/// Leading scaling of int u_{a,eps}^2: eps^2 (n >= 5), eps^2 |log eps| (n = 4), eps (n = 3).
enum class L2Regime { power_two, log_two, linear };

inline L2Regime l2_regime(int n) {
  if (n >= 5) return L2Regime::power_two;
  return n == 4 ? L2Regime::log_two : L2Regime::linear;
}

enum class FitModel { power, log_power };
enum class Side { above, below };

inline const char* to_string(FitModel m) { return m == FitModel::power ? "power" : "log_power"; }

template <typename Scalar>
struct ExpansionFit {
  Scalar exponent = 0;
  Scalar coefficient = 0;  // signed: value ~ baseline + coefficient * eps^k (* |log eps|)
  Scalar residual = 0;     // RMS of the log-log residuals
  Scalar eps_min = 0;
  Scalar eps_max = 0;
  FitModel model = FitModel::power;
  bool inconclusive = false;
};

/// Least squares of log|value - baseline| (divided by |log eps| for the log
/// model) against log eps. `side` states where the values sit relative to
/// the baseline; a sample on the wrong side raises nonpositive-remainder.
template <typename Scalar>
ExpansionFit<Scalar> fit_expansion(const std::vector<std::pair<Scalar, Scalar>>& samples,
                                   Scalar baseline, FitModel model = FitModel::power,
                                   Side side = Side::above) {
  if (samples.size() < 5) throw Error(ErrorKind::precondition, "expansion fit needs >= 5 samples");
  const Index m = Index(samples.size());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 2> design(m, 2);
  Vector<Scalar> y(m);
  ExpansionFit<Scalar> fit;
  fit.model = model;
  fit.eps_min = std::numeric_limits<Scalar>::infinity();
  fit.eps_max = 0;
  for (Index i = 0; i < m; ++i) {
    const auto [eps, value] = samples[std::size_t(i)];
    if (!(eps > 0)) throw Error(ErrorKind::validation, "expansion fit needs eps > 0");
    const Scalar remainder = side == Side::above ? value - baseline : baseline - value;
    if (!(remainder > 0))
      throw Error(ErrorKind::nonpositive_remainder,
                  "sample " + std::to_string(i) + " does not sit strictly " +
                      (side == Side::above ? "above" : "below") + " the baseline");
    const Scalar scaled = model == FitModel::power ? remainder : remainder / std::abs(std::log(eps));
    design(i, 0) = std::log(eps);
    design(i, 1) = 1;
    y[i] = std::log(scaled);
    fit.eps_min = std::min(fit.eps_min, eps);
    fit.eps_max = std::max(fit.eps_max, eps);
  }
  const Eigen::Matrix<Scalar, 2, 1> beta = design.colPivHouseholderQr().solve(y);
  fit.exponent = beta[0];
  fit.coefficient = (side == Side::above ? 1 : -1) * std::exp(beta[1]);
  fit.residual = std::sqrt((design * beta - y).squaredNorm() / Scalar(m));
  fit.inconclusive = fit.residual > Scalar(0.2);
  return fit;
}

/// Geometric sweep of `count` scales in [lo, hi].
template <typename Scalar>
std::vector<Scalar> geometric_sweep(Scalar lo, Scalar hi, int count) {
  if (count < 2 || !(lo > 0) || !(hi > lo))
    throw Error(ErrorKind::validation, "sweep needs count >= 2 and 0 < lo < hi");
  std::vector<Scalar> eps(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    eps[std::size_t(i)] = lo * std::pow(hi / lo, Scalar(i) / Scalar(count - 1));
  return eps;
}

template <typename Scalar>
struct Superposition {
  Scalar c_eps = 0;
  Scalar c0 = 0;      // ((1 - int|u|^q) / K2)^{1/q}
  Scalar delta = 0;   // 1 - c_eps / c0
  Scalar residual = 0;
  int iterations = 0;
};

namespace detail {

/// u (piecewise linear between nodes) and u_{a,eps} on the bubble panel rule.
template <typename Scalar>
struct PairedSamples {
  std::vector<Scalar> w, u, bubble;
};

template <typename Scalar>
PairedSamples<Scalar> paired_samples(const Field<Scalar>& u, const BubbleParams<Scalar>& bp) {
  check_bubble(bp, u.grid());
  const auto& radial = as_radial(u.grid());
  const auto rule = panel_rule(radial, {bp.cutoff, 2 * bp.cutoff});
  PairedSamples<Scalar> s;
  s.w = rule.w;
  s.u.resize(rule.r.size());
  s.bubble.resize(rule.r.size());
  const auto& nodes = radial.nodes();
  Index cell = 0;
  for (std::size_t k = 0; k < rule.r.size(); ++k) {
    const Scalar r = rule.r[k];
    while (cell + 1 < radial.cells() && nodes[cell + 1] < r) ++cell;
    const Scalar t = (r - nodes[cell]) / (nodes[cell + 1] - nodes[cell]);
    s.u[k] = (1 - t) * u.values()[cell] + t * u.values()[cell + 1];
    s.bubble[k] = cutoff(r, bp.cutoff) * talenti(r, bp.epsilon, bp.dimension);
  }
  return s;
}

}  // namespace detail

/// The c > 0 with int |u + c u_{a,eps}|^q = 1 (safeguarded Newton), and its
/// relative deficit against the decoupled value c0.
template <typename Scalar>
Superposition<Scalar> superposition_root(const Field<Scalar>& u, const BubbleParams<Scalar>& bp) {
  const auto s = detail::paired_samples(u, bp);
  const Scalar q = critical_exponent<Scalar>(bp.dimension);
  auto lq = [&](Scalar c, Scalar* slope) {
    Scalar f = 0, df = 0;
    for (std::size_t k = 0; k < s.w.size(); ++k) {
      const Scalar z = s.u[k] + c * s.bubble[k];
      const Scalar az = std::abs(z);
      const Scalar p = std::pow(az, q - 1);
      f += s.w[k] * p * az;
      df += s.w[k] * q * p * (z < 0 ? -1 : 1) * s.bubble[k];
    }
    if (slope) *slope = df;
    return f;
  };
  const Scalar mass = lq(0, nullptr);
  if (!(mass < 1)) throw Error(ErrorKind::precondition, "superposition root needs ||u||_q < 1");
  const auto constants = analytic_constants<Scalar>(bp.dimension);
  Superposition<Scalar> out;
  out.c0 = std::pow((1 - mass) / constants.K2, 1 / q);

  // f(c) = int|u + c u_eps|^q - 1 is convex with f(0) < 0: one positive root.
  Scalar lo = 0, hi = std::max(out.c0, Scalar(1e-300));
  while (lq(hi, nullptr) < 1) hi *= 2;
  Scalar c = std::min(out.c0, hi);
  Scalar residual = 1;
  for (int it = 0; it < 200; ++it) {
    Scalar slope = 0;
    residual = lq(c, &slope) - 1;
    out.iterations = it + 1;
    if (std::abs(residual) <= Scalar(1e-12)) break;
    (residual > 0 ? hi : lo) = c;
    Scalar next = slope > 0 ? c - residual / slope : (lo + hi) / 2;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    if (hi - lo <= 4 * std::numeric_limits<Scalar>::epsilon() * hi) break;
    c = next;
  }
  out.c_eps = c;
  out.residual = residual;
  out.delta = 1 - c / out.c0;
  return out;
}

/// int u u_{a,eps}^{q-1}.
template <typename Scalar>
Scalar cross_term(const Field<Scalar>& u, const BubbleParams<Scalar>& bp) {
  const auto s = detail::paired_samples(u, bp);
  const Scalar q = critical_exponent<Scalar>(bp.dimension);
  Scalar sum = 0;
  for (std::size_t k = 0; k < s.w.size(); ++k)
    sum += s.w[k] * s.u[k] * std::pow(s.bubble[k], q - 1);
  return sum;
}

/// | int|u + u_eps|^q - int|u|^q - int|u_eps|^q |.
template <typename Scalar>
Scalar brezis_lieb_defect(const Field<Scalar>& u, const BubbleParams<Scalar>& bp) {
  const auto s = detail::paired_samples(u, bp);
  const Scalar q = critical_exponent<Scalar>(bp.dimension);
  Scalar sum = 0;
  for (std::size_t k = 0; k < s.w.size(); ++k)
    sum += s.w[k] * (std::pow(std::abs(s.u[k] + s.bubble[k]), q) - std::pow(std::abs(s.u[k]), q) -
                     std::pow(std::abs(s.bubble[k]), q));
  return std::abs(sum);
}

}  // namespace critlab
