#pragma once

// Minimization of int p|grad u|^2 - lambda int u^2 over {u = g on the
// boundary, ||u||_q = 1}: the lifting map, an H^1-preconditioned projected
// gradient flow, multiplier estimates and concentration diagnostics.

#include "critlab/bubbles.hpp"

#include <Eigen/SparseCholesky>

#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace critlab {

/// f(t) = int |t u + v|^q.
template <typename Scalar>
Scalar f_of_t(Scalar t, const Field<Scalar>& u, const Field<Scalar>& v, Scalar q) {
  require_same_grid(u, v);
  return integrate(Field<Scalar>(u.grid_ptr(), t * u.values() + v.values()), q);
}

namespace detail {

template <typename Scalar>
Scalar lq_mass(const Vector<Scalar>& weights, const Vector<Scalar>& u, Scalar q) {
  Scalar sum = 0;
  for (Index i = 0; i < u.size(); ++i) sum += weights[i] * std::pow(std::abs(u[i]), q);
  return sum;
}

/// Smallest s > 0 with int |base + s dir|^q = level, given that the mass of
/// `base` is below `level`. Convexity in s makes the root unique; Newton
/// steps are kept inside a bisection bracket.
template <typename Scalar>
Scalar ray_root(const Vector<Scalar>& weights, const Vector<Scalar>& base,
                const Vector<Scalar>& dir, Scalar q, Scalar level, Scalar guess = 1) {
  auto eval = [&](Scalar s, Scalar& slope) {
    Scalar f = 0, df = 0;
    for (Index i = 0; i < base.size(); ++i) {
      const Scalar z = base[i] + s * dir[i];
      const Scalar p = std::pow(std::abs(z), q - 1);
      f += weights[i] * p * std::abs(z);
      df += weights[i] * q * p * (z < 0 ? -dir[i] : dir[i]);
    }
    slope = df;
    return f - level;
  };
  Scalar slope = 0;
  if (!(eval(0, slope) < 0))
    throw Error(ErrorKind::precondition, "ray starts outside the target level set");
  Scalar lo = 0, hi = guess > 0 ? guess : 1;
  for (int k = 0; eval(hi, slope) < 0; ++k) {
    lo = hi;
    hi *= 2;
    if (k > 2000) throw Error(ErrorKind::solver_failure, "ray never reaches the level set");
  }
  Scalar s = guess > 0 && guess <= hi ? guess : (lo + hi) / 2;
  const Scalar tol = Scalar(1e-14) * level;
  for (int it = 0; it < 300; ++it) {
    const Scalar f = eval(s, slope);
    if (std::abs(f) <= tol) return s;
    (f > 0 ? hi : lo) = s;
    Scalar next = slope != 0 ? s - f / slope : (lo + hi) / 2;
    if (!(next > lo && next < hi)) next = (lo + hi) / 2;
    if (hi - lo <= 2 * std::numeric_limits<Scalar>::epsilon() * hi) return s;
    s = next;
  }
  return s;
}

}  // namespace detail

/// t(u0) > 0 with ||t u0 + v||_q = 1.
template <typename Scalar>
Scalar lift_parameter(const Field<Scalar>& u0, const Field<Scalar>& v, Scalar q) {
  require_same_grid(u0, v);
  const auto& w = u0.layout().quadrature_weights();
  if (!(detail::lq_mass(w, v.values(), q) < 1))
    throw Error(ErrorKind::precondition, "lifting needs ||v||_q < 1");
  if (!(detail::lq_mass(w, u0.values(), q) > 0))
    throw Error(ErrorKind::precondition, "lifting needs ||u0||_q > 0");
  const Scalar guess = 1 / lq_norm(u0, q);
  return detail::ray_root(w, v.values(), u0.values(), q, Scalar(1), guess);
}

/// t(u0) u0 + v, on the unit L^q sphere.
template <typename Scalar>
Field<Scalar> lift_to_sphere(const Field<Scalar>& u0, const Field<Scalar>& v, Scalar q) {
  const Scalar t = lift_parameter(u0, v, q);
  return Field<Scalar>(v.grid_ptr(), t * u0.values() + v.values());
}

enum class ConstraintMode { automatic, sphere_retraction, convex_ball };
enum class Outcome { attained, concentration, inconclusive };

inline const char* to_string(ConstraintMode m) {
  switch (m) {
    case ConstraintMode::automatic: return "automatic";
    case ConstraintMode::sphere_retraction: return "sphere_retraction";
    case ConstraintMode::convex_ball: return "convex_ball";
  }
  return "unknown";
}

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::attained: return "attained";
    case Outcome::concentration: return "concentration";
    case Outcome::inconclusive: return "inconclusive";
  }
  return "unknown";
}

template <typename Scalar>
struct MinimizeConfig {
  Scalar lambda = 0;
  Index max_iterations = 20000;
  Scalar initial_step = 1;
  Scalar armijo = Scalar(1e-4);
  Scalar min_step = Scalar(1e-16);
  ConstraintMode mode = ConstraintMode::automatic;
  Scalar gradient_tol = Scalar(1e-12);   // on g^T A^{-1} g, relative to max(E, 1)
  Scalar stall_tol = Scalar(1e-10);      // relative energy change between accepted steps
  Scalar theta = Scalar(0.9);
  Scalar rho_min = 0;                    // 0 means 10 h
  Scalar amplitude_factor = 10;
  std::optional<Scalar> lambda1;         // skips the eigen solve when known
  std::string seed_label = "user";
  /// Called with every accepted iterate (and the initial one) and its energy.
  std::function<void(const Vector<Scalar>&, Scalar)> observer;
};

template <typename Scalar>
void check_config(const MinimizeConfig<Scalar>& cfg) {
  if (!(cfg.max_iterations > 0)) throw Error(ErrorKind::validation, "max_iterations must be > 0");
  if (!(cfg.initial_step > 0 && cfg.armijo > 0 && cfg.min_step > 0))
    throw Error(ErrorKind::validation, "step size policy values must be > 0");
  if (!(cfg.gradient_tol > 0 && cfg.stall_tol > 0))
    throw Error(ErrorKind::validation, "stopping tolerances must be > 0");
  if (!(cfg.theta > 0 && cfg.theta < 1)) throw Error(ErrorKind::validation, "theta must be in (0,1)");
  if (!(cfg.rho_min >= 0 && cfg.amplitude_factor > 0))
    throw Error(ErrorKind::validation, "concentration thresholds must be positive");
}

/// Scalars logged per accepted iterate: for u_k and for the midpoint
/// w_k = anchor + (u_k - anchor) / 2 between u_k and the flow's anchor.
template <typename Scalar>
struct IterateRecord {
  Scalar energy = 0;
  Scalar lq_mass = 0;
  Scalar midpoint_energy = 0;
  Scalar midpoint_lq_mass = 0;
};

template <typename Scalar>
struct RunReport {
  Outcome outcome = Outcome::inconclusive;
  std::string stop_reason;
  ConstraintMode mode = ConstraintMode::automatic;
  Index iterations = 0;
  Scalar lambda = 0;
  Scalar final_energy = 0;
  std::vector<Scalar> energy_trace;
  std::vector<IterateRecord<Scalar>> iterates;
  Scalar multiplier = 0;          // from the projected gradient
  Scalar v_norm = 0;
  Scalar constraint_residual = 0; // | ||u||_q - 1 |
  bool constraint_active = true;
  Scalar gradient_norm = 0;
  Scalar mass_radius = 0;         // radius holding theta of int |u|^q
  Scalar sup_amplitude = 0;
  Scalar initial_sup = 0;
  Scalar rho_min = 0;
  bool positive = false;          // u > 0 at every interior node
  std::string seed_label;
  Field<Scalar> u;
};

/// Radius around the peak (the origin on radial grids) holding a fraction
/// theta of int |u|^q.
template <typename Scalar>
Scalar mass_radius(const Field<Scalar>& u, Scalar q, Scalar theta) {
  const auto& w = u.layout().quadrature_weights();
  const auto& values = u.values();
  Vector<Scalar> distance;
  if (const auto* radial = std::get_if<RadialGrid<Scalar>>(&u.grid())) {
    distance = radial->nodes();
  } else {
    Index peak = 0;
    values.cwiseAbs().maxCoeff(&peak);
    distance = distances_from(u.grid(), node_point(u.grid(), peak));
  }
  std::vector<Index> order(std::size_t(values.size()));
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return distance[a] < distance[b]; });
  Scalar total = 0;
  for (Index i = 0; i < values.size(); ++i) total += w[i] * std::pow(std::abs(values[i]), q);
  Scalar running = 0;
  for (Index i : order) {
    running += w[i] * std::pow(std::abs(values[i]), q);
    if (running >= theta * total) return distance[i];
  }
  return distance[order.back()];
}

namespace detail {

template <typename Scalar>
struct FlowState {
  const StiffnessSystem<Scalar>& system;
  Scalar lambda;
  Scalar q;

  Scalar energy(const Vector<Scalar>& u) const {
    Scalar e = system.energy(u);
    if (lambda != 0) e -= lambda * u.dot(system.mass.cwiseProduct(u));
    return e;
  }
  Vector<Scalar> gradient(const Vector<Scalar>& u) const {
    Vector<Scalar> g = system.full * u;
    if (lambda != 0) g -= lambda * system.mass.cwiseProduct(u);
    return 2 * system.gather_interior(g);
  }
  Vector<Scalar> constraint_gradient(const Vector<Scalar>& u) const {
    const Vector<Scalar> ui = system.gather_interior(u);
    Vector<Scalar> c(ui.size());
    for (Index i = 0; i < ui.size(); ++i)
      c[i] = q * system.interior_mass[i] * std::pow(std::abs(ui[i]), q - 2) * ui[i];
    return c;
  }
  Scalar mass(const Vector<Scalar>& u) const { return lq_mass(system.mass, u, q); }
  void step(Vector<Scalar>& u, const Vector<Scalar>& interior_delta) const {
    const auto& index = system.layout().interior_nodes();
    for (std::size_t k = 0; k < index.size(); ++k) u[index[k]] += interior_delta[Index(k)];
  }
};

}  // namespace detail

/// Projected, H^1-preconditioned gradient descent with Armijo backtracking.
///
/// Sphere mode (||v||_q < 1) keeps u on the unit sphere by the lifting map
/// along the ray from v. Convex mode (||v||_q >= 1) descends on the ball
/// ||u||_q <= 1, retracting infeasible trials along the ray from an interior
/// anchor z, and moving tangentially while the constraint is active and
/// pushes outward.
template <typename Scalar>
RunReport<Scalar> minimize(const StiffnessSystem<Scalar>& system, const Field<Scalar>& v,
                           const MinimizeConfig<Scalar>& cfg, const Field<Scalar>& seed) {
  check_config(cfg);
  if (v.grid_ptr() != system.grid || seed.grid_ptr() != system.grid)
    throw Error(ErrorKind::dimension_mismatch, "fields and system live on different grids");
  const auto& lay = system.layout();
  const int n = lay.dimension();
  const Scalar q = critical_exponent<Scalar>(n);
  const Vector<Scalar> trace_v = v.trace(), trace_seed = seed.trace();
  if ((trace_v - trace_seed).cwiseAbs().maxCoeff() >
      Scalar(1e-12) * std::max(Scalar(1), trace_v.cwiseAbs().maxCoeff()))
    throw Error(ErrorKind::precondition, "seed does not carry the boundary trace of v");

  if (cfg.lambda != 0) {
    const Scalar lambda1 = cfg.lambda1 ? *cfg.lambda1 : first_eigenpair(system).lambda;
    if (cfg.lambda >= lambda1)
      throw Error(ErrorKind::rejected_run, "lambda = " + std::to_string(double(cfg.lambda)) +
                                               " is not below lambda_1 = " +
                                               std::to_string(double(lambda1)),
                  double(lambda1));
  }

  detail::FlowState<Scalar> flow{system, cfg.lambda, q};
  RunReport<Scalar> report{.u = seed};
  report.lambda = cfg.lambda;
  report.seed_label = cfg.seed_label;
  report.v_norm = std::pow(flow.mass(v.values()), 1 / q);
  report.rho_min = cfg.rho_min > 0 ? cfg.rho_min : 10 * lay.nominal_spacing();
  ConstraintMode mode = cfg.mode;
  if (mode == ConstraintMode::automatic)
    mode = report.v_norm < 1 ? ConstraintMode::sphere_retraction : ConstraintMode::convex_ball;
  if (mode == ConstraintMode::sphere_retraction && !(report.v_norm < 1))
    throw Error(ErrorKind::mode, "sphere retraction needs ||v||_q < 1 (got " +
                                     std::to_string(double(report.v_norm)) + ")");
  report.mode = mode;
  const bool sphere = mode == ConstraintMode::sphere_retraction;

  // Anchor of the retraction rays.
  Vector<Scalar> anchor = v.values();
  if (!sphere) {
    Vector<Scalar> z0 = v.values();
    for (Index i : lay.interior_nodes()) z0[i] = 0;
    const Scalar n0 = std::pow(flow.mass(z0), 1 / q);
    if (!(n0 < 1))
      throw Error(ErrorKind::mode, "the boundary trace alone already has ||.||_q >= 1");
    const Scalar level = std::pow((n0 + 1) / 2, q);
    const Vector<Scalar> dir = v.values() - z0;
    anchor = z0 + detail::ray_root(system.mass, z0, dir, q, level, Scalar(0.5)) * dir;
  }
  auto retract = [&](const Vector<Scalar>& x, Scalar guess) -> Vector<Scalar> {
    const Vector<Scalar> dir = x - anchor;
    return anchor + detail::ray_root(system.mass, anchor, dir, q, Scalar(1), guess) * dir;
  };

  Vector<Scalar> u = seed.values();
  if (sphere) {
    u = retract(u, Scalar(1));
  } else if (flow.mass(u) > 1) {
    u = retract(u, Scalar(0.5));
  }

  Eigen::SimplicialLDLT<SparseMatrix<Scalar>> solver(system.interior);
  if (solver.info() != Eigen::Success)
    throw Error(ErrorKind::solver_failure, "stiffness factorization failed");

  auto record = [&](const Vector<Scalar>& x, Scalar energy) {
    const Vector<Scalar> mid = anchor + (x - anchor) / 2;
    report.iterates.push_back({energy, flow.mass(x), flow.energy(mid), flow.mass(mid)});
    report.energy_trace.push_back(energy);
    if (cfg.observer) cfg.observer(x, energy);
  };

  Scalar energy = flow.energy(u);
  record(u, energy);
  report.initial_sup = u.cwiseAbs().maxCoeff();
  Scalar tau = cfg.initial_step;
  Scalar previous_energy = std::numeric_limits<Scalar>::quiet_NaN();
  Scalar multiplier = 0;
  Scalar gn = 0;
  Index frozen = 0;  // consecutive accepted steps that left the energy unchanged to a few ulps
  report.stop_reason = "max_iterations";
  Index k = 0;
  for (; k < cfg.max_iterations; ++k) {
    const Vector<Scalar> g = flow.gradient(u);
    const Vector<Scalar> G = solver.solve(g);
    const Vector<Scalar> dc = flow.constraint_gradient(u);
    const Vector<Scalar> N = solver.solve(dc);
    const Scalar dcn = dc.dot(N);
    const Scalar mu = dcn > 0 ? g.dot(N) / dcn : 0;
    const bool active = sphere || flow.mass(u) > 1 - Scalar(1e-12);
    const bool tangent = sphere || (active && mu < 0);
    const Vector<Scalar> D = tangent ? Vector<Scalar>(G - mu * N) : G;
    gn = tangent ? (g - mu * dc).dot(D) : g.dot(D);
    multiplier = active ? mu * q / 2 : 0;

    // Concentration is tested first so it wins a tie with attainment.
    report.mass_radius = mass_radius(Field<Scalar>(system.grid, u), q, cfg.theta);
    report.sup_amplitude = u.cwiseAbs().maxCoeff();
    if (report.mass_radius < report.rho_min &&
        report.sup_amplitude > cfg.amplitude_factor * report.initial_sup) {
      report.outcome = Outcome::concentration;
      report.stop_reason = "concentration";
      break;
    }
    const bool stalled = std::isnan(previous_energy) ||
                         std::abs(previous_energy - energy) <=
                             cfg.stall_tol * std::max(std::abs(energy), Scalar(1));
    if (gn < cfg.gradient_tol * std::max(energy, Scalar(1)) && stalled) {
      report.outcome = Outcome::attained;
      report.stop_reason = "gradient";
      break;
    }
    // The retraction has a rounding floor near the tolerance; a frozen flow with a
    // nearly converged gradient cannot improve further.
    if (frozen >= 20 && gn < 100 * cfg.gradient_tol * std::max(energy, Scalar(1))) {
      report.outcome = Outcome::attained;
      report.stop_reason = "roundoff";
      break;
    }

    Vector<Scalar> trial;
    Scalar trial_energy = 0;
    bool accepted = false;
    while (tau >= cfg.min_step) {
      trial = u;
      flow.step(trial, -tau * D);
      if (sphere || flow.mass(trial) > 1) trial = retract(trial, Scalar(1));
      trial_energy = flow.energy(trial);
      if (trial_energy <= energy - cfg.armijo * tau * gn) {
        accepted = true;
        break;
      }
      tau /= 2;
    }
    if (!accepted) {
      report.stop_reason = "line_search";
      break;
    }
    frozen = std::abs(energy - trial_energy) <= 4 * std::numeric_limits<Scalar>::epsilon() *
                                                     std::max(std::abs(energy), Scalar(1))
                 ? frozen + 1
                 : 0;
    previous_energy = energy;
    u = std::move(trial);
    energy = trial_energy;
    record(u, energy);
    tau = std::min(2 * tau, Scalar(1e6));
  }
  report.iterations = k;
  report.gradient_norm = gn;
  report.multiplier = multiplier;
  report.final_energy = energy;
  report.sup_amplitude = u.cwiseAbs().maxCoeff();
  report.mass_radius = mass_radius(Field<Scalar>(system.grid, u), q, cfg.theta);
  const Scalar norm = std::pow(flow.mass(u), 1 / q);
  report.constraint_residual = std::abs(norm - 1);
  report.constraint_active = report.constraint_residual <= Scalar(1e-6);
  report.positive = true;
  for (Index i : lay.interior_nodes()) report.positive = report.positive && u[i] > 0;
  report.u = Field<Scalar>(system.grid, std::move(u));
  return report;
}

template <typename Scalar>
RunReport<Scalar> minimize(const WeightSpec<Scalar>& p, const BoundarySpec<Scalar>& g,
                           GridPtr<Scalar> grid, const MinimizeConfig<Scalar>& cfg,
                           const Field<Scalar>& seed) {
  const auto system = assemble(p, grid);
  const auto v = solve_dirichlet(system, boundary_values(g, *grid));
  return minimize(system, v, cfg, seed);
}

template <typename Scalar>
struct MultiplierEstimate {
  Scalar value = 0;
  Scalar numerator = 0;
  Scalar denominator = 0;
  /// The Green-identity denominator int |u|^{q-2} u (u - v) fell below 1e-14;
  /// `value` then comes from testing the discrete equation against the
  /// interior indicator instead.
  bool indeterminate = false;
};

/// Lambda from int p grad u . grad(u - v) - lambda int u (u - v)
///            = Lambda int |u|^{q-2} u (u - v).
template <typename Scalar>
MultiplierEstimate<Scalar> estimate_multiplier(const StiffnessSystem<Scalar>& system,
                                               const Field<Scalar>& u, const Field<Scalar>& v,
                                               Scalar q, Scalar lambda = 0) {
  require_same_grid(u, v);
  const Vector<Scalar>& w = system.mass;
  const Vector<Scalar> d = u.values() - v.values();
  Vector<Scalar> residual = system.full * u.values();
  if (lambda != 0) residual -= lambda * w.cwiseProduct(u.values());
  Vector<Scalar> nonlinear(u.size());
  for (Index i = 0; i < u.size(); ++i)
    nonlinear[i] = w[i] * std::pow(std::abs(u.values()[i]), q - 2) * u.values()[i];
  MultiplierEstimate<Scalar> out;
  out.numerator = d.dot(residual);
  out.denominator = d.dot(nonlinear);
  if (std::abs(out.denominator) >= Scalar(1e-14)) {
    out.value = out.numerator / out.denominator;
    return out;
  }
  out.indeterminate = true;
  const Scalar top = system.gather_interior(residual).sum();
  const Scalar bottom = system.gather_interior(nonlinear).sum();
  out.value = bottom != 0 ? top / bottom : 0;
  return out;
}

template <typename Scalar>
struct GapPair {
  Scalar lhs = 0;  // S0 estimate - int p |grad w|^2
  Scalar rhs = 0;  // p0 S (1 - int |w|^q)^{2/q}
};

/// Both sides of S0 - E(w) <= p0 S (1 - int|w|^q)^{2/q} from precomputed scalars.
template <typename Scalar>
GapPair<Scalar> first_order_gap(Scalar s0_estimate, Scalar energy, Scalar lq_mass, Scalar p0,
                                int n) {
  if (lq_mass > 1 + Scalar(1e-10))
    throw Error(ErrorKind::precondition, "first-order gap needs ||w||_q <= 1");
  const Scalar q = critical_exponent<Scalar>(n);
  const Scalar slack = std::max(Scalar(0), 1 - lq_mass);
  return {s0_estimate - energy, p0 * sobolev_constant<Scalar>(n) * std::pow(slack, 2 / q)};
}

template <typename Scalar>
GapPair<Scalar> first_order_gap(const Field<Scalar>& w, const StiffnessSystem<Scalar>& system,
                                Scalar s0_estimate, Scalar p0) {
  const int n = system.layout().dimension();
  const Scalar q = critical_exponent<Scalar>(n);
  return first_order_gap(s0_estimate, system.energy(w.values()), integrate(w, q), p0, n);
}

}  // namespace critlab
