#pragma once

// The operator -div(p grad .) with Dirichlet data: assembly, Jacobi-PCG,
// the auxiliary (p-harmonic) extension and the first eigenpair.

#include "critlab/weights.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <vector>

namespace critlab {

template <typename Scalar>
using SparseMatrix = Eigen::SparseMatrix<Scalar>;

/// K is the full symmetric stiffness matrix, u^T K u = sum_e W_e (du_e)^2.
/// A = K restricted to interior nodes; the lifting of boundary values g is
/// -K_IB g. `mass` holds the nodal quadrature weights of all nodes.
template <typename Scalar>
struct StiffnessSystem {
  GridPtr<Scalar> grid;
  SparseMatrix<Scalar> full;
  SparseMatrix<Scalar> interior;
  SparseMatrix<Scalar> coupling;
  Vector<Scalar> mass;
  Vector<Scalar> interior_mass;

  const NodalLayout<Scalar>& layout() const { return critlab::layout(*grid); }

  Vector<Scalar> lifting(const Vector<Scalar>& boundary_values) const {
    return -(coupling * boundary_values);
  }

  Vector<Scalar> gather_interior(const Vector<Scalar>& full_values) const {
    const auto& index = layout().interior_nodes();
    Vector<Scalar> out(Index(index.size()));
    for (std::size_t k = 0; k < index.size(); ++k) out[Index(k)] = full_values[index[k]];
    return out;
  }

  Vector<Scalar> gather_boundary(const Vector<Scalar>& full_values) const {
    const auto& index = layout().boundary_nodes();
    Vector<Scalar> out(Index(index.size()));
    for (std::size_t k = 0; k < index.size(); ++k) out[Index(k)] = full_values[index[k]];
    return out;
  }

  Vector<Scalar> scatter(const Vector<Scalar>& interior_values,
                         const Vector<Scalar>& boundary_values) const {
    Vector<Scalar> out(layout().node_count());
    const auto& in = layout().interior_nodes();
    const auto& bd = layout().boundary_nodes();
    for (std::size_t k = 0; k < in.size(); ++k) out[in[k]] = interior_values[Index(k)];
    for (std::size_t k = 0; k < bd.size(); ++k) out[bd[k]] = boundary_values[Index(k)];
    return out;
  }

  /// u^T K u, the discrete weighted Dirichlet energy.
  Scalar energy(const Vector<Scalar>& u) const { return u.dot(full * u); }
};

/// Assembles the edge-based stiffness for a coefficient callable.
template <typename Scalar, typename Coefficient>
StiffnessSystem<Scalar> assemble_with(GridPtr<Scalar> grid, const Coefficient& coefficient) {
  const auto& lay = layout(*grid);
  const auto& edges = lay.edges();
  if (edges.size() < 2) throw Error(ErrorKind::degenerate_grid, "grid has fewer than 2 cells");
  const Vector<Scalar> c = edge_coefficients(*grid, coefficient);

  const Index nodes = lay.node_count();
  std::vector<Index> slot(static_cast<std::size_t>(nodes));
  for (std::size_t k = 0; k < lay.interior_nodes().size(); ++k)
    slot[std::size_t(lay.interior_nodes()[k])] = Index(k);
  for (std::size_t k = 0; k < lay.boundary_nodes().size(); ++k)
    slot[std::size_t(lay.boundary_nodes()[k])] = Index(k);

  using Triplet = Eigen::Triplet<Scalar>;
  std::vector<Triplet> full, interior, coupling;
  full.reserve(std::size_t(4 * edges.size()));
  interior.reserve(std::size_t(4 * edges.size()));
  for (Index e = 0; e < edges.size(); ++e) {
    const Index i = edges.tail[std::size_t(e)], j = edges.head[std::size_t(e)];
    const Scalar w = c[e] * edges.geometric[e];
    full.emplace_back(i, i, w);
    full.emplace_back(j, j, w);
    full.emplace_back(i, j, -w);
    full.emplace_back(j, i, -w);
    const bool bi = lay.is_boundary(i), bj = lay.is_boundary(j);
    const Index si = slot[std::size_t(i)], sj = slot[std::size_t(j)];
    if (!bi) interior.emplace_back(si, si, w);
    if (!bj) interior.emplace_back(sj, sj, w);
    if (!bi && !bj) {
      interior.emplace_back(si, sj, -w);
      interior.emplace_back(sj, si, -w);
    } else if (!bi && bj) {
      coupling.emplace_back(si, sj, -w);
    } else if (bi && !bj) {
      coupling.emplace_back(sj, si, -w);
    }
  }
  StiffnessSystem<Scalar> system;
  const Index ni = Index(lay.interior_nodes().size()), nb = Index(lay.boundary_nodes().size());
  system.full.resize(nodes, nodes);
  system.full.setFromTriplets(full.begin(), full.end());
  system.interior.resize(ni, ni);
  system.interior.setFromTriplets(interior.begin(), interior.end());
  system.coupling.resize(ni, nb);
  system.coupling.setFromTriplets(coupling.begin(), coupling.end());
  system.mass = lay.quadrature_weights();
  system.grid = std::move(grid);
  system.interior_mass = system.gather_interior(system.mass);
  return system;
}

template <typename Scalar>
StiffnessSystem<Scalar> assemble(const WeightSpec<Scalar>& p, GridPtr<Scalar> grid) {
  validate(p, *grid);
  return assemble_with(std::move(grid), [&p](const Point<Scalar>& x) { return p(x); });
}

/// B^{-1} K u on interior nodes: the discrete -div(p grad u).
template <typename Scalar>
Vector<Scalar> apply_operator(const StiffnessSystem<Scalar>& system, const Vector<Scalar>& u) {
  const Vector<Scalar> ku = system.full * u;
  return system.gather_interior(ku).cwiseQuotient(system.interior_mass);
}

template <typename Scalar>
struct CgResult {
  Vector<Scalar> x;
  Index iterations = 0;
  Scalar residual = 0;  // relative, ||b - A x|| / ||b||
};

/// Jacobi-preconditioned conjugate gradients. Every search direction must
/// see positive curvature; otherwise the operator is not SPD and we stop.
template <typename Scalar>
CgResult<Scalar> solve_pcg(const SparseMatrix<Scalar>& a, const Vector<Scalar>& b,
                           Vector<Scalar> x, Scalar rel_tol, Index max_iterations) {
  CgResult<Scalar> result;
  const Scalar b_norm = b.norm();
  if (b_norm == 0) {
    result.x = Vector<Scalar>::Zero(b.size());
    return result;
  }
  const Vector<Scalar> inv_diag = a.diagonal().cwiseInverse();
  Vector<Scalar> r = b - a * x;
  Vector<Scalar> z = inv_diag.cwiseProduct(r);
  Vector<Scalar> d = z;
  Scalar rz = r.dot(z);
  Index k = 0;
  for (;;) {
    if (r.norm() <= rel_tol * b_norm) {
      // The recursive residual drifts; confirm with the true one and restart if needed.
      r = b - a * x;
      if (r.norm() <= rel_tol * b_norm) break;
      z = inv_diag.cwiseProduct(r);
      d = z;
      rz = r.dot(z);
    }
    if (k == max_iterations)
      throw Error(ErrorKind::solver_failure,
                  "conjugate gradients did not converge in " + std::to_string(k) + " iterations",
                  double(r.norm() / b_norm));
    const Vector<Scalar> ad = a * d;
    const Scalar curvature = d.dot(ad);
    if (!(curvature > 0))
      throw Error(ErrorKind::solver_failure, "nonpositive curvature in conjugate gradients",
                  double(r.norm() / b_norm));
    const Scalar step = rz / curvature;
    x += step * d;
    r -= step * ad;
    z = inv_diag.cwiseProduct(r);
    const Scalar rz_next = r.dot(z);
    d = z + (rz_next / rz) * d;
    rz = rz_next;
    ++k;
  }
  result.residual = (b - a * x).norm() / b_norm;
  result.x = std::move(x);
  result.iterations = k;
  return result;
}

/// Iteration cap 50 M, M the number of cells along the longest grid direction.
template <typename Scalar>
Index iteration_cap(const Grid<Scalar>& grid) {
  if (const auto* radial = std::get_if<RadialGrid<Scalar>>(&grid)) return 50 * radial->cells();
  const auto& cells = std::get<TensorGrid<Scalar>>(grid).cells();
  return 50 * *std::max_element(cells.begin(), cells.end());
}

/// Interior values solving A x = -K_IB g, started from the mean of g.
template <typename Scalar>
Field<Scalar> solve_dirichlet(const StiffnessSystem<Scalar>& system,
                              const Vector<Scalar>& boundary_values,
                              Scalar rel_tol = Scalar(1e-10)) {
  if (boundary_values.size() != Index(system.layout().boundary_nodes().size()))
    throw Error(ErrorKind::dimension_mismatch, "boundary values do not match the boundary nodes");
  const Vector<Scalar> b = system.lifting(boundary_values);
  const Scalar mean = boundary_values.mean();
  const Index ni = system.interior.rows();
  Vector<Scalar> x;
  if (b.norm() == 0) {
    x = Vector<Scalar>::Zero(ni);
  } else {
    x = solve_pcg(system.interior, b, Vector<Scalar>(Vector<Scalar>::Constant(ni, mean)), rel_tol,
                  iteration_cap(*system.grid)).x;
  }
  return Field<Scalar>(system.grid, system.scatter(x, boundary_values));
}

/// The p-harmonic extension v of g.
template <typename Scalar>
Field<Scalar> solve_auxiliary(const WeightSpec<Scalar>& p, const BoundarySpec<Scalar>& g,
                              GridPtr<Scalar> grid) {
  const auto system = assemble(p, grid);
  return solve_dirichlet(system, boundary_values(g, *grid));
}

template <typename Scalar>
struct EigenResult {
  Scalar lambda = 0;
  Field<Scalar> phi;
  Scalar residual = 0;  // ||A phi - lambda B phi|| / ||lambda B phi||
  Index iterations = 0;
};

/// Smallest eigenpair of A phi = lambda B phi by inverse power iteration;
/// phi is B-normalized and positive at the interior nodes.
/// Inner solver of the inverse iteration: Jacobi-PCG by default, or a sparse
/// LDL^T factorization for large one-dimensional grids where CG needs ~M steps.
enum class InnerSolver { pcg, direct };

template <typename Scalar>
EigenResult<Scalar> first_eigenpair(const StiffnessSystem<Scalar>& system,
                                    Scalar tol = Scalar(1e-9), Index max_iterations = 2000,
                                    InnerSolver inner = InnerSolver::pcg) {
  const Vector<Scalar>& mass = system.interior_mass;
  const Index ni = system.interior.rows();
  const Index cap = iteration_cap(*system.grid);
  Eigen::SimplicialLDLT<SparseMatrix<Scalar>> factor;
  if (inner == InnerSolver::direct) {
    factor.compute(system.interior);
    if (factor.info() != Eigen::Success)
      throw Error(ErrorKind::solver_failure, "stiffness factorization failed");
  }
  Vector<Scalar> x = Vector<Scalar>::Ones(ni);
  x /= std::sqrt(x.dot(mass.cwiseProduct(x)));
  Scalar lambda = x.dot(system.interior * x);
  Scalar residual = std::numeric_limits<Scalar>::infinity();
  for (Index k = 1; k <= max_iterations; ++k) {
    const Vector<Scalar> bx = mass.cwiseProduct(x);
    Vector<Scalar> y = inner == InnerSolver::direct
                           ? Vector<Scalar>(factor.solve(bx))
                           : solve_pcg(system.interior, bx, Vector<Scalar>(x / lambda),
                                       Scalar(1e-10), cap).x;
    y /= std::sqrt(y.dot(mass.cwiseProduct(y)));
    if (y.sum() < 0) y = -y;
    const Vector<Scalar> ay = system.interior * y;
    lambda = y.dot(ay);
    const Vector<Scalar> by = mass.cwiseProduct(y);
    residual = (ay - lambda * by).norm() / (lambda * by.norm());
    x = std::move(y);
    if (residual <= tol) {
      const Vector<Scalar> zero = Vector<Scalar>::Zero(Index(system.layout().boundary_nodes().size()));
      return EigenResult<Scalar>{lambda, Field<Scalar>(system.grid, system.scatter(x, zero)),
                                 residual, k};
    }
  }
  throw Error(ErrorKind::stagnation,
              "inverse power iteration stalled (residual " + std::to_string(double(residual)) + ")",
              double(lambda));
}

template <typename Scalar>
EigenResult<Scalar> first_eigenpair(const WeightSpec<Scalar>& p, GridPtr<Scalar> grid) {
  return first_eigenpair(assemble(p, std::move(grid)));
}

template <typename Scalar>
Scalar lq_norm(const Field<Scalar>& f, Scalar q) {
  return std::pow(integrate(f, q), 1 / q);
}

}  // namespace critlab
