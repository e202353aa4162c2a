#pragma once

// Discrete domains (radial ball, tensor box), nodal fields and quadrature.

#include "critlab/core.hpp"

#include <algorithm>
#include <array>
#include <memory>
#include <variant>
#include <vector>

namespace critlab {

template <typename Scalar>
struct Ball {
  Point<Scalar> center;
  Scalar radius;
};

template <typename Scalar>
struct Box {
  Point<Scalar> lower;
  Point<Scalar> upper;
};

template <typename Scalar>
using Domain = std::variant<Ball<Scalar>, Box<Scalar>>;

template <typename Scalar>
int ambient_dimension(const Domain<Scalar>& domain) {
  return std::visit([](const auto& d) -> int {
    using D = std::decay_t<decltype(d)>;
    if constexpr (std::is_same_v<D, Ball<Scalar>>) return int(d.center.size());
    else return int(d.lower.size());
  }, domain);
}

/// Signed distance from x to the boundary: positive inside, negative outside.
template <typename Scalar>
Scalar inner_distance(const Domain<Scalar>& domain, const Point<Scalar>& x) {
  if (x.size() != ambient_dimension(domain))
    throw Error(ErrorKind::dimension_mismatch, "point dimension does not match the domain");
  return std::visit([&](const auto& d) -> Scalar {
    using D = std::decay_t<decltype(d)>;
    if constexpr (std::is_same_v<D, Ball<Scalar>>) {
      return d.radius - (x - d.center).norm();
    } else {
      Scalar dist = std::numeric_limits<Scalar>::infinity();
      for (Index k = 0; k < x.size(); ++k)
        dist = std::min({dist, x[k] - d.lower[k], d.upper[k] - x[k]});
      return dist;
    }
  }, domain);
}

template <typename Scalar>
bool contains(const Domain<Scalar>& domain, const Point<Scalar>& x,
              Scalar tol = Scalar(1e-12)) {
  return inner_distance(domain, x) >= -tol;
}

/// Nearest-neighbour couplings carrying the geometric part of the gradient
/// quadrature: sum_e geometric[e] * coefficient[e] * (u[head] - u[tail])^2.
template <typename Scalar>
struct EdgeSet {
  std::vector<Index> tail;
  std::vector<Index> head;
  Vector<Scalar> geometric;

  Index size() const { return Index(tail.size()); }
};

/// Node bookkeeping shared by every grid kind.
template <typename Scalar>
class NodalLayout {
 public:
  int dimension() const { return dimension_; }
  Index node_count() const { return weights_.size(); }
  /// Nodal quadrature weights (dual-cell measures); they sum to |Omega|.
  const Vector<Scalar>& quadrature_weights() const { return weights_; }
  const std::vector<Index>& interior_nodes() const { return interior_; }
  const std::vector<Index>& boundary_nodes() const { return boundary_; }
  bool is_boundary(Index i) const { return boundary_mask_[std::size_t(i)]; }
  const EdgeSet<Scalar>& edges() const { return edges_; }
  /// Characteristic mesh size used by resolution-relative thresholds.
  Scalar nominal_spacing() const { return nominal_spacing_; }

 protected:
  void finalize_layout() {
    interior_.clear();
    boundary_.clear();
    for (Index i = 0; i < node_count(); ++i)
      (boundary_mask_[std::size_t(i)] ? boundary_ : interior_).push_back(i);
  }

  int dimension_ = 0;
  Vector<Scalar> weights_;
  std::vector<bool> boundary_mask_;
  std::vector<Index> interior_;
  std::vector<Index> boundary_;
  EdgeSet<Scalar> edges_;
  Scalar nominal_spacing_ = 0;
};

/// Ball B(0, R) in R^n reduced to the radial coordinate. Nodes
/// 0 = r_0 < ... < r_M = R; the node r_M carries the Dirichlet trace.
template <typename Scalar>
class RadialGrid : public NodalLayout<Scalar> {
 public:
  /// r_i = R (exp(grading i/M) - 1) / (exp(grading) - 1): uniform for
  /// grading = 0, geometric refinement towards the origin otherwise.
  static RadialGrid graded(int dimension, Scalar outer_radius, Index cells,
                           Scalar grading = 0) {
    if (cells < 2) throw Error(ErrorKind::degenerate_grid, "radial grid needs at least 2 cells");
    if (!(grading >= 0)) throw Error(ErrorKind::validation, "grading must be >= 0");
    Vector<Scalar> nodes(cells + 1);
    for (Index i = 0; i <= cells; ++i) {
      const Scalar s = Scalar(i) / Scalar(cells);
      nodes[i] = grading == 0 ? outer_radius * s
                              : outer_radius * std::expm1(grading * s) / std::expm1(grading);
    }
    nodes[cells] = outer_radius;
    return RadialGrid(dimension, std::move(nodes));
  }

  static RadialGrid from_nodes(int dimension, Vector<Scalar> nodes) {
    return RadialGrid(dimension, std::move(nodes));
  }

  Scalar outer_radius() const { return nodes_[nodes_.size() - 1]; }
  Index cells() const { return nodes_.size() - 1; }
  const Vector<Scalar>& nodes() const { return nodes_; }
  Scalar sphere_area() const { return sphere_area_; }
  /// Exact measure of the shell between consecutive nodes.
  const Vector<Scalar>& cell_measure() const { return cell_measure_; }

  Point<Scalar> point(Index i) const {
    Point<Scalar> x = Point<Scalar>::Zero(this->dimension_);
    x[0] = nodes_[i];
    return x;
  }
  Domain<Scalar> domain() const {
    return Ball<Scalar>{Point<Scalar>::Zero(this->dimension_), outer_radius()};
  }
  Vector<Scalar> distances_from(const Point<Scalar>& center) const {
    if (center.size() != this->dimension_ || center.norm() != 0)
      throw Error(ErrorKind::geometry, "radial grids only measure distances from the origin");
    return nodes_;
  }

  /// Coefficient per edge, sampled at the cell midpoint radius.
  template <typename Coefficient>
  Vector<Scalar> edge_coefficients(const Coefficient& coefficient) const {
    Vector<Scalar> c(cells());
    Point<Scalar> x = Point<Scalar>::Zero(this->dimension_);
    for (Index i = 0; i < cells(); ++i) {
      x[0] = (nodes_[i] + nodes_[i + 1]) / 2;
      c[i] = coefficient(x);
    }
    return c;
  }

  /// Number of nodes with 0 < r_i < radius.
  Index nodes_inside(Scalar radius) const {
    Index count = 0;
    for (Index i = 1; i < nodes_.size() && nodes_[i] < radius; ++i) ++count;
    return count;
  }

 private:
  RadialGrid(int dimension, Vector<Scalar> nodes) : nodes_(std::move(nodes)) {
    if (dimension < 3) throw Error(ErrorKind::domain, "radial grid dimension must be >= 3");
    const Index m = nodes_.size() - 1;
    if (m < 2) throw Error(ErrorKind::degenerate_grid, "radial grid needs at least 2 cells");
    if (m < 16) throw Error(ErrorKind::validation, "radial grid needs at least 16 cells");
    if (nodes_[0] != 0) throw Error(ErrorKind::validation, "first radial node must be 0");
    for (Index i = 0; i < m; ++i)
      if (!(nodes_[i + 1] > nodes_[i]))
        throw Error(ErrorKind::validation, "radial nodes must be strictly increasing (node " +
                                               std::to_string(i + 1) + ")");
    const int n = dimension;
    this->dimension_ = n;
    sphere_area_ = critlab::sphere_area<Scalar>(n);
    const Scalar radius = nodes_[m];
    this->nominal_spacing_ = radius / Scalar(m);

    auto ball = [&](Scalar r) { return sphere_area_ * std::pow(r, n) / Scalar(n); };
    cell_measure_.resize(m);
    this->edges_.geometric.resize(m);
    for (Index i = 0; i < m; ++i) {
      const Scalar h = nodes_[i + 1] - nodes_[i];
      cell_measure_[i] = ball(nodes_[i + 1]) - ball(nodes_[i]);
      this->edges_.tail.push_back(i);
      this->edges_.head.push_back(i + 1);
      this->edges_.geometric[i] = cell_measure_[i] / (h * h);
    }
    // Dual cells [r_{i-1/2}, r_{i+1/2}] clipped to [0, R].
    this->weights_.resize(m + 1);
    Scalar lower = 0;
    for (Index i = 0; i <= m; ++i) {
      const Scalar upper = i < m ? (nodes_[i] + nodes_[i + 1]) / 2 : radius;
      this->weights_[i] = ball(upper) - ball(lower);
      lower = upper;
    }
    this->boundary_mask_.assign(std::size_t(m + 1), false);
    this->boundary_mask_[std::size_t(m)] = true;
    this->finalize_layout();
  }

  Vector<Scalar> nodes_;
  Vector<Scalar> cell_measure_;
  Scalar sphere_area_ = 0;
};

/// Axis-aligned box in R^3 with uniform spacing h; the box faces carry the trace.
template <typename Scalar>
class TensorGrid : public NodalLayout<Scalar> {
 public:
  TensorGrid(Point<Scalar> origin, Scalar spacing, std::array<Index, 3> cells)
      : origin_(std::move(origin)), spacing_(spacing), cells_(cells) {
    if (origin_.size() != 3) throw Error(ErrorKind::dimension_mismatch, "tensor grids are 3-D");
    if (!(spacing_ > 0)) throw Error(ErrorKind::validation, "tensor spacing must be > 0");
    for (Index c : cells_)
      if (c < 2) throw Error(ErrorKind::degenerate_grid, "tensor grid needs >= 2 cells per axis");
    this->dimension_ = 3;
    this->nominal_spacing_ = spacing_;
    const Index total = count(0) * count(1) * count(2);
    this->weights_.resize(total);
    this->boundary_mask_.assign(std::size_t(total), false);
    const Scalar volume = spacing_ * spacing_ * spacing_;
    for (Index k = 0; k < count(2); ++k)
      for (Index j = 0; j < count(1); ++j)
        for (Index i = 0; i < count(0); ++i) {
          const std::array<Index, 3> ijk{i, j, k};
          Scalar w = volume;
          bool on_face = false;
          for (int a = 0; a < 3; ++a)
            if (ijk[a] == 0 || ijk[a] == cells_[a]) {
              w /= 2;
              on_face = true;
            }
          this->weights_[index(i, j, k)] = w;
          this->boundary_mask_[std::size_t(index(i, j, k))] = on_face;
        }
    // Edge dual cells: length h along the edge, trapezoid factors across it.
    std::vector<Scalar> geometric;
    for (int axis = 0; axis < 3; ++axis)
      for (Index k = 0; k < count(2); ++k)
        for (Index j = 0; j < count(1); ++j)
          for (Index i = 0; i < count(0); ++i) {
            std::array<Index, 3> ijk{i, j, k};
            if (ijk[axis] == cells_[axis]) continue;
            Scalar g = spacing_;
            for (int a = 0; a < 3; ++a)
              if (a != axis && (ijk[a] == 0 || ijk[a] == cells_[a])) g /= 2;
            std::array<Index, 3> next = ijk;
            ++next[axis];
            this->edges_.tail.push_back(index(ijk[0], ijk[1], ijk[2]));
            this->edges_.head.push_back(index(next[0], next[1], next[2]));
            geometric.push_back(g);
          }
    this->edges_.geometric = Eigen::Map<Vector<Scalar>>(geometric.data(), Index(geometric.size()));
    this->finalize_layout();
  }

  Scalar spacing() const { return spacing_; }
  const std::array<Index, 3>& cells() const { return cells_; }
  const Point<Scalar>& origin() const { return origin_; }
  Index count(int axis) const { return cells_[axis] + 1; }
  Index index(Index i, Index j, Index k) const { return i + count(0) * (j + count(1) * k); }

  Point<Scalar> point(Index node) const {
    Point<Scalar> x(3);
    x[0] = origin_[0] + spacing_ * Scalar(node % count(0));
    x[1] = origin_[1] + spacing_ * Scalar((node / count(0)) % count(1));
    x[2] = origin_[2] + spacing_ * Scalar(node / (count(0) * count(1)));
    return x;
  }
  Domain<Scalar> domain() const {
    Point<Scalar> upper = origin_;
    for (int a = 0; a < 3; ++a) upper[a] += spacing_ * Scalar(cells_[a]);
    return Box<Scalar>{origin_, upper};
  }
  Vector<Scalar> distances_from(const Point<Scalar>& center) const {
    Vector<Scalar> d(this->node_count());
    for (Index i = 0; i < d.size(); ++i) d[i] = (point(i) - center).norm();
    return d;
  }

  /// Coefficient per edge as the average of its two nodal values.
  template <typename Coefficient>
  Vector<Scalar> edge_coefficients(const Coefficient& coefficient) const {
    Vector<Scalar> nodal(this->node_count());
    for (Index i = 0; i < nodal.size(); ++i) nodal[i] = coefficient(point(i));
    const auto& e = this->edges_;
    Vector<Scalar> c(e.size());
    for (Index k = 0; k < e.size(); ++k)
      c[k] = (nodal[e.tail[std::size_t(k)]] + nodal[e.head[std::size_t(k)]]) / 2;
    return c;
  }

 private:
  Point<Scalar> origin_;
  Scalar spacing_;
  std::array<Index, 3> cells_;
};

template <typename Scalar>
using Grid = std::variant<RadialGrid<Scalar>, TensorGrid<Scalar>>;

template <typename Scalar>
using GridPtr = std::shared_ptr<const Grid<Scalar>>;

template <typename Scalar, typename G>
GridPtr<Scalar> make_grid(G grid) {
  return std::make_shared<const Grid<Scalar>>(std::move(grid));
}

template <typename Scalar>
const NodalLayout<Scalar>& layout(const Grid<Scalar>& grid) {
  return std::visit([](const auto& g) -> const NodalLayout<Scalar>& { return g; }, grid);
}

template <typename Scalar>
Point<Scalar> node_point(const Grid<Scalar>& grid, Index i) {
  return std::visit([i](const auto& g) { return g.point(i); }, grid);
}

template <typename Scalar>
Domain<Scalar> grid_domain(const Grid<Scalar>& grid) {
  return std::visit([](const auto& g) { return g.domain(); }, grid);
}

template <typename Scalar>
Vector<Scalar> distances_from(const Grid<Scalar>& grid, const Point<Scalar>& center) {
  return std::visit([&](const auto& g) { return g.distances_from(center); }, grid);
}

template <typename Scalar, typename Coefficient>
Vector<Scalar> edge_coefficients(const Grid<Scalar>& grid, const Coefficient& coefficient) {
  return std::visit([&](const auto& g) { return g.edge_coefficients(coefficient); }, grid);
}

template <typename Scalar>
const RadialGrid<Scalar>& as_radial(const Grid<Scalar>& grid) {
  if (const auto* radial = std::get_if<RadialGrid<Scalar>>(&grid)) return *radial;
  throw Error(ErrorKind::dimension_mismatch, "operation requires a radial grid");
}

/// Nodal scalar function on a grid; the boundary nodes hold the trace.
template <typename Scalar>
class Field {
 public:
  Field(GridPtr<Scalar> grid, Vector<Scalar> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    if (!grid_) throw Error(ErrorKind::invalid_field, "field without grid");
    if (values_.size() != critlab::layout(*grid_).node_count())
      throw Error(ErrorKind::dimension_mismatch, "field length does not match the grid node count");
  }

  static Field zeros(GridPtr<Scalar> grid) {
    const Index n = critlab::layout(*grid).node_count();
    return Field(std::move(grid), Vector<Scalar>::Zero(n));
  }

  static Field constant(GridPtr<Scalar> grid, Scalar value) {
    const Index n = critlab::layout(*grid).node_count();
    return Field(std::move(grid), Vector<Scalar>::Constant(n, value));
  }

  /// Samples f(x) at every node.
  template <typename F>
  static Field sample(GridPtr<Scalar> grid, const F& f) {
    Vector<Scalar> v(critlab::layout(*grid).node_count());
    for (Index i = 0; i < v.size(); ++i) v[i] = f(node_point(*grid, i));
    return Field(std::move(grid), std::move(v));
  }

  const Grid<Scalar>& grid() const { return *grid_; }
  const GridPtr<Scalar>& grid_ptr() const { return grid_; }
  const NodalLayout<Scalar>& layout() const { return critlab::layout(*grid_); }
  const Vector<Scalar>& values() const { return values_; }
  Vector<Scalar>& values() { return values_; }
  Index size() const { return values_.size(); }

  Vector<Scalar> interior() const { return gather(layout().interior_nodes()); }
  Vector<Scalar> trace() const { return gather(layout().boundary_nodes()); }

  bool same_grid(const Field& other) const { return grid_ == other.grid_; }

 private:
  Vector<Scalar> gather(const std::vector<Index>& index) const {
    Vector<Scalar> out(Index(index.size()));
    for (std::size_t k = 0; k < index.size(); ++k) out[Index(k)] = values_[index[k]];
    return out;
  }

  GridPtr<Scalar> grid_;
  Vector<Scalar> values_;
};

template <typename Scalar>
void require_same_grid(const Field<Scalar>& a, const Field<Scalar>& b) {
  if (!a.same_grid(b)) throw Error(ErrorKind::dimension_mismatch, "fields live on different grids");
}

template <typename Scalar>
void require_finite(const Field<Scalar>& f) {
  for (Index i = 0; i < f.size(); ++i)
    if (!std::isfinite(f.values()[i]))
      throw Error(ErrorKind::invalid_field, "non-finite nodal value at node " + std::to_string(i));
}

/// Quadrature of |f|^power against the domain measure; nodal weights are the
/// dual-cell measures (r^{n-1} w_{n-1} dr radially, trapezoid h^3 on boxes).
template <typename Scalar>
Scalar integrate(const Field<Scalar>& f, Scalar power) {
  if (!(power >= 1)) throw Error(ErrorKind::precondition, "integrate needs power >= 1");
  require_finite(f);
  const auto& w = f.layout().quadrature_weights();
  const auto& v = f.values();
  Scalar sum = 0;
  if (power == 1) {
    for (Index i = 0; i < v.size(); ++i) sum += w[i] * std::abs(v[i]);
  } else if (power == 2) {
    for (Index i = 0; i < v.size(); ++i) sum += w[i] * v[i] * v[i];
  } else {
    for (Index i = 0; i < v.size(); ++i) sum += w[i] * std::pow(std::abs(v[i]), power);
  }
  return sum;
}

/// Gradient quadrature sum_e c_e g_e (f_head - f_tail)^2 for a coefficient
/// callable Scalar(const Point&).
template <typename Scalar, typename Coefficient>
Scalar h1_seminorm_weighted(const Field<Scalar>& f, const Coefficient& coefficient) {
  require_finite(f);
  const auto& e = f.layout().edges();
  const Vector<Scalar> c = edge_coefficients(f.grid(), coefficient);
  const auto& v = f.values();
  Scalar sum = 0;
  for (Index k = 0; k < e.size(); ++k) {
    const Scalar d = v[e.head[std::size_t(k)]] - v[e.tail[std::size_t(k)]];
    sum += c[k] * e.geometric[k] * d * d;
  }
  return sum;
}

/// Linear interpolation of a radial field at radius r.
template <typename Scalar>
Scalar interpolate_radial(const Field<Scalar>& f, Scalar r) {
  const auto& nodes = as_radial(f.grid()).nodes();
  const Index m = nodes.size() - 1;
  if (r <= 0) return f.values()[0];
  if (r >= nodes[m]) return f.values()[m];
  const auto* begin = nodes.data();
  const Index hi = Index(std::upper_bound(begin, begin + m + 1, r) - begin);
  const Index lo = hi - 1;
  const Scalar t = (r - nodes[lo]) / (nodes[hi] - nodes[lo]);
  return (1 - t) * f.values()[lo] + t * f.values()[hi];
}

}  // namespace critlab
