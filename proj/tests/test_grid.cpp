#include "critlab/grid.hpp"
#include "critlab/weights.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace critlab;
using Catch = doctest::Approx;

namespace {

GridPtr<double> ball(int n, double radius, Index cells, double grading = 0) {
  return make_grid<double>(RadialGrid<double>::graded(n, radius, cells, grading));
}

GridPtr<double> cube(Index cells) {
  return make_grid<double>(TensorGrid<double>(Point<double>::Zero(3), 1.0 / double(cells), {cells, cells, cells}));
}

}  // namespace

TEST_CASE("sphere area against tabulated values") {
  // S^2: 4 pi, S^3: 2 pi^2, S^4: 8 pi^2 / 3, S^5: pi^3.
  const double pi = std::acos(-1.0);
  CHECK(sphere_area<double>(3) == Catch(4 * pi).epsilon(1e-14));
  CHECK(sphere_area<double>(4) == Catch(2 * pi * pi).epsilon(1e-14));
  CHECK(sphere_area<double>(5) == Catch(8 * pi * pi / 3).epsilon(1e-14));
  CHECK(sphere_area<double>(6) == Catch(pi * pi * pi).epsilon(1e-14));
}

TEST_CASE("radial grid structure") {
  const auto g = RadialGrid<double>::graded(3, 2.0, 64, 4.0);
  CHECK(g.cells() == 64);
  CHECK(g.nodes()[0] == 0.0);
  CHECK(g.outer_radius() == 2.0);
  for (Index i = 0; i < g.cells(); ++i) CHECK(g.nodes()[i + 1] > g.nodes()[i]);
  // grading pulls nodes towards the origin
  CHECK(g.nodes()[1] < 2.0 / 64);
  CHECK(g.boundary_nodes().size() == 1);
  CHECK(g.boundary_nodes()[0] == 64);
  CHECK(g.quadrature_weights().sum() == Catch(4.0 / 3.0 * std::acos(-1.0) * 8).epsilon(1e-13));

  Vector<double> bad(3);
  bad << 0.0, 0.5, 0.5;
  CHECK_THROWS_AS(RadialGrid<double>::from_nodes(3, bad), Error);
  CHECK_THROWS_AS(RadialGrid<double>::graded(3, 1.0, 1), Error);
}

TEST_CASE("tensor grid structure") {
  const TensorGrid<double> t(Point<double>::Zero(3), 0.25, {4, 4, 4});
  CHECK(t.node_count() == 125);
  CHECK(t.interior_nodes().size() == 27);
  CHECK(t.quadrature_weights().sum() == Catch(1.0).epsilon(1e-14));
  CHECK(t.point(t.index(4, 2, 1))[0] == 1.0);
  CHECK(t.point(t.index(4, 2, 1))[2] == 0.25);
  CHECK_THROWS_AS(TensorGrid<double>(Point<double>::Zero(2), 0.25, {4, 4, 4}), Error);
}

TEST_CASE("integrate: zero, volume and homogeneity") {
  const auto g = ball(3, 1.0, 256, 2.0);
  CHECK(integrate(Field<double>::zeros(g), 1.0) == 0.0);
  CHECK(integrate(Field<double>::constant(g, 1.0), 1.0) ==
        Catch(4.0 * std::acos(-1.0) / 3.0).epsilon(1e-12));
  const double q = 6.0, c = 1.7;
  const double volume = integrate(Field<double>::constant(g, 1.0), 1.0);
  CHECK(integrate(Field<double>::constant(g, c), q) == Catch(std::pow(c, q) * volume).epsilon(1e-12));
  CHECK_THROWS_AS(integrate(Field<double>::zeros(g), 0.5), Error);

  Field<double> f = Field<double>::constant(g, 1.0);
  f.values()[10] = std::nan("");
  CHECK_THROWS_AS(integrate(f, 2.0), Error);
}

TEST_CASE("integrate: degree-one profile converges at second order") {
  // int_B r dx = omega R^{n+1} / (n + 1)
  for (int n : {3, 5}) {
    const double exact = sphere_area<double>(n) / (n + 1);
    double previous = 0;
    for (Index m : {64, 128, 256}) {
      const auto g = ball(n, 1.0, m);
      const auto f = Field<double>::sample(g, [](const Point<double>& x) { return x.norm(); });
      const double err = std::abs(integrate(f, 1.0) - exact);
      if (previous > 0) CHECK(std::log2(previous / err) > 1.8);
      previous = err;
    }
  }
}

TEST_CASE("lq homogeneity on random fields") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2, 2);
  for (auto g : {ball(4, 1.0, 64, 3.0), cube(6)}) {
    for (int trial = 0; trial < 20; ++trial) {
      Field<double> f = Field<double>::zeros(g);
      for (Index i = 0; i < f.size(); ++i) f.values()[i] = U(rng);
      const double c = U(rng), q = 1 + 4 * std::abs(U(rng));
      Field<double> cf = f;
      cf.values() *= c;
      CHECK(std::pow(integrate(cf, q), 1 / q) ==
            Catch(std::abs(c) * std::pow(integrate(f, q), 1 / q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("weighted seminorm examples") {
  const auto g = ball(3, 1.0, 128, 2.0);
  const auto r = Field<double>::sample(g, [](const Point<double>& x) { return x.norm(); });
  const auto one = WeightSpec<double>::constant(1.0);
  CHECK(h1_seminorm_weighted(Field<double>::constant(g, 3.0), one) == 0.0);
  CHECK(h1_seminorm_weighted(r, one) == Catch(4.0 * std::acos(-1.0) / 3.0).epsilon(1e-12));
  const double ratio =
      h1_seminorm_weighted(r, WeightSpec<double>::constant(2.5)) / h1_seminorm_weighted(r, one);
  CHECK(ratio == Catch(2.5).epsilon(1e-15));

  const auto four_d = WeightSpec<double>::power_bump(1, 1, 2, Point<double>::Zero(4), 1);
  try {
    h1_seminorm_weighted(Field<double>::zeros(cube(4)), four_d);
    FAIL("expected a dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::dimension_mismatch);
  }
}

TEST_CASE("weighted seminorm between c1 and c2 times the unweighted one") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-1, 1);
  const auto g = ball(3, 1.0, 96, 2.0);
  const auto p = WeightSpec<double>::power_bump(0.5, 2.0, 1.5, Point<double>::Zero(3), 0.8);
  const auto one = WeightSpec<double>::constant(1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Field<double> f = Field<double>::zeros(g);
    for (Index i = 0; i < f.size(); ++i) f.values()[i] = U(rng);
    const double base = h1_seminorm_weighted(f, one);
    const double weighted = h1_seminorm_weighted(f, p);
    CHECK(weighted >= p.lower_bound() * base * (1 - 1e-12));
    CHECK(weighted <= p.upper_bound() * base * (1 + 1e-12));
    CHECK(base > 0);
  }
}

TEST_CASE("radial interpolation reproduces linear profiles") {
  const auto g = ball(3, 1.0, 32, 2.0);
  const auto f = Field<double>::sample(g, [](const Point<double>& x) { return 2 - 3 * x.norm(); });
  for (double r : {0.0, 0.013, 0.4, 0.77, 1.0}) CHECK(interpolate_radial(f, r) == Catch(2 - 3 * r));
}
