#include "critlab/weights.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace critlab;
using doctest::Approx;

namespace {

GridPtr<double> unit_ball(Index cells = 64) {
  return make_grid<double>(RadialGrid<double>::graded(3, 1.0, cells, 2.0));
}

Point<double> at(double x, double y, double z) {
  Point<double> p(3);
  p << x, y, z;
  return p;
}

ErrorKind kind_of(const auto& call) {
  try {
    call();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::io;
}

}  // namespace

TEST_CASE("eval_weight examples") {
  const Domain<double> ball = Ball<double>{Point<double>::Zero(3), 1.0};
  CHECK(eval_weight(WeightSpec<double>::constant(2.0), ball, at(0.3, -0.2, 0.1)) == 2.0);
  const auto bump = WeightSpec<double>::power_bump(1, 1, 2, Point<double>::Zero(3), 1);
  CHECK(eval_weight(bump, ball, at(0.5, 0, 0)) == Approx(1.25));
  CHECK(eval_weight(bump, ball, at(0.3, 0.4, 0)) == Approx(1.25));
  CHECK(kind_of([&] { eval_weight(bump, ball, at(1.5, 0, 0)); }) == ErrorKind::out_of_domain);
}

TEST_CASE("power_bump parameters are validated") {
  const auto origin = Point<double>::Zero(3);
  CHECK_THROWS_AS(WeightSpec<double>::power_bump(1, 1, 1.0, origin, 1), Error);
  CHECK_THROWS_AS(WeightSpec<double>::power_bump(1, 0, 2.0, origin, 1), Error);
  CHECK_THROWS_AS(WeightSpec<double>::power_bump(1, 1, 2.0, origin, 0), Error);
}

TEST_CASE("power_bump capping is continuous at the bump radius") {
  const auto bump = WeightSpec<double>::power_bump(0.7, 1.3, 2.5, Point<double>::Zero(3), 0.6);
  const double inside = bump(at(0.6 - 1e-12, 0, 0));
  const double outside = bump(at(0.6 + 1e-12, 0, 0));
  CHECK(std::abs(inside - outside) < 1e-10);
  CHECK(bump(at(0.9, 0, 0)) == Approx(0.7 + 1.3 * std::pow(0.6, 2.5)));
}

TEST_CASE("validate reports bounds and rejects nonpositive tables") {
  const auto grid = unit_ball();
  const auto flat = validate(WeightSpec<double>::constant(1.0), *grid);
  CHECK(flat.min == 1.0);
  CHECK(flat.max == 1.0);

  const auto bump = validate(WeightSpec<double>::power_bump(1, 1, 2, {}, 1), *grid);
  CHECK(bump.min == 1.0);
  CHECK(bump.argmin == 0);
  CHECK(bump.max == Approx(2.0));
  CHECK(bump.argmax == 64);

  Vector<double> radii(3), values(3);
  radii << 0.0, 0.5, 1.0;
  values << 1.0, 0.0, 2.0;
  const auto table = WeightSpec<double>::tabulated(radii, values);
  CHECK(kind_of([&] { validate(table, *grid); }) == ErrorKind::validation);
}

TEST_CASE("power_bump grid minimum sits at the node nearest the center") {
  const auto box = make_grid<double>(TensorGrid<double>(Point<double>::Zero(3), 0.1, {10, 10, 10}));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.2, 0.8);
  for (int trial = 0; trial < 10; ++trial) {
    const Point<double> a = at(U(rng), U(rng), U(rng));
    const auto report = validate(WeightSpec<double>::power_bump(1, 2, 1.7, a, 0.3), *box);
    Index nearest = 0;
    double best = 1e300;
    for (Index i = 0; i < layout(*box).node_count(); ++i) {
      const double d = (node_point(*box, i) - a).norm();
      if (d < best) best = d, nearest = i;
    }
    CHECK(report.argmin == nearest);
  }
}

TEST_CASE("weights must be compatible with the grid") {
  const auto grid = unit_ball();
  const auto shifted = WeightSpec<double>::power_bump(1, 1, 2, at(0.1, 0, 0), 0.5);
  CHECK(kind_of([&] { validate(shifted, *grid); }) == ErrorKind::dimension_mismatch);
  const auto box = make_grid<double>(TensorGrid<double>(Point<double>::Zero(3), 0.25, {4, 4, 4}));
  const auto on_face = WeightSpec<double>::power_bump(1, 1, 2, at(0, 0.5, 0.5), 0.5);
  CHECK(kind_of([&] { validate(on_face, *box); }) == ErrorKind::geometry);
}

TEST_CASE("scaled multiplies every value") {
  const auto bump = WeightSpec<double>::power_bump(1, 2, 3, {}, 0.8);
  const auto twice = scaled(bump, 2.0);
  for (double r : {0.0, 0.3, 0.79, 0.95}) CHECK(twice(at(r, 0, 0)) == Approx(2 * bump(at(r, 0, 0))));
}

TEST_CASE("boundary data") {
  const auto grid = unit_ball();
  const auto c = boundary_values(BoundarySpec<double>::constant(0.3, true), *grid);
  CHECK(c.size() == 1);
  CHECK(c[0] == 0.3);
  CHECK(kind_of([&] { boundary_values(BoundarySpec<double>::constant(0.0, true), *grid); }) ==
        ErrorKind::validation);
  CHECK(kind_of([&] { boundary_values(BoundarySpec<double>::constant(-1.0, true), *grid); }) ==
        ErrorKind::validation);

  const auto box = make_grid<double>(TensorGrid<double>(Point<double>::Zero(3), 0.5, {2, 2, 2}));
  const auto g = BoundarySpec<double>::trace_of(TraceFunction::x1x2x3, 2.0);
  const auto values = boundary_values(g, *box);
  CHECK(values.size() == 26);
  CHECK(values.maxCoeff() == 2.0);  // at (1, 1, 1)
  CHECK(g(at(0.5, 0.5, 1.0)) == 0.5);
  CHECK(BoundarySpec<double>::trace_of(TraceFunction::exp_cos)(at(1, 0, 0)) == Approx(std::exp(1.0)));
}
