#include "closedgeo/errors.hpp"
#include "closedgeo/finder.hpp"
#include "closedgeo/spectral.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace closedgeo;
constexpr double kPi = std::numbers::pi;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

const Manifold kSphere = Manifold::create(ManifoldKind::round_sphere, {1.0});
const Manifold kEllipsoid = Manifold::create(ManifoldKind::ellipsoid, {1.0, 1.05, 1.1});
const Manifold kFlat = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0});
const Manifold kDonut = Manifold::create(ManifoldKind::torus_of_revolution, {2.0, 1.0});

bool monotone(const std::vector<TraceRow>& trace, int upto) {
  for (int i = 1; i < upto && i < static_cast<int>(trace.size()); ++i) {
    if (trace[static_cast<size_t>(i)].max_length > trace[static_cast<size_t>(i - 1)].max_length + 1e-12) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("options are validated") {
  FinderOptions o;
  o.N = 2;
  CHECK_THROWS_AS(o.validate(), InputError);
  o = {};
  o.grad_tol = 0;
  CHECK_THROWS_AS(o.validate(), InputError);
  o = {};
  o.length_bound = 5.0;
  CHECK(resolve_vertices(kFlat, o, 3) == 21);
  CHECK_THROWS_AS(sweepout_minimax(kFlat, FinderOptions{}), InputError);
  CHECK_THROWS_AS(sweepout_minimax(Manifold::create(ManifoldKind::ellipsoid, {1.0, 1.1, 1.2, 1.3}), FinderOptions{}),
                  InputError);
  CHECK_THROWS_AS(minimize_in_class(kSphere, class_loop(kFlat, {1, 0}, 8), FinderOptions{}), InputError);
}

TEST_CASE("flat torus: straight loops minimize") {
  FinderOptions o;
  const ClosedGeodesic g = minimize_in_class(kFlat, perturb(class_loop(kFlat, {3, 4}, 24), 0.01, 9), o);
  CHECK(g.converged);
  CHECK(std::abs(g.length - 5) < 1e-8);
  CHECK(*g.polygon.homotopy_class() == Eigen::Vector2i(3, 4));
  CHECK(monotone(g.trace, g.iterations));
}

TEST_CASE("torus of revolution: meridian and inner equator") {
  FinderOptions o;
  const ClosedGeodesic mer = minimize_in_class(kDonut, perturb(class_loop(kDonut, {0, 1}, 12, vec({0.5, 0.0})), 0.02, 1), o);
  CHECK(mer.converged);
  CHECK(std::abs(mer.length - 2 * kPi) < 1e-6);
  CHECK(*mer.polygon.homotopy_class() == Eigen::Vector2i(0, 1));

  const ClosedGeodesic lon = minimize_in_class(kDonut, class_loop(kDonut, {1, 0}, 16, vec({0.0, 1.0})), o);
  CHECK(lon.converged);
  CHECK(std::abs(lon.length - 2 * kPi * (2.0 - 1.0)) < 1e-6);
  for (const auto& x : lon.polygon.vertices()) CHECK(std::abs(x[1] - kPi) < 1e-6);
  CHECK(monotone(lon.trace, lon.iterations));
  // Shooting along the inner equator with the Clairaut constant of a parallel closes up.
  const auto f = geodesic_flow(kDonut, vec({0.0, kPi}), vec({1.0, 0.0}), 2 * kPi);
  CHECK(kDonut.lift_displacement(f.position, vec({0.0, kPi})).norm() < 1e-9);
}

TEST_CASE("spheres: null-homotopic seeds collapse") {
  FinderOptions o;
  const ClosedGeodesic g = minimize_in_class(kSphere, latitude_polygon(kSphere, 12, 0.8), o);
  CHECK(g.collapsed);
  CHECK_FALSE(g.converged);
  CHECK(g.length < 10 * o.grad_tol);
  CHECK(monotone(g.trace, static_cast<int>(g.trace.size())));
}

TEST_CASE("sweep-out on the round sphere") {
  for (int f : {8, 16, 64, 9}) {
    CAPTURE(f);
    FinderOptions o;
    o.family_size = f;
    o.N = 32;
    const ClosedGeodesic g = sweepout_minimax(kSphere, o);
    CHECK(g.converged);
    CHECK(g.method == Method::sweepout);
    CHECK(std::abs(g.length - 2 * kPi) < 1e-6);
  }
}

TEST_CASE("sweep-out on the ellipsoid finds a principal ellipse") {
  FinderOptions o;
  o.N = 32;
  const ClosedGeodesic g = sweepout_minimax(kEllipsoid, o);
  REQUIRE(g.converged);
  const double perims[] = {oracle::ellipse_perimeter(1.0, 1.05), oracle::ellipse_perimeter(1.0, 1.1),
                           oracle::ellipse_perimeter(1.05, 1.1)};
  double best = 1;
  for (double p : perims) best = std::min(best, std::abs(g.length - p));
  CHECK(best < 1e-5);
  CHECK(index_nullity(g).index >= 1);
}

TEST_CASE("Newton refinement") {
  FinderOptions o;
  const Polygon eq = latitude_polygon(kSphere, 32, kPi / 2, 2);
  const ClosedGeodesic g = refine_newton(perturb(eq, 1e-3, 4), o);
  CHECK(g.converged);
  CHECK(std::abs(g.length - 2 * kPi) < 1e-9);

  const ClosedGeodesic mid = refine_newton(perturb(principal_ellipse_polygon(kEllipsoid, 0, 2, 32), 1e-3, 5), o);
  CHECK(mid.converged);
  CHECK(std::abs(mid.length - oracle::ellipse_perimeter(1.0, 1.1)) < 1e-9);

  const ClosedGeodesic fixed = refine_newton(eq, o);
  CHECK(fixed.converged);
  CHECK(fixed.iterations <= 1);
  CHECK(fixed.polygon.vertices() == eq.vertices());
}

TEST_CASE("Newton gives up gracefully far from a critical point") {
  FinderOptions o;
  o.max_iters = 3;
  const ClosedGeodesic g = refine_newton(latitude_polygon(kSphere, 16, 0.5), o);
  CHECK_FALSE(g.converged);
  CHECK(g.iterations <= 3);
}

TEST_CASE("finder output is deterministic") {
  FinderOptions o;
  o.N = 16;
  o.family_size = 9;
  const auto a = sweepout_minimax(kEllipsoid, o);
  const auto b = sweepout_minimax(kEllipsoid, o);
  CHECK(a.polygon.vertices() == b.polygon.vertices());
  o.threads = 3;
  const auto c = sweepout_minimax(kEllipsoid, o);
  CHECK(a.polygon.vertices() == c.polygon.vertices());
  const auto s1 = minimize_in_class(kFlat, perturb(class_loop(kFlat, {2, 1}, 12), 0.02, 42), o);
  const auto s2 = minimize_in_class(kFlat, perturb(class_loop(kFlat, {2, 1}, 12), 0.02, 42), o);
  CHECK(s1.polygon.vertices() == s2.polygon.vertices());
}

TEST_CASE("seed helpers") {
  const Polygon lat = latitude_polygon(kEllipsoid, 10, 1.0);
  for (const auto& x : lat.vertices()) CHECK(std::abs(kEllipsoid.constraint_residual(x)) < 1e-12);
  CHECK_THROWS_AS(latitude_polygon(kEllipsoid, 10, 0.0), InputError);
  CHECK_THROWS_AS(principal_ellipse_polygon(kEllipsoid, 1, 1, 10), InputError);
  CHECK_THROWS_AS(class_loop(kFlat, {0, 0}, 10), InputError);
  CHECK_THROWS_AS(class_loop(kSphere, {1, 0}, 10), InputError);
  const Polygon a = perturb(lat, 1e-3, 1), b = perturb(lat, 1e-3, 1), c = perturb(lat, 1e-3, 2);
  CHECK(a.vertices() == b.vertices());
  CHECK(a.vertices() != c.vertices());
}
