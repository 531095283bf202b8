#include "closedgeo/errors.hpp"
#include "closedgeo/manifold.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace closedgeo;
constexpr double kPi = std::numbers::pi;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

std::vector<Manifold> all_manifolds() {
  return {Manifold::create(ManifoldKind::round_sphere, {1.0}),
          Manifold::create(ManifoldKind::ellipsoid, {1.0, 1.05, 1.1}),
          Manifold::create(ManifoldKind::ellipsoid, {1.0, 1.2, 1.4, 1.6}),
          Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0}),
          Manifold::create(ManifoldKind::torus_of_revolution, {2.0, 1.0})};
}

Point random_point(const Manifold& m, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x(m.ambient_dim());
  if (m.backend() == Backend::embedded_level_set) {
    for (int i = 0; i < x.size(); ++i) x[i] = g(rng);
    return m.canonical(x);
  }
  for (int i = 0; i < x.size(); ++i) x[i] = u(rng) * m.periods()[i];
  return x;
}

Vec random_unit_tangent(const Manifold& m, const Point& x, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  const Frame b = m.tangent_basis(x);
  Eigen::VectorXd c(b.cols());
  for (int i = 0; i < c.size(); ++i) c[i] = g(rng);
  Vec v = b * c;
  return v / m.norm(x, v);
}

}  // namespace

TEST_CASE("manifold parameters are validated") {
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::round_sphere, {}), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::round_sphere, {-1.0}), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::ellipsoid, {1.0, 2.0}), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::ellipsoid, {1.0, 0.0, 2.0}), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::torus_of_revolution, {1.0, 1.0}), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::torus_of_revolution, {1.0, 2.0}), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0}, 0.6), InputError);
  CHECK_THROWS_AS(Manifold::create(ManifoldKind::round_sphere, {1.0}, 3.5), InputError);
  CHECK_THROWS_AS(parse_manifold_kind("klein_bottle"), InputError);
}

TEST_CASE("default connection radii") {
  CHECK(Manifold::create(ManifoldKind::round_sphere, {2.0}).delta() == doctest::Approx(kPi));
  CHECK(Manifold::create(ManifoldKind::round_sphere, {2.0}).injectivity_radius() == doctest::Approx(2 * kPi));
  CHECK(Manifold::create(ManifoldKind::ellipsoid, {1.0, 1.05, 1.1}).delta() == doctest::Approx(kPi / 4));
  CHECK(Manifold::create(ManifoldKind::flat_torus, {1.0, 2.0}).delta() == doctest::Approx(0.25));
  CHECK(Manifold::create(ManifoldKind::flat_torus, {1.0, 2.0}).injectivity_radius() == doctest::Approx(0.5));
  CHECK(Manifold::create(ManifoldKind::torus_of_revolution, {2.0, 1.0}).delta() == doctest::Approx(kPi / 2));
  for (const auto& m : all_manifolds()) CHECK(m.delta() <= m.injectivity_radius());
}

TEST_CASE("geodesic flow: quarter great circle") {
  const auto s = Manifold::create(ManifoldKind::round_sphere, {1.0});
  const auto f = geodesic_flow(s, vec({0, 0, 1}), vec({1, 0, 0}), kPi / 2);
  // RK4 at 64 steps over a full delta-length segment: the global error is a few 1e-9.
  CHECK((f.position - vec({1, 0, 0})).norm() < 1e-8);
  CHECK((f.velocity - vec({0, 0, -1})).norm() < 1e-8);
  const double coarse = (f.position - vec({1, 0, 0})).norm();
  const double fine = (detail::integrate(s, vec({0, 0, 1}), vec({kPi / 2, 0, 0}), 128, false).end - vec({1, 0, 0})).norm();
  CHECK(fine < coarse / 8);
}

TEST_CASE("geodesic flow: flat torus wraps around") {
  const auto t = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0});
  const auto f = geodesic_flow(t, vec({0.1, 0.2}), vec({1, 0}), 0.95);
  CHECK((f.position - vec({0.05, 0.2})).norm() < 1e-12);
}

TEST_CASE("geodesic flow on the ellipsoid agrees with a 10x finer integration") {
  const auto e = Manifold::create(ManifoldKind::ellipsoid, {1.0, 1.05, 1.1});
  const Vec v = vec({0, 1, 0});
  const auto coarse = geodesic_flow(e, vec({1, 0, 0}), v, 0.3);
  const auto fine = detail::integrate(e, vec({1, 0, 0}), v * 0.3, 640, false);
  CHECK((coarse.position - fine.end).norm() < 1e-9);
  // A tilted direction leaves the principal plane.
  const Vec w = vec({0, 0.6, 0.8});
  const auto c2 = geodesic_flow(e, vec({1, 0, 0}), w, 0.3);
  const auto f2 = detail::integrate(e, vec({1, 0, 0}), w * 0.3, 640, false);
  CHECK((c2.position - f2.end).norm() < 1e-9);
  CHECK(std::abs(e.constraint_residual(c2.position)) < 1e-12);
}

TEST_CASE("geodesic flow rejects bad velocities") {
  const auto s = Manifold::create(ManifoldKind::round_sphere, {1.0});
  CHECK_THROWS_AS(geodesic_flow(s, vec({0, 0, 1}), vec({2, 0, 0}), 1.0), InputError);
  CHECK_THROWS_AS(geodesic_flow(s, vec({0, 0, 1}), vec({0.6, 0, 0.8}), 1.0), InputError);
  CHECK_THROWS_AS(geodesic_flow(s, vec({0, 0, 1}), vec({1, 0, 0}), -1.0), InputError);
  CHECK_THROWS_AS(geodesic_flow(s, vec({0, 0, 2}), vec({1, 0, 0}), 1.0), InputError);
}

TEST_CASE("connect: reference segments") {
  const auto s = Manifold::create(ManifoldKind::round_sphere, {1.0});
  const auto seg = connect(s, vec({0, 0, 1}), vec({1, 0, 0}));
  CHECK(std::abs(seg.length - kPi / 2) < 1e-8);
  CHECK(std::abs(seg.initial_velocity.norm() - 1) < 1e-10);
  CHECK(seg.sample_count() >= 2);

  const auto t = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0});
  const auto ts = connect(t, vec({0.1, 0.2}), vec({0.3, 0.2}));
  CHECK(std::abs(ts.length - 0.2) < 1e-14);
  CHECK((ts.initial_velocity - vec({1, 0})).norm() < 1e-14);
}

TEST_CASE("connect on the ellipsoid matches the arclength of the principal section") {
  const double a = 1.0, b = 1.05;
  const auto e = Manifold::create(ManifoldKind::ellipsoid, {a, b, 1.1});
  // The z = 0 section is a geodesic; choose parameters whose arc has length about 0.4.
  const double t0 = 0.3, t1 = 0.3 + 0.39;
  const auto seg = connect(e, vec({a * std::cos(t0), b * std::sin(t0), 0}), vec({a * std::cos(t1), b * std::sin(t1), 0}));
  auto speed = [&](double t) { return std::hypot(a * std::sin(t), b * std::cos(t)); };
  const double arc = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, t0, t1, 15, 1e-15);
  CHECK(arc == doctest::Approx(0.4).epsilon(0.05));
  CHECK(std::abs(seg.length - arc) < 1e-8);
}

TEST_CASE("connect rejects points beyond delta") {
  const auto t = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0});
  CHECK_THROWS_AS(connect(t, vec({0.0, 0.0}), vec({0.3, 0.0})), DomainError);
  const auto s = Manifold::create(ManifoldKind::round_sphere, {1.0});
  CHECK_THROWS_AS(connect(s, vec({0, 0, 1}), vec({0, 0, -1})), DomainError);
}

TEST_CASE("torus lifts: exact half-period ties go to the negative side") {
  const auto t = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0}, 0.5);
  const auto seg = connect(t, vec({0.0, 0.0}), vec({0.5, 0.0}));
  CHECK(seg.length == doctest::Approx(0.5));
  CHECK((seg.initial_velocity - vec({-1, 0})).norm() < 1e-14);
  CHECK(t.lift_displacement(vec({0.0, 0.0}), vec({0.5, 0.5}))[1] == doctest::Approx(-0.5));
}

TEST_CASE("connect inverts the flow for every manifold") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  for (const auto& m : all_manifolds()) {
    CAPTURE(to_string(m.kind()));
    for (int trial = 0; trial < 20; ++trial) {
      const Point p = random_point(m, rng);
      const Vec v = random_unit_tangent(m, p, rng);
      const double t = u(rng) * m.delta();
      const auto f = geodesic_flow(m, p, v, t);
      const auto seg = connect(m, p, f.position);
      CHECK(std::abs(seg.length - t) < 1e-7);
      CHECK((seg.initial_velocity - v).norm() < 1e-7);
      const auto back = connect(m, f.position, p);
      CHECK(std::abs(back.length - seg.length) < 1e-10);
      for (const auto& x : seg.samples) CHECK(std::abs(m.constraint_residual(x)) <= 1e-10);
      // Integrating from the start for the returned length lands on the end.
      const auto again = geodesic_flow(m, seg.start, seg.initial_velocity, seg.length);
      CHECK(m.lift_displacement(again.position, seg.end).norm() < 1e-8);
    }
  }
}

TEST_CASE("parallel transport is an isometry") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (const auto& m : all_manifolds()) {
    CAPTURE(to_string(m.kind()));
    for (int trial = 0; trial < 10; ++trial) {
      const Point p = random_point(m, rng);
      const auto q = geodesic_flow(m, p, random_unit_tangent(m, p, rng), u(rng) * m.delta()).position;
      const auto seg = connect(m, p, q);
      const Vec a = random_unit_tangent(m, p, rng);
      const Vec b = random_unit_tangent(m, p, rng);
      const Vec ta = parallel_transport(m, seg, a);
      const Vec tb = parallel_transport(m, seg, b);
      CHECK(std::abs(m.norm(seg.end, ta) - 1) < 1e-8);
      CHECK(std::abs(m.inner(seg.end, ta, tb) - m.inner(p, a, b)) < 1e-8);
      CHECK(parallel_transport(m, seg, Vec::Zero(m.ambient_dim())).norm() == 0.0);
      // The velocity is parallel along a geodesic.
      CHECK((parallel_transport(m, seg, seg.initial_velocity) - seg.final_velocity).norm() < 1e-8);
    }
  }
}

TEST_CASE("parallel transport on the flat torus is trivial") {
  const auto t = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0});
  const auto seg = connect(t, vec({0.9, 0.1}), vec({0.1, 0.2}));
  CHECK((parallel_transport(t, seg, vec({0, 1})) - vec({0, 1})).norm() < 1e-14);
  CHECK_THROWS_AS(parallel_transport(Manifold::create(ManifoldKind::round_sphere, {1.0}),
                                     connect(Manifold::create(ManifoldKind::round_sphere, {1.0}), vec({0, 0, 1}), vec({1, 0, 0})),
                                     vec({0, 0, 1})),
                  InputError);
}

TEST_CASE("holonomy around a latitude circle approaches the enclosed area") {
  const auto s = Manifold::create(ManifoldKind::round_sphere, {1.0});
  const double theta = kPi / 4;
  auto rotation = [&](int n) {
    std::vector<GeodesicSegment> segs;
    std::vector<Point> v;
    for (int k = 0; k < n; ++k) {
      const double phi = 2 * kPi * k / n;
      v.push_back(vec({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)}));
    }
    const Point& x0 = v[0];
    const Vec w0 = vec({0, 1, 0});
    Vec w = w0;
    for (int k = 0; k < n; ++k) w = parallel_transport(s, connect(s, v[static_cast<size_t>(k)], v[static_cast<size_t>((k + 1) % n)]), w);
    const Vec jw = x0.head<3>().cross(w0.head<3>());
    return std::abs(std::atan2(w.dot(jw), w.dot(w0)));
  };
  const double coarse = rotation(256), fine = rotation(512);
  const double extrapolated = (4 * fine - coarse) / 3;
  CHECK(std::abs(extrapolated - 2 * kPi * (1 - std::cos(theta))) < 1e-6);
}

TEST_CASE("Jacobi operator reduces to Gaussian curvature on surfaces") {
  const auto s = Manifold::create(ManifoldKind::round_sphere, {2.0});
  const Point x = vec({0, 0, 2});
  const Vec u = vec({1, 0, 0});
  CHECK(s.jacobi_operator(x, u, s.normal_basis(x, u))(0, 0) == doctest::Approx(0.25));

  const auto t = Manifold::create(ManifoldKind::torus_of_revolution, {2.0, 1.0});
  const Point outer = vec({0.0, 0.0});
  const Vec along = vec({1.0 / 3.0, 0.0});
  CHECK(t.jacobi_operator(outer, along, t.normal_basis(outer, along))(0, 0) == doctest::Approx(1.0 / 3.0));
  const Point inner = vec({0.0, kPi});
  CHECK(t.jacobi_operator(inner, vec({1.0, 0.0}), t.normal_basis(inner, vec({1.0, 0.0})))(0, 0) == doctest::Approx(-1.0));

  const auto f = Manifold::create(ManifoldKind::flat_torus, {1.0, 1.0});
  CHECK(f.jacobi_operator(vec({0.2, 0.3}), vec({1, 0}), f.normal_basis(vec({0.2, 0.3}), vec({1, 0})))(0, 0) == 0.0);

  // Ellipsoid vertex (0, 0, c): principal curvatures c / a^2 and c / b^2.
  const auto e = Manifold::create(ManifoldKind::ellipsoid, {1.0, 2.0, 3.0});
  const Point top = vec({0, 0, 3});
  CHECK(e.jacobi_operator(top, vec({1, 0, 0}), e.normal_basis(top, vec({1, 0, 0})))(0, 0) ==
        doctest::Approx(3.0 * 3.0 / 4.0));
}

TEST_CASE("tangent and normal bases are orthonormal") {
  std::mt19937_64 rng(3);
  for (const auto& m : all_manifolds()) {
    const Point x = random_point(m, rng);
    const Frame b = m.tangent_basis(x);
    CHECK(b.cols() == m.dim());
    for (int i = 0; i < b.cols(); ++i) {
      for (int j = 0; j < b.cols(); ++j) CHECK(std::abs(m.inner(x, b.col(i), b.col(j)) - (i == j)) < 1e-12);
      CHECK(m.tangency_defect(x, b.col(i)) < 1e-12);
    }
    const Vec u = random_unit_tangent(m, x, rng);
    const Frame nb = m.normal_basis(x, u);
    CHECK(nb.cols() == m.dim() - 1);
    for (int i = 0; i < nb.cols(); ++i) CHECK(std::abs(m.inner(x, nb.col(i), u)) < 1e-12);
  }
}
