#include "closedgeo/loopspace.hpp"

#include "closedgeo/errors.hpp"

#include <cmath>
#include <string>

namespace closedgeo {

namespace {

void require_nontrivial(const Polygon& p, std::string_view op) {
  if (p.trivial()) throw InputError(std::string(op) + " is undefined on a point curve");
}

Eigen::VectorXi winding_between(const Manifold& m, const Point& start, const Point& lifted_end, const Point& end) {
  if (m.backend() != Backend::periodic_chart) return {};
  Eigen::VectorXi w(m.ambient_dim());
  for (int i = 0; i < m.ambient_dim(); ++i) {
    w[i] = static_cast<int>(std::lround((lifted_end[i] - end[i]) / m.periods()[i]));
  }
  (void)start;
  return w;
}

}  // namespace

std::string_view to_string(Method method) {
  switch (method) {
    case Method::minimize: return "minimize";
    case Method::sweepout: return "sweepout";
    case Method::newton: return "newton";
    case Method::manual: return "manual";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "minimize") return Method::minimize;
  if (name == "sweepout") return Method::sweepout;
  if (name == "newton") return Method::newton;
  if (name == "manual") return Method::manual;
  throw InputError("unknown method '" + std::string(name) + "'");
}

int vertices_for_length(double length_bound, double delta) {
  if (!(length_bound > 0) || !(delta > 0)) throw InputError("length bound and delta must be positive");
  return static_cast<int>(std::floor(length_bound / delta)) + 1;
}

Polygon Polygon::through(const Manifold& m, std::vector<Point> vertices) {
  const int n = static_cast<int>(vertices.size());
  if (n < 3) throw InputError("a polygon needs at least 3 vertices");
  for (auto& v : vertices) {
    if (m.backend() == Backend::periodic_chart) v = m.canonical(v);
    m.require_point(v, "vertex");
  }
  Polygon p(m);
  p.segments_.reserve(vertices.size());
  for (int i = 0; i < n; ++i) {
    const Point& a = vertices[static_cast<size_t>(i)];
    const Point& b = vertices[static_cast<size_t>((i + 1) % n)];
    try {
      p.segments_.push_back(connect(m, a, b));
    } catch (const DomainError&) {
      double estimate = 0;
      for (int j = 0; j < n; ++j) {
        const Point& s = vertices[static_cast<size_t>(j)];
        const Point& e = vertices[static_cast<size_t>((j + 1) % n)];
        estimate += m.norm(s, m.lift_displacement(s, e));
      }
      throw ResolutionError("edge " + std::to_string(i) + " is longer than delta",
                            vertices_for_length(estimate, m.delta()));
    }
  }
  p.vertices_ = std::move(vertices);
  p.finish();
  return p;
}

Polygon Polygon::from_segments(const Manifold& m, std::vector<GeodesicSegment> segments) {
  if (segments.size() < 3) throw InputError("a polygon needs at least 3 vertices");
  Polygon p(m);
  p.vertices_.reserve(segments.size());
  for (const auto& s : segments) p.vertices_.push_back(s.start);
  p.segments_ = std::move(segments);
  p.finish();
  return p;
}

Polygon Polygon::point_curve(const Manifold& m, Point x) {
  if (m.backend() == Backend::periodic_chart) x = m.canonical(x);
  m.require_point(x);
  Polygon p(m);
  p.vertices_ = {x};
  p.trivial_ = true;
  if (m.backend() == Backend::periodic_chart) p.homotopy_class_ = Eigen::VectorXi::Zero(m.ambient_dim());
  return p;
}

void Polygon::finish() {
  if (manifold_.backend() != Backend::periodic_chart) return;
  Eigen::VectorXi cls = Eigen::VectorXi::Zero(manifold_.ambient_dim());
  for (const auto& s : segments_) cls += s.winding;
  homotopy_class_ = cls;
}

double critical_tolerance(double grad_tol, double length) { return grad_tol * std::max(1.0, length); }

ClosedGeodesic certify(Polygon p, Method method, double grad_tol) {
  require_nontrivial(p, "certify");
  ClosedGeodesic g{std::move(p), 0, 0, Method::manual, false, false, 0, {}};
  g.length = length(g.polygon);
  g.grad_norm = grad_norm(g.polygon);
  g.method = method;
  g.converged = g.grad_norm <= critical_tolerance(grad_tol, g.length);
  return g;
}

Polygon polygon_from_samples(const Manifold& m, const std::vector<Point>& samples, int n) {
  if (n < 3) throw InputError("polygon size must be at least 3");
  if (samples.size() < 3) throw InputError("need at least 3 samples");
  const bool chart = m.backend() == Backend::periodic_chart;
  const size_t count = samples.size();

  // Lift the closed sample polyline and accumulate its length.
  std::vector<Point> lifted(count + 1);
  std::vector<double> cumulative(count + 1, 0.0);
  lifted[0] = chart ? m.canonical(samples[0]) : samples[0];
  for (size_t k = 0; k < count; ++k) {
    const Point& a = samples[k];
    const Point& b = samples[(k + 1) % count];
    const Vec d = m.lift_displacement(chart ? m.canonical(a) : a, chart ? m.canonical(b) : b);
    lifted[k + 1] = lifted[k] + d;
    const Point mid = lifted[k] + 0.5 * d;
    cumulative[k + 1] = cumulative[k] + m.norm(mid, d);
  }
  const double total = cumulative.back();
  if (!(total > 0)) throw InputError("samples describe a point curve");

  std::vector<Point> vertices;
  vertices.reserve(static_cast<size_t>(n));
  size_t k = 0;
  for (int j = 0; j < n; ++j) {
    const double target = total * j / n;
    while (k + 1 < count && cumulative[k + 1] <= target) ++k;
    const double span = cumulative[k + 1] - cumulative[k];
    const double frac = span > 0 ? (target - cumulative[k]) / span : 0.0;
    vertices.push_back(m.canonical(lifted[k] + frac * (lifted[k + 1] - lifted[k])));
  }
  try {
    return Polygon::through(m, std::move(vertices));
  } catch (const ResolutionError&) {
    throw ResolutionError("polygon with " + std::to_string(n) + " vertices has an edge longer than delta",
                          vertices_for_length(total, m.delta()));
  }
}

double length(const Polygon& p) {
  double total = 0;
  for (const auto& s : p.segments()) total += s.length;
  return total;
}

Polygon subdivide(const Polygon& p, int l) {
  require_nontrivial(p, "subdivide");
  if (l < 1) throw InputError("subdivision factor must be >= 1");
  if (l == 1) return p;
  const Manifold& m = p.manifold();
  const bool chart = m.backend() == Backend::periodic_chart;
  std::vector<GeodesicSegment> out;
  out.reserve(static_cast<size_t>(p.size() * l));
  for (const auto& seg : p.segments()) {
    if (seg.length == 0) throw NumericError("cannot subdivide a zero-length edge");
    const double piece = seg.length / l;
    // Positions and velocities along the original geodesic at k * piece.
    std::vector<Point> lifted(static_cast<size_t>(l + 1));
    std::vector<Vec> vel(static_cast<size_t>(l + 1));
    lifted[0] = seg.start;
    vel[0] = seg.initial_velocity;
    for (int k = 1; k < l; ++k) {
      const double t = piece * k;
      const auto traj = detail::integrate(m, seg.start, seg.initial_velocity * t, detail::steps_for(t, m.delta()), false);
      lifted[static_cast<size_t>(k)] = traj.end;
      Vec v = m.to_tangent(traj.end, traj.end_velocity);
      vel[static_cast<size_t>(k)] = v / m.norm(traj.end, v);
    }
    vel[static_cast<size_t>(l)] = seg.final_velocity;
    Point lifted_end = seg.end;
    if (chart) {
      for (int i = 0; i < m.ambient_dim(); ++i) lifted_end[i] += seg.winding[i] * m.periods()[i];
    }
    lifted[static_cast<size_t>(l)] = lifted_end;

    for (int k = 0; k < l; ++k) {
      const Point start = k == 0 ? seg.start : m.canonical(lifted[static_cast<size_t>(k)]);
      const Point end = k + 1 == l ? seg.end : m.canonical(lifted[static_cast<size_t>(k + 1)]);
      const Point lifted_stop = start + (lifted[static_cast<size_t>(k + 1)] - lifted[static_cast<size_t>(k)]);
      GeodesicSegment sub = detail::segment_from_velocity(m, start, vel[static_cast<size_t>(k)] * piece, end,
                                                          winding_between(m, start, lifted_stop, end));
      sub.length = piece;
      sub.initial_velocity = vel[static_cast<size_t>(k)];
      sub.final_velocity = vel[static_cast<size_t>(k + 1)];
      out.push_back(std::move(sub));
    }
  }
  return Polygon::from_segments(m, std::move(out));
}

Polygon reverse(const Polygon& p) {
  require_nontrivial(p, "reverse");
  const int n = p.size();
  std::vector<GeodesicSegment> segs;
  segs.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) segs.push_back(p.segment(((n - 2 - j) % n + n) % n).reversed());
  return Polygon::from_segments(p.manifold(), std::move(segs));
}

Polygon rotate(const Polygon& p, int k) {
  require_nontrivial(p, "rotate");
  const int n = p.size();
  const int shift = ((k % n) + n) % n;
  std::vector<GeodesicSegment> segs;
  segs.reserve(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j) segs.push_back(p.segment((j + shift) % n));
  return Polygon::from_segments(p.manifold(), std::move(segs));
}

Polygon iterate(const Polygon& p, int n) {
  require_nontrivial(p, "iterate");
  if (n < 1) throw InputError("iteration count must be >= 1");
  std::vector<GeodesicSegment> segs;
  segs.reserve(static_cast<size_t>(p.size() * n));
  for (int r = 0; r < n; ++r) segs.insert(segs.end(), p.segments().begin(), p.segments().end());
  return Polygon::from_segments(p.manifold(), std::move(segs));
}

std::vector<Vec> grad_length(const Polygon& p) {
  require_nontrivial(p, "grad_length");
  const Manifold& m = p.manifold();
  const int n = p.size();
  std::vector<Vec> grad;
  grad.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto& in = p.segment((i + n - 1) % n);
    const auto& out = p.segment(i);
    if (in.length == 0 || out.length == 0) throw NumericError("zero-length edge at vertex " + std::to_string(i));
    grad.push_back(m.to_tangent(p.vertex(i), in.final_velocity - out.initial_velocity));
  }
  return grad;
}

double grad_norm(const Polygon& p, const std::vector<Vec>& grad) {
  double sq = 0;
  for (int i = 0; i < p.size(); ++i) sq += p.manifold().inner(p.vertex(i), grad[static_cast<size_t>(i)], grad[static_cast<size_t>(i)]);
  return std::sqrt(sq);
}

double grad_norm(const Polygon& p) { return grad_norm(p, grad_length(p)); }

Polygon birkhoff_shorten(const Polygon& p) {
  require_nontrivial(p, "birkhoff_shorten");
  const Manifold& m = p.manifold();
  std::vector<Point> mids;
  mids.reserve(static_cast<size_t>(p.size()));
  for (const auto& seg : p.segments()) {
    const double half = seg.length / 2;
    const auto traj = detail::integrate(m, seg.start, seg.initial_velocity * half, detail::steps_for(half, m.delta()), false);
    mids.push_back(m.canonical(traj.end));
  }
  try {
    return Polygon::through(m, std::move(mids));
  } catch (const ResolutionError& e) {
    throw ResolutionError(std::string("midpoint polygon violates delta: ") + e.what(), e.min_vertices());
  }
}

}  // namespace closedgeo
