#include "closedgeo/finder.hpp"

#include "closedgeo/errors.hpp"
#include "closedgeo/parallel.hpp"
#include "closedgeo/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace closedgeo {

namespace {

constexpr double kStallDecrease = 1e-13;
constexpr double kTieTolerance = 1e-14;
constexpr int kNewtonEvery = 50;
constexpr double kNewtonHandoff = 1e-3;
constexpr int kMaxHalvings = 40;
constexpr int kNewtonAttemptIters = 50;
constexpr double kRefineFactor = 1.5;
constexpr double kRefineDeltaFraction = 0.5;
constexpr int kMaxGrowth = 8;

void require_same_manifold(const Manifold& m, const Polygon& p) {
  if (!(m == p.manifold())) throw InputError("seed polygon lives on a different manifold");
}

bool sphere_like(const Manifold& m) {
  return (m.kind() == ManifoldKind::round_sphere || m.kind() == ManifoldKind::ellipsoid) && m.dim() == 2;
}

/// Largest distance between corresponding vertices of two family members.
double member_gap(const Polygon& a, const Polygon& b) {
  double gap = 0;
  for (int i = 0; i < a.size(); ++i) gap = std::max(gap, a.manifold().lift_displacement(a.vertex(i), b.vertex(i)).norm());
  return gap;
}

/// Vertex-wise geodesic midpoints of two neighbouring members.
Polygon midpoint_member(const Polygon& a, const Polygon& b) {
  const Manifold& m = a.manifold();
  std::vector<Point> verts;
  verts.reserve(static_cast<size_t>(a.size()));
  for (int i = 0; i < a.size(); ++i) {
    const GeodesicSegment seg = connect(m, a.vertex(i), b.vertex(i));
    const double half = seg.length / 2;
    verts.push_back(seg.length == 0 ? seg.start
                                    : m.canonical(detail::integrate(m, seg.start, seg.initial_velocity * half,
                                                                    detail::steps_for(half, m.delta()), false)
                                                      .end));
  }
  return Polygon::through(m, std::move(verts));
}

int longest_axis(const Manifold& m) {
  const Vec& a = m.semi_axes();
  int best = 0;
  for (int i = 1; i < a.size(); ++i) {
    if (a[i] > a[best]) best = i;
  }
  return best;
}

}  // namespace

void FinderOptions::validate() const {
  if (N != 0 && N < 3) throw InputError("N must be at least 3");
  if (N < 0) throw InputError("N must be positive");
  if (length_bound && !(*length_bound > 0)) throw InputError("length bound must be positive");
  if (max_iters < 1) throw InputError("max_iters must be positive");
  if (!(grad_tol > 0)) throw InputError("grad_tol must be positive");
  if (family_size < 3) throw InputError("family_size must be at least 3");
  if (threads < 1) throw InputError("threads must be positive");
}

int resolve_vertices(const Manifold& m, const FinderOptions& opts, int fallback) {
  if (opts.N > 0) return opts.N;
  if (opts.length_bound) return std::max(3, vertices_for_length(*opts.length_bound, m.delta()));
  return fallback;
}

ClosedGeodesic refine_newton(const Polygon& start, const FinderOptions& opts) {
  opts.validate();
  if (start.trivial()) throw InputError("refine_newton needs a nontrivial polygon");
  const Manifold& m = start.manifold();
  Polygon p = start;
  std::vector<TraceRow> trace;
  double gn = grad_norm(p);
  int it = 0;
  for (; it < opts.max_iters; ++it) {
    const double len = length(p);
    trace.push_back({it, len, gn});
    if (gn <= critical_tolerance(opts.grad_tol, len)) break;

    const TransverseHessian h = transverse_hessian(p, opts.threads);
    const Eigen::VectorXd g = transverse_gradient(p, h.frame);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h.matrix);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double sigma = lam.cwiseAbs().maxCoeff();
    Eigen::VectorXd coeff = es.eigenvectors().transpose() * g;
    for (int i = 0; i < lam.size(); ++i) coeff[i] = std::abs(lam[i]) > kNullThreshold * sigma ? -coeff[i] / lam[i] : 0.0;
    const Eigen::VectorXd step = es.eigenvectors() * coeff;

    const int n = p.size();
    const int k = h.block;
    std::vector<Vec> moves(static_cast<size_t>(n));
    double largest = 0;
    for (int i = 0; i < n; ++i) {
      moves[static_cast<size_t>(i)] = h.frame.bases[static_cast<size_t>(i)] * step.segment(i * k, k);
      largest = std::max(largest, m.norm(p.vertex(i), moves[static_cast<size_t>(i)]));
    }
    double alpha = largest > m.delta() / 4 ? m.delta() / 4 / largest : 1.0;

    bool accepted = false;
    for (int halving = 0; halving < kMaxHalvings && !accepted; ++halving, alpha /= 2) {
      std::vector<Point> verts;
      verts.reserve(static_cast<size_t>(n));
      for (int i = 0; i < n; ++i) verts.push_back(m.retract(p.vertex(i), alpha * moves[static_cast<size_t>(i)]));
      try {
        Polygon q = Polygon::through(m, std::move(verts));
        const double qn = grad_norm(q);
        if (qn < gn) {
          p = std::move(q);
          gn = qn;
          accepted = true;
        }
      } catch (const ResolutionError&) {
      }
    }
    if (!accepted) break;
  }
  ClosedGeodesic out = certify(p, Method::newton, opts.grad_tol);
  out.iterations = it;
  out.trace = std::move(trace);
  return out;
}

ClosedGeodesic minimize_in_class(const Manifold& m, const Polygon& seed, const FinderOptions& opts) {
  opts.validate();
  require_same_manifold(m, seed);
  if (seed.trivial()) throw InputError("minimize_in_class needs a nontrivial seed");
  Polygon p = seed;
  double len = length(p);
  std::vector<TraceRow> trace;
  int it = 0;
  bool collapsed = false;
  for (; it < opts.max_iters; ++it) {
    trace.push_back({it, len, grad_norm(p)});
    if (len < 10 * opts.grad_tol) {
      collapsed = true;
      break;
    }
    Polygon q = birkhoff_shorten(p);
    const double qlen = length(q);
    const double decrease = len - qlen;
    p = std::move(q);
    len = qlen;
    if (decrease < kStallDecrease) {
      ++it;
      break;
    }
  }
  if (!collapsed && len < 10 * opts.grad_tol) collapsed = true;

  ClosedGeodesic out = collapsed ? certify(p, Method::minimize, opts.grad_tol) : refine_newton(p, opts);
  if (collapsed) {
    out.converged = false;
    out.collapsed = true;
  } else {
    for (auto& row : out.trace) {
      row.iteration += it;
      trace.push_back(row);
    }
    out.iterations += it;
  }
  out.method = Method::minimize;
  out.trace = std::move(trace);
  if (seed.homotopy_class() && out.polygon.homotopy_class() && *seed.homotopy_class() != *out.polygon.homotopy_class()) {
    throw ConsistencyError("minimization left the homotopy class of the seed", "{}");
  }
  return out;
}

ClosedGeodesic sweepout_minimax(const Manifold& m, const FinderOptions& opts) {
  opts.validate();
  if (!sphere_like(m)) throw InputError("sweep-out needs a 2-dimensional round sphere or ellipsoid");
  const int axis = longest_axis(m);
  const int n = resolve_vertices(
      m, opts, std::max(32, vertices_for_length(2 * std::numbers::pi * m.semi_axes().maxCoeff(), m.delta())));
  const int f = opts.family_size;

  // Members ordered from one pole to the other; the poles themselves are implicit.
  std::vector<Polygon> family;
  std::vector<double> lengths;
  for (int j = 1; j < f; ++j) {
    family.push_back(latitude_polygon(m, n, std::numbers::pi * j / f, axis));
    lengths.push_back(length(family.back()));
  }
  double spacing = 0;
  for (size_t j = 0; j + 1 < family.size(); ++j) spacing = std::max(spacing, member_gap(family[j], family[j + 1]));
  const double refine_gap = std::min(kRefineFactor * spacing, kRefineDeltaFraction * m.delta());
  const size_t max_members = static_cast<size_t>(kMaxGrowth * f);

  FinderOptions newton_opts = opts;
  newton_opts.max_iters = std::min(opts.max_iters, kNewtonAttemptIters);
  std::vector<TraceRow> trace;
  std::optional<ClosedGeodesic> last;
  double last_try = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opts.max_iters; ++it) {
    if (family.empty()) throw NumericError("sweep-out degenerated: every family member collapsed; increase family_size");
    size_t best = 0;
    for (size_t j = 1; j < family.size(); ++j) {
      if (lengths[j] > lengths[best] + kTieTolerance) best = j;
    }
    const Polygon& top = family[best];
    const double gtop = grad_norm(top);
    trace.push_back({it, lengths[best], gtop});

    if (it % kNewtonEvery == 0 || (gtop <= kNewtonHandoff && gtop < 0.1 * last_try)) {
      last_try = gtop;
      ClosedGeodesic r = refine_newton(top, newton_opts);
      if (r.converged) {
        r.method = Method::sweepout;
        r.iterations = it;
        r.trace = std::move(trace);
        return r;
      }
      last = std::move(r);
    }

    std::vector<char> alive(family.size(), 1);
    parallel_for(static_cast<int>(family.size()), opts.threads, [&](int j) {
      const auto k = static_cast<size_t>(j);
      Polygon next = birkhoff_shorten(family[k]);
      const double len = length(next);
      if (len < 10 * opts.grad_tol) {
        alive[k] = 0;
      } else {
        family[k] = std::move(next);
        lengths[k] = len;
      }
    });

    // Drop collapsed members and fill gaps so neighbours stay close.
    std::vector<Polygon> kept;
    std::vector<double> kept_lengths;
    for (size_t j = 0; j < family.size(); ++j) {
      if (!alive[j]) continue;
      if (!kept.empty() && kept.size() + (family.size() - j) < max_members) {
        const double gap = member_gap(kept.back(), family[j]);
        if (gap > refine_gap && gap < m.delta()) {
          kept.push_back(midpoint_member(kept.back(), family[j]));
          kept_lengths.push_back(length(kept.back()));
        }
      }
      kept.push_back(std::move(family[j]));
      kept_lengths.push_back(lengths[j]);
    }
    family = std::move(kept);
    lengths = std::move(kept_lengths);
  }
  if (!last) last = certify(family.front(), Method::sweepout, opts.grad_tol);
  ClosedGeodesic out = std::move(*last);
  out.method = Method::sweepout;
  out.converged = false;
  out.iterations = opts.max_iters;
  out.trace = std::move(trace);
  return out;
}

Polygon latitude_polygon(const Manifold& m, int n, double colatitude, int axis) {
  if (m.backend() != Backend::embedded_level_set) throw InputError("latitude polygons need an embedded manifold");
  const Vec& a = m.semi_axes();
  const int dim = static_cast<int>(a.size());
  if (axis < 0) axis = longest_axis(m);
  if (axis >= dim) throw InputError("axis out of range");
  if (!(colatitude > 0 && colatitude < std::numbers::pi)) throw InputError("colatitude must lie in (0, pi)");
  const int p = (axis + 1) % dim;
  const int q = (axis + 2) % dim;
  const int lo = std::min(p, q), hi = std::max(p, q);
  std::vector<Point> verts;
  verts.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double phi = 2 * std::numbers::pi * k / n;
    Point x = Vec::Zero(dim);
    x[axis] = a[axis] * std::cos(colatitude);
    x[lo] = a[lo] * std::sin(colatitude) * std::cos(phi);
    x[hi] = a[hi] * std::sin(colatitude) * std::sin(phi);
    verts.push_back(x);
  }
  return Polygon::through(m, std::move(verts));
}

Polygon principal_ellipse_polygon(const Manifold& m, int i, int j, int n) {
  if (m.backend() != Backend::embedded_level_set) throw InputError("principal ellipses need an embedded manifold");
  const Vec& a = m.semi_axes();
  const int dim = static_cast<int>(a.size());
  if (i < 0 || j < 0 || i >= dim || j >= dim || i == j) throw InputError("invalid coordinate plane");
  std::vector<Point> verts;
  verts.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double phi = 2 * std::numbers::pi * k / n;
    Point x = Vec::Zero(dim);
    x[i] = a[i] * std::cos(phi);
    x[j] = a[j] * std::sin(phi);
    verts.push_back(x);
  }
  return Polygon::through(m, std::move(verts));
}

Polygon class_loop(const Manifold& m, const std::vector<int>& cls, int n, std::optional<Point> base) {
  if (m.backend() != Backend::periodic_chart) throw InputError("homotopy classes need a chart manifold");
  const int dim = m.ambient_dim();
  if (static_cast<int>(cls.size()) != dim) throw InputError("class has the wrong number of components");
  if (std::all_of(cls.begin(), cls.end(), [](int c) { return c == 0; })) {
    throw InputError("the trivial class has no straight loop");
  }
  const Point origin = base ? *base : Point(Vec::Zero(dim));
  if (origin.size() != dim) throw InputError("base point has the wrong dimension");
  Vec span(dim);
  for (int i = 0; i < dim; ++i) span[i] = cls[static_cast<size_t>(i)] * m.periods()[i];
  std::vector<Point> verts;
  verts.reserve(static_cast<size_t>(n));
  for (int k = 0; k < n; ++k) verts.push_back(m.canonical(origin + span * (static_cast<double>(k) / n)));
  double chord = 0;
  for (int k = 0; k < n; ++k) chord = std::max(chord, m.norm(m.canonical(origin + span * ((k + 0.5) / n)), span / n));
  if (chord >= m.delta()) {
    throw ResolutionError("class loop with " + std::to_string(n) + " vertices has an edge longer than delta",
                          vertices_for_length(chord * n, m.delta()));
  }
  return Polygon::through(m, std::move(verts));
}

Polygon perturb(const Polygon& p, double amplitude, std::uint64_t seed) {
  if (p.trivial()) throw InputError("cannot perturb a point curve");
  const Manifold& m = p.manifold();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<Point> verts;
  verts.reserve(static_cast<size_t>(p.size()));
  for (const auto& x : p.vertices()) {
    const Frame basis = m.tangent_basis(x);
    Eigen::VectorXd c(basis.cols());
    for (int a = 0; a < c.size(); ++a) c[a] = gauss(rng);
    verts.push_back(m.retract(x, amplitude * Vec(basis * c)));
  }
  return Polygon::through(m, std::move(verts));
}

}  // namespace closedgeo
