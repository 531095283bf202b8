#include "closedgeo/spectral.hpp"

#include "closedgeo/errors.hpp"
#include "closedgeo/parallel.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace closedgeo {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;
constexpr double kAsymmetryWarning = 1e-5;

int wrap_index(int i, int n) { return ((i % n) + n) % n; }

double normalized_arg(std::complex<double> z) {
  double a = std::arg(z);
  if (a < 0) a += kTwoPi;
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

void require_converged(const ClosedGeodesic& g, std::string_view op) {
  if (g.polygon.trivial()) throw InputError(std::string(op) + " needs a nontrivial geodesic");
  if (!g.converged) throw InputError(std::string(op) + " needs a converged geodesic");
}

Frame orthonormal_complement(const Manifold& m, const Point& x, const Vec& u, const Frame& e) {
  Frame out = e;
  for (int a = 0; a < out.cols(); ++a) {
    Vec w = m.to_tangent(x, out.col(a));
    w -= m.inner(x, w, u) * u;
    for (int b = 0; b < a; ++b) w -= m.inner(x, w, out.col(b)) * out.col(b);
    out.col(a) = w / m.norm(x, w);
  }
  return out;
}

}  // namespace

TransverseFrame transverse_frame(const Polygon& p) {
  if (p.trivial()) throw InputError("transverse frame of a point curve");
  TransverseFrame f;
  f.bases.reserve(static_cast<size_t>(p.size()));
  for (int i = 0; i < p.size(); ++i) {
    f.bases.push_back(p.manifold().normal_basis(p.vertex(i), p.segment(i).initial_velocity));
  }
  return f;
}

Eigen::VectorXd transverse_gradient(const Polygon& p, const TransverseFrame& frame) {
  const auto grad = grad_length(p);
  const int k = frame.rank();
  Eigen::VectorXd out(p.size() * k);
  for (int i = 0; i < p.size(); ++i) {
    for (int a = 0; a < k; ++a) {
      out[i * k + a] = p.manifold().inner(p.vertex(i), grad[static_cast<size_t>(i)],
                                          frame.bases[static_cast<size_t>(i)].col(a));
    }
  }
  return out;
}

Eigen::MatrixXcd TransverseHessian::twisted(std::complex<double> z) const {
  Eigen::MatrixXcd h = matrix.cast<std::complex<double>>();
  const int n = vertices();
  const int k = block;
  if (n < 2) return h;
  h.block((n - 1) * k, 0, k, k) *= z;
  h.block(0, (n - 1) * k, k, k) *= std::conj(z);
  return h;
}

TransverseHessian transverse_hessian(const Polygon& p, int threads) {
  if (p.trivial()) throw InputError("Hessian of a point curve");
  const Manifold& m = p.manifold();
  const int n = p.size();
  TransverseHessian out;
  out.frame = transverse_frame(p);
  const int k = out.frame.rank();
  out.block = k;
  const int dim = n * k;
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(dim, dim);
  const double step = 1e-4 * length(p) / n;

  parallel_for(n, threads, [&](int j) {
    const int jm = wrap_index(j - 1, n), jp = wrap_index(j + 1, n);
    const Point& xm = p.vertex(jm);
    const Point& xp = p.vertex(jp);
    const auto& before = p.segment(wrap_index(j - 2, n));
    const auto& after = p.segment(jp);
    const Frame& ej = out.frame.bases[static_cast<size_t>(j)];
    for (int b = 0; b < k; ++b) {
      Eigen::VectorXd comps[2];
      for (int s = 0; s < 2; ++s) {
        const double sign = s == 0 ? 1.0 : -1.0;
        const Point xj = m.retract(p.vertex(j), sign * step * Vec(ej.col(b)));
        const GeodesicSegment in = connect(m, xm, xj);
        const GeodesicSegment outseg = connect(m, xj, xp);
        const Vec gm = m.to_tangent(xm, before.final_velocity - in.initial_velocity);
        const Vec gj = m.to_tangent(xj, in.final_velocity - outseg.initial_velocity);
        const Vec gp = m.to_tangent(xp, outseg.final_velocity - after.initial_velocity);
        Eigen::VectorXd c(3 * k);
        for (int a = 0; a < k; ++a) {
          c[a] = m.inner(xm, gm, out.frame.bases[static_cast<size_t>(jm)].col(a));
          c[k + a] = m.inner(xj, gj, ej.col(a));
          c[2 * k + a] = m.inner(xp, gp, out.frame.bases[static_cast<size_t>(jp)].col(a));
        }
        comps[s] = c;
      }
      const Eigen::VectorXd diff = (comps[0] - comps[1]) / (2 * step);
      const int col = j * k + b;
      // Rows for vertices j-1, j, j+1 (distinct when n >= 3).
      raw.block(jm * k, col, k, 1) += diff.segment(0, k);
      raw.block(j * k, col, k, 1) += diff.segment(k, k);
      raw.block(jp * k, col, k, 1) += diff.segment(2 * k, k);
    }
  });

  const double scale = raw.cwiseAbs().maxCoeff();
  out.asymmetry = scale > 0 ? (raw - raw.transpose()).cwiseAbs().maxCoeff() / scale : 0.0;
  if (out.asymmetry > kAsymmetryWarning) {
    std::ostringstream os;
    os << "Hessian asymmetry " << out.asymmetry << " exceeds " << kAsymmetryWarning;
    out.warnings.push_back(os.str());
  }
  out.matrix = 0.5 * (raw + raw.transpose());
  return out;
}

Polygon spectral_polygon(const Polygon& p) {
  if (p.size() >= kMinSpectralVertices) return p;
  const int l = (kMinSpectralVertices + p.size() - 1) / p.size();
  return subdivide(p, l);
}

TransverseHessian hessian(const ClosedGeodesic& g, int threads) {
  require_converged(g, "hessian");
  return transverse_hessian(spectral_polygon(g.polygon), threads);
}

IndexNullity count_spectrum(const Eigen::VectorXd& eigenvalues, double sigma) {
  IndexNullity out;
  const double eps = kNullThreshold * sigma;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    const double l = eigenvalues[i];
    out.eigenvalues.push_back(l);
    if (std::abs(l) <= eps) {
      ++out.nullity;
    } else {
      if (l < 0) ++out.index;
      if (std::abs(l) < 10 * eps) {
        std::ostringstream os;
        os.precision(6);
        os << "borderline eigenvalue " << l << " (null threshold " << eps << ")";
        out.warnings.push_back(os.str());
      }
    }
  }
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end());
  return out;
}

IndexNullity index_nullity(const ClosedGeodesic& g, int threads) {
  const TransverseHessian h = hessian(g, threads);
  const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h.matrix, Eigen::EigenvaluesOnly).eigenvalues();
  IndexNullity out = count_spectrum(ev, ev.cwiseAbs().maxCoeff());
  out.warnings.insert(out.warnings.begin(), h.warnings.begin(), h.warnings.end());
  return out;
}

Eigen::MatrixXd poincare_map(const ClosedGeodesic& g) {
  require_converged(g, "poincare_map");
  const Polygon& poly = g.polygon;
  const Manifold& m = poly.manifold();
  const bool embedded = m.backend() == Backend::embedded_level_set;
  const int k = m.dim() - 1;
  const int n = poly.size();

  struct State {
    Point x;
    Vec v;
    Frame e;
    Eigen::MatrixXd y, yp;
  };
  auto derivative = [&](const State& s) {
    State d;
    d.x = s.v;
    d.v = m.geodesic_acceleration(s.x, s.v);
    d.e.resize(s.e.rows(), s.e.cols());
    for (int a = 0; a < k; ++a) d.e.col(a) = m.transport_derivative(s.x, s.v, s.e.col(a));
    d.y = s.yp;
    d.yp = -m.jacobi_operator(s.x, s.v / m.norm(s.x, s.v), s.e) * s.y;
    return d;
  };
  auto advance = [](const State& s, double h, const State& d) {
    State r;
    r.x = s.x + h * d.x;
    r.v = s.v + h * d.v;
    r.e = s.e + h * d.e;
    r.y = s.y + h * d.y;
    r.yp = s.yp + h * d.yp;
    return r;
  };

  State s;
  s.x = poly.vertex(0);
  s.v = poly.segment(0).initial_velocity;
  s.e = m.normal_basis(s.x, s.v);
  const Frame e0 = s.e;
  s.y = Eigen::MatrixXd::Zero(k, 2 * k);
  s.yp = Eigen::MatrixXd::Zero(k, 2 * k);
  s.y.leftCols(k).setIdentity();
  s.yp.rightCols(k).setIdentity();

  for (int i = 0; i < n; ++i) {
    const auto& seg = poly.segment(i);
    if (i > 0) {
      s.x = seg.start;
      s.v = seg.initial_velocity;
      s.e = orthonormal_complement(m, s.x, s.v, s.e);
    }
    const int steps = detail::steps_for(seg.length, m.delta());
    const double h = seg.length / steps;
    for (int t = 0; t < steps; ++t) {
      const State k1 = derivative(s);
      const State k2 = derivative(advance(s, h / 2, k1));
      const State k3 = derivative(advance(s, h / 2, k2));
      const State k4 = derivative(advance(s, h, k3));
      s.x += (h / 6) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
      s.v += (h / 6) * (k1.v + 2 * k2.v + 2 * k3.v + k4.v);
      s.e += (h / 6) * (k1.e + 2 * k2.e + 2 * k3.e + k4.e);
      s.y += (h / 6) * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
      s.yp += (h / 6) * (k1.yp + 2 * k2.yp + 2 * k3.yp + k4.yp);
      if (embedded) {
        s.x = m.canonical(s.x);
        s.v = m.to_tangent(s.x, s.v);
        for (int a = 0; a < k; ++a) s.e.col(a) = m.to_tangent(s.x, s.e.col(a));
      }
      s.v /= m.norm(s.x, s.v);
      if (!s.y.allFinite() || !s.yp.allFinite()) throw NumericError("Jacobi propagation diverged");
    }
  }

  // Express the transported frame in the initial one and rotate (y, y') accordingly.
  const Point& x0 = poly.vertex(0);
  const Vec& u0 = poly.segment(0).initial_velocity;
  Eigen::MatrixXd o(k, k);
  for (int a = 0; a < k; ++a) {
    Vec ea = m.to_tangent(x0, s.e.col(a));
    ea -= m.inner(x0, ea, u0) * u0;
    for (int b = 0; b < k; ++b) o(b, a) = m.inner(x0, e0.col(b), ea);
  }
  Eigen::MatrixXd mono(2 * k, 2 * k);
  mono.topRows(k) = o * s.y;
  mono.bottomRows(k) = o * s.yp;
  return mono;
}

Eigen::MatrixXd holonomy(const Polygon& p) {
  if (p.trivial()) throw InputError("holonomy of a point curve");
  const Manifold& m = p.manifold();
  const int d = m.dim();
  const Point& x0 = p.vertex(0);
  Frame f0(m.ambient_dim(), d);
  f0.col(0) = p.segment(0).initial_velocity;
  if (d > 1) f0.rightCols(d - 1) = m.normal_basis(x0, f0.col(0));
  Frame f = f0;
  for (const auto& seg : p.segments()) {
    for (int a = 0; a < d; ++a) f.col(a) = parallel_transport(m, seg, f.col(a));
  }
  Eigen::MatrixXd hol(d, d);
  for (int a = 0; a < d; ++a) {
    for (int b = 0; b < d; ++b) hol(a, b) = m.inner(x0, f0.col(a), f.col(b));
  }
  return hol;
}

bool orientation_preserving(const ClosedGeodesic& g) {
  require_converged(g, "orientation_preserving");
  return holonomy(g.polygon).determinant() > 0;
}

double symplectic_defect(const Eigen::MatrixXd& p) {
  const int k = static_cast<int>(p.rows()) / 2;
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2 * k, 2 * k);
  j.topRightCorner(k, k).setIdentity();
  j.bottomLeftCorner(k, k) = -Eigen::MatrixXd::Identity(k, k);
  return (p.transpose() * j * p - j).cwiseAbs().maxCoeff();
}

BottAnalysis::BottAnalysis(const ClosedGeodesic& g, int threads) {
  require_converged(g, "Bott analysis");
  hessian_ = closedgeo::hessian(g, threads);
  sigma_ = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(hessian_.matrix, Eigen::EigenvaluesOnly)
               .eigenvalues()
               .cwiseAbs()
               .maxCoeff();
  poincare_ = poincare_map(g);
  const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(poincare_, false).eigenvalues();
  eigenvalues_.assign(ev.data(), ev.data() + ev.size());
  std::sort(eigenvalues_.begin(), eigenvalues_.end(), [](auto a, auto b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : std::arg(a) < std::arg(b);
  });
  orientation_preserving_ = holonomy(g.polygon).determinant() > 0;
}

int BottAnalysis::lambda(std::complex<double> z) const {
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(hessian_.twisted(z), Eigen::EigenvaluesOnly).eigenvalues();
  int count = 0;
  for (int i = 0; i < ev.size(); ++i) count += ev[i] < -kNullThreshold * sigma_;
  return count;
}

int BottAnalysis::hessian_kernel(std::complex<double> z) const {
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(hessian_.twisted(z), Eigen::EigenvaluesOnly).eigenvalues();
  int count = 0;
  for (int i = 0; i < ev.size(); ++i) count += std::abs(ev[i]) <= kNullThreshold * sigma_;
  return count;
}

int BottAnalysis::kernel(std::complex<double> z) const {
  const Eigen::MatrixXcd shifted =
      poincare_.cast<std::complex<double>>() - z * Eigen::MatrixXcd::Identity(poincare_.rows(), poincare_.cols());
  const Eigen::VectorXd sv = Eigen::JacobiSVD<Eigen::MatrixXcd>(shifted).singularValues();
  const double pnorm = Eigen::JacobiSVD<Eigen::MatrixXd>(poincare_).singularValues()[0];
  int count = 0;
  for (int i = 0; i < sv.size(); ++i) count += sv[i] <= kNullThreshold * pnorm;
  return count;
}

std::vector<double> BottAnalysis::unit_eigenvalue_args() const {
  std::vector<double> out;
  for (auto l : eigenvalues_) {
    if (std::abs(std::abs(l) - 1) <= kNullThreshold) out.push_back(normalized_arg(l));
  }
  std::sort(out.begin(), out.end());
  return out;
}

BottFunctions bott_functions(const BottAnalysis& analysis, int grid, const std::vector<int>& iterates) {
  if (grid < 8) throw InputError("Bott grid must have at least 8 points");
  std::vector<double> args;
  for (int k = 0; k < grid; ++k) args.push_back(kTwoPi * k / grid);
  for (int n : iterates) {
    if (n < 1) throw InputError("iterate must be >= 1");
    const double offset = analysis.orientation_preserving() ? 0.0 : 0.5;
    for (int j = 0; j < n; ++j) args.push_back(kTwoPi * (j + offset) / n);
  }
  std::sort(args.begin(), args.end());
  args.erase(std::unique(args.begin(), args.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
             args.end());

  BottFunctions out;
  for (double a : args) {
    const std::complex<double> z = std::polar(1.0, a);
    out.samples.push_back({a, analysis.lambda(z), analysis.kernel(z)});
  }

  const auto unit = analysis.unit_eigenvalue_args();
  for (size_t i = 0; i < args.size(); ++i) {
    const double lo = args[i];
    const double hi = i + 1 < args.size() ? args[i + 1] : kTwoPi;
    std::vector<double> inside;
    for (double u : unit) {
      if (u > lo + 1e-12 && u < hi - 1e-12 &&
          (inside.empty() || std::abs(u - inside.back()) > 1e-9))
        inside.push_back(u);
    }
    if (inside.size() > 1) {
      std::ostringstream os;
      os.precision(10);
      os << "grid too coarse: unit eigenvalues of P at args";
      for (double u : inside) os << ' ' << u;
      os << " share one grid cell";
      out.warnings.push_back(os.str());
    }
  }
  return out;
}

BottFunctions bott_functions(const ClosedGeodesic& g, int grid, const std::vector<int>& iterates) {
  return bott_functions(BottAnalysis(g), grid, iterates);
}

IterateMode parse_iterate_mode(std::string_view name) {
  if (name == "bott") return IterateMode::bott;
  if (name == "direct") return IterateMode::direct;
  if (name == "both") return IterateMode::both;
  throw InputError("unknown iterate mode '" + std::string(name) + "'");
}

IteratedIndex iterated_index(const ClosedGeodesic& g, const BottAnalysis& analysis, int n, IterateMode mode,
                             int threads) {
  require_converged(g, "iterated_index");
  if (n < 1) throw InputError("iterate must be >= 1");
  IteratedIndex out;
  out.n = n;
  nlohmann::json roots = nlohmann::json::array();
  if (mode != IterateMode::direct) {
    const double offset = analysis.orientation_preserving() ? 0.0 : 0.5;
    int li = 0, ni = 0;
    for (int j = 0; j < n; ++j) {
      const std::complex<double> w = std::polar(1.0, kTwoPi * (j + offset) / n);
      const int l = analysis.lambda(w);
      const int k = analysis.kernel(w);
      li += l;
      ni += k;
      roots.push_back({{"arg", normalized_arg(w)}, {"lambda", l}, {"n", k}, {"hessian_kernel", analysis.hessian_kernel(w)}});
    }
    out.bott_index = li;
    out.bott_nullity = ni;
  }
  std::vector<double> near_zero;
  if (mode != IterateMode::bott) {
    const Polygon big = iterate(spectral_polygon(g.polygon), n);
    const TransverseHessian h = transverse_hessian(big, threads);
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h.matrix, Eigen::EigenvaluesOnly).eigenvalues();
    const IndexNullity c = count_spectrum(ev, ev.cwiseAbs().maxCoeff());
    out.direct_index = c.index;
    out.direct_nullity = c.nullity;
    const double sigma = ev.cwiseAbs().maxCoeff();
    for (double l : c.eigenvalues) {
      if (std::abs(l) < 1e-3 * sigma) near_zero.push_back(l);
    }
  }
  if (mode == IterateMode::both) {
    out.agree = *out.bott_index == *out.direct_index && *out.bott_nullity == *out.direct_nullity;
    if (!out.agree) {
      nlohmann::json details = {{"n", n},
                                {"bott", {{"index", *out.bott_index}, {"nullity", *out.bott_nullity}}},
                                {"direct", {{"index", *out.direct_index}, {"nullity", *out.direct_nullity}}},
                                {"roots", roots},
                                {"direct_eigenvalues_near_zero", near_zero},
                                {"sigma", analysis.sigma()}};
      throw ConsistencyError("Bott and direct iterated indices disagree at n = " + std::to_string(n), details.dump());
    }
  }
  out.index = out.direct_index ? *out.direct_index : *out.bott_index;
  out.nullity = out.direct_nullity ? *out.direct_nullity : *out.bott_nullity;
  return out;
}

IteratedIndex iterated_index(const ClosedGeodesic& g, int n, IterateMode mode, int threads) {
  if (mode == IterateMode::direct) {
    require_converged(g, "iterated_index");
    if (n < 1) throw InputError("iterate must be >= 1");
    IteratedIndex out;
    out.n = n;
    const Polygon big = iterate(spectral_polygon(g.polygon), n);
    const TransverseHessian h = transverse_hessian(big, threads);
    const Eigen::VectorXd ev =
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(h.matrix, Eigen::EigenvaluesOnly).eigenvalues();
    const IndexNullity c = count_spectrum(ev, ev.cwiseAbs().maxCoeff());
    out.direct_index = out.index = c.index;
    out.direct_nullity = out.nullity = c.nullity;
    return out;
  }
  return iterated_index(g, BottAnalysis(g, threads), n, mode, threads);
}

int minimal_period(const Polygon& p, double tol) {
  if (p.trivial()) return 1;
  const int n = p.size();
  const Manifold& m = p.manifold();
  for (int k = 1; k < n; ++k) {
    if (n % k) continue;
    bool periodic = true;
    for (int i = 0; i < n && periodic; ++i) {
      periodic = m.lift_displacement(p.vertex(i), p.vertex((i + k) % n)).norm() <= tol;
    }
    if (periodic) return k;
  }
  return n;
}

SpectralData analyze(const ClosedGeodesic& g, int grid, const std::vector<int>& iterates, int threads) {
  const BottAnalysis a(g, threads);
  SpectralData out;
  const Eigen::VectorXd ev =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a.hessian().matrix, Eigen::EigenvaluesOnly).eigenvalues();
  const IndexNullity c = count_spectrum(ev, a.sigma());
  out.index = c.index;
  out.nullity = c.nullity;
  out.hessian_eigenvalues = c.eigenvalues;
  out.poincare_matrix = a.poincare();
  out.poincare_eigenvalues = a.poincare_eigenvalues();
  out.orientation_preserving = a.orientation_preserving();
  out.symplectic_defect = symplectic_defect(a.poincare());
  out.vertices = a.hessian().vertices();
  const BottFunctions b = bott_functions(a, grid, iterates);
  out.bott_samples = b.samples;
  out.warnings = a.hessian().warnings;
  out.warnings.insert(out.warnings.end(), c.warnings.begin(), c.warnings.end());
  out.warnings.insert(out.warnings.end(), b.warnings.begin(), b.warnings.end());
  const int period = minimal_period(g.polygon);
  if (period < g.polygon.size()) {
    out.warnings.push_back("vertex sequence repeats with period " + std::to_string(period) +
                           "; the geodesic is probably not prime");
  }
  return out;
}

}  // namespace closedgeo
