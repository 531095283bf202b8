#include "closedgeo/manifold.hpp"

#include "closedgeo/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace closedgeo {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeltaSlack = 1e-7;
constexpr double kTangencyTol = 1e-8;
constexpr int kMaxShootingIters = 50;

std::string format_vec(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (int i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << ')';
  return os.str();
}

double wrap_into(double x, double period) {
  double w = std::fmod(x, period);
  if (w < 0) w += period;
  if (w >= period) w -= period;
  return w;
}

}  // namespace

std::string_view to_string(ManifoldKind kind) {
  switch (kind) {
    case ManifoldKind::round_sphere: return "round_sphere";
    case ManifoldKind::ellipsoid: return "ellipsoid";
    case ManifoldKind::flat_torus: return "flat_torus";
    case ManifoldKind::torus_of_revolution: return "torus_of_revolution";
  }
  return "unknown";
}

std::string_view to_string(Backend backend) {
  return backend == Backend::embedded_level_set ? "embedded_level_set" : "periodic_chart";
}

ManifoldKind parse_manifold_kind(std::string_view name) {
  if (name == "round_sphere" || name == "sphere") return ManifoldKind::round_sphere;
  if (name == "ellipsoid") return ManifoldKind::ellipsoid;
  if (name == "flat_torus") return ManifoldKind::flat_torus;
  if (name == "torus_of_revolution") return ManifoldKind::torus_of_revolution;
  throw InputError("unknown manifold kind '" + std::string(name) + "'");
}

double default_delta(ManifoldKind kind, const std::vector<double>& params) {
  switch (kind) {
    case ManifoldKind::round_sphere: return params.at(0) * kPi / 2;
    case ManifoldKind::ellipsoid:
      return 0.5 * *std::min_element(params.begin(), params.end()) * kPi / 2;
    case ManifoldKind::flat_torus: return *std::min_element(params.begin(), params.end()) / 4;
    case ManifoldKind::torus_of_revolution: return 0.5 * params.at(1) * kPi;
  }
  return 0;
}

Manifold Manifold::create(ManifoldKind kind, std::vector<double> params, std::optional<double> delta) {
  for (double p : params) {
    if (!std::isfinite(p) || p <= 0) throw InputError("manifold parameters must be positive and finite");
  }
  Manifold m;
  m.kind_ = kind;
  m.params_ = params;
  switch (kind) {
    case ManifoldKind::round_sphere: {
      if (params.size() != 1) throw InputError("round_sphere takes exactly one parameter (radius)");
      m.backend_ = Backend::embedded_level_set;
      m.dim_ = 2;
      m.axes_ = Vec::Constant(3, params[0]);
      m.injectivity_ = kPi * params[0];
      break;
    }
    case ManifoldKind::ellipsoid: {
      if (params.size() < 3 || params.size() > static_cast<size_t>(kMaxAmbientDim))
        throw InputError("ellipsoid takes between 3 and 8 semi-axes");
      m.backend_ = Backend::embedded_level_set;
      m.dim_ = static_cast<int>(params.size()) - 1;
      m.axes_ = Eigen::Map<const Eigen::VectorXd>(params.data(), params.size());
      // Sectional curvature is bounded by the square of the largest principal curvature a_max / a_min^2.
      const double lo = m.axes_.minCoeff(), hi = m.axes_.maxCoeff();
      m.injectivity_ = kPi * lo * lo / hi;
      break;
    }
    case ManifoldKind::flat_torus: {
      if (params.empty() || params.size() > static_cast<size_t>(kMaxAmbientDim))
        throw InputError("flat_torus takes between 1 and 8 side lengths");
      m.backend_ = Backend::periodic_chart;
      m.dim_ = static_cast<int>(params.size());
      m.periods_ = Eigen::Map<const Eigen::VectorXd>(params.data(), params.size());
      m.injectivity_ = m.periods_.minCoeff() / 2;
      break;
    }
    case ManifoldKind::torus_of_revolution: {
      if (params.size() != 2) throw InputError("torus_of_revolution takes (R, r)");
      const double R = params[0], r = params[1];
      if (!(R > r)) throw InputError("torus_of_revolution requires R > r > 0");
      m.backend_ = Backend::periodic_chart;
      m.dim_ = 2;
      m.periods_ = Vec::Constant(2, 2 * kPi);
      // Half the shortest closed geodesic (meridian or inner equator) and the conjugate
      // radius from the maximal Gauss curvature 1 / (r (R + r)) at the outer equator.
      m.injectivity_ = std::min({kPi * r, kPi * (R - r), kPi * std::sqrt(r * (R + r))});
      break;
    }
  }
  m.ambient_ = m.backend_ == Backend::embedded_level_set ? m.dim_ + 1 : m.dim_;
  if (m.backend_ == Backend::embedded_level_set) m.inv_axes2_ = m.axes_.array().square().inverse();

  if (delta) {
    if (!std::isfinite(*delta) || *delta <= 0) throw InputError("delta must be positive");
    if (*delta > m.injectivity_ * (1 + 1e-12)) {
      std::ostringstream os;
      os.precision(17);
      os << "delta " << *delta << " exceeds the injectivity radius " << m.injectivity_;
      throw InputError(os.str());
    }
    m.delta_ = *delta;
  } else {
    m.delta_ = std::min(default_delta(kind, params), m.injectivity_);
  }
  return m;
}

bool Manifold::operator==(const Manifold& other) const {
  return kind_ == other.kind_ && params_ == other.params_ && delta_ == other.delta_;
}

double Manifold::constraint_residual(const Point& x) const {
  if (backend_ == Backend::periodic_chart) return 0;
  return std::abs((x.array().square() * inv_axes2_.array()).sum() - 1);
}

Point Manifold::canonical(const Point& x) const {
  if (x.size() != ambient_) throw InputError("point has wrong dimension");
  if (backend_ == Backend::periodic_chart) {
    Point y(ambient_);
    for (int i = 0; i < ambient_; ++i) y[i] = wrap_into(x[i], periods_[i]);
    return y;
  }
  // Radial scaling lands exactly on the level set.
  const double s = (x.array().square() * inv_axes2_.array()).sum();
  if (!(s > 0)) throw InputError("cannot project the origin onto the manifold");
  Point y = x / std::sqrt(s);
  // One Newton correction along the gradient removes the rounding left by the scaling.
  const Vec grad = 2 * (y.array() * inv_axes2_.array()).matrix();
  const double g = (y.array().square() * inv_axes2_.array()).sum() - 1;
  y -= g / grad.squaredNorm() * grad;
  return y;
}

void Manifold::require_point(const Point& x, std::string_view what) const {
  if (x.size() != ambient_) throw InputError(std::string(what) + " has wrong dimension");
  if (!x.allFinite()) throw InputError(std::string(what) + " is not finite");
  if (backend_ == Backend::embedded_level_set) {
    if (constraint_residual(x) > 1e-10)
      throw InputError(std::string(what) + " " + format_vec(x) + " is not on the manifold");
  } else {
    for (int i = 0; i < ambient_; ++i) {
      if (x[i] < 0 || x[i] >= periods_[i])
        throw InputError(std::string(what) + " " + format_vec(x) + " is outside the fundamental domain");
    }
  }
}

double Manifold::inner(const Point& x, const Vec& a, const Vec& b) const {
  if (kind_ == ManifoldKind::torus_of_revolution) {
    const double f = params_[0] + params_[1] * std::cos(x[1]);
    return f * f * a[0] * b[0] + params_[1] * params_[1] * a[1] * b[1];
  }
  return a.dot(b);
}

double Manifold::norm(const Point& x, const Vec& a) const { return std::sqrt(inner(x, a, a)); }

Vec Manifold::to_tangent(const Point& x, const Vec& v) const {
  if (backend_ == Backend::periodic_chart) return v;
  const Vec n = (x.array() * inv_axes2_.array()).matrix().normalized();
  return v - n.dot(v) * n;
}

double Manifold::tangency_defect(const Point& x, const Vec& v) const {
  if (backend_ == Backend::periodic_chart) return 0;
  const double nv = v.norm();
  if (nv == 0) return 0;
  const Vec n = (x.array() * inv_axes2_.array()).matrix().normalized();
  return std::abs(n.dot(v)) / nv;
}

Frame Manifold::tangent_basis(const Point& x) const {
  Frame basis(ambient_, dim_);
  if (backend_ == Backend::periodic_chart) {
    basis.setIdentity();
    if (kind_ == ManifoldKind::torus_of_revolution) {
      basis(0, 0) = 1 / (params_[0] + params_[1] * std::cos(x[1]));
      basis(1, 1) = 1 / params_[1];
    }
    return basis;
  }
  const Vec n = (x.array() * inv_axes2_.array()).matrix().normalized();
  // Coordinate directions least aligned with the normal first; ties keep index order.
  std::vector<int> order(ambient_);
  for (int i = 0; i < ambient_; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(n[a]) < std::abs(n[b]); });
  int filled = 0;
  for (int k : order) {
    if (filled == dim_) break;
    Vec v = -n[k] * n;
    v[k] += 1;
    for (int j = 0; j < filled; ++j) v -= basis.col(j).dot(v) * basis.col(j);
    const double len = v.norm();
    if (len < 1e-6) continue;
    basis.col(filled++) = v / len;
  }
  return basis;
}

Frame Manifold::normal_basis(const Point& x, const Vec& u) const {
  Frame out(ambient_, dim_ - 1);
  if (dim_ == 1) return out;
  if (dim_ == 2) {
    Vec w(ambient_);
    if (backend_ == Backend::embedded_level_set) {
      const Eigen::Vector3d n = (x.array() * inv_axes2_.array()).matrix().normalized();
      const Eigen::Vector3d uu = u;
      w = n.cross(uu);
    } else {
      w << -u[1], u[0];
    }
    w -= inner(x, w, u) / inner(x, u, u) * u;
    out.col(0) = w / norm(x, w);
    return out;
  }
  const Frame basis = tangent_basis(x);
  int filled = 0;
  const Vec uu = u / norm(x, u);
  for (int k = 0; k < dim_ && filled < dim_ - 1; ++k) {
    Vec v = basis.col(k);
    v -= inner(x, v, uu) * uu;
    for (int j = 0; j < filled; ++j) v -= inner(x, v, out.col(j)) * out.col(j);
    const double len = norm(x, v);
    if (len < 1e-6) continue;
    out.col(filled++) = v / len;
  }
  if (filled != dim_ - 1) throw NumericError("failed to complete a normal frame");
  return out;
}

Vec Manifold::geodesic_acceleration(const Point& x, const Vec& v) const {
  switch (backend_) {
    case Backend::embedded_level_set: {
      // -(v^T H v / |grad G|^2) grad G with G = sum x_i^2 / a_i^2 - 1.
      const Vec xa = (x.array() * inv_axes2_.array()).matrix();
      const double vhv = (v.array().square() * inv_axes2_.array()).sum();
      return -(vhv / xa.squaredNorm()) * xa;
    }
    case Backend::periodic_chart: {
      Vec a = Vec::Zero(ambient_);
      if (kind_ == ManifoldKind::torus_of_revolution) {
        const double R = params_[0], r = params_[1];
        const double f = R + r * std::cos(x[1]);
        const double fp = -r * std::sin(x[1]);
        a[0] = -2 * (fp / f) * v[0] * v[1];
        a[1] = (f * fp / (r * r)) * v[0] * v[0];
      }
      return a;
    }
  }
  return Vec::Zero(ambient_);
}

Vec Manifold::transport_derivative(const Point& x, const Vec& v, const Vec& w) const {
  switch (backend_) {
    case Backend::embedded_level_set: {
      const Vec xa = (x.array() * inv_axes2_.array()).matrix();
      const double whv = (w.array() * v.array() * inv_axes2_.array()).sum();
      return -(whv / xa.squaredNorm()) * xa;
    }
    case Backend::periodic_chart: {
      Vec a = Vec::Zero(ambient_);
      if (kind_ == ManifoldKind::torus_of_revolution) {
        const double R = params_[0], r = params_[1];
        const double f = R + r * std::cos(x[1]);
        const double fp = -r * std::sin(x[1]);
        a[0] = -(fp / f) * (v[0] * w[1] + v[1] * w[0]);
        a[1] = (f * fp / (r * r)) * v[0] * w[0];
      }
      return a;
    }
  }
  return Vec::Zero(ambient_);
}

Eigen::MatrixXd Manifold::jacobi_operator(const Point& x, const Vec& t, const Frame& e) const {
  const int k = static_cast<int>(e.cols());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(k, k);
  switch (kind_) {
    case ManifoldKind::flat_torus: return out;
    case ManifoldKind::torus_of_revolution: {
      const double R = params_[0], r = params_[1];
      out(0, 0) = std::cos(x[1]) / (r * (R + r * std::cos(x[1])));
      return out;
    }
    case ManifoldKind::round_sphere:
    case ManifoldKind::ellipsoid: {
      // Gauss equation: K_ab = II(T,T) II(E_a,E_b) - II(E_a,T) II(E_b,T).
      const double nu = (x.array() * inv_axes2_.array()).matrix().norm();
      auto second = [&](const Vec& a, const Vec& b) {
        return (a.array() * b.array() * inv_axes2_.array()).sum() / nu;
      };
      const double tt = second(t, t);
      for (int a = 0; a < k; ++a) {
        for (int b = 0; b < k; ++b) {
          out(a, b) = tt * second(e.col(a), e.col(b)) - second(e.col(a), t) * second(e.col(b), t);
        }
      }
      return out;
    }
  }
  return out;
}

Vec Manifold::lift_displacement(const Point& p, const Point& q) const {
  if (backend_ == Backend::embedded_level_set) return q - p;
  Vec d(ambient_);
  for (int i = 0; i < ambient_; ++i) {
    const double per = periods_[i];
    double w = wrap_into(q[i] - p[i], per);
    if (w >= per / 2) w -= per;
    d[i] = w;
  }
  return d;
}

double Manifold::distance_lower_bound(const Point& p, const Point& q) const {
  const Vec d = lift_displacement(p, q);
  if (kind_ == ManifoldKind::torus_of_revolution) {
    const double R = params_[0], r = params_[1];
    return std::hypot((R - r) * d[0], r * d[1]);
  }
  return d.norm();
}

Point Manifold::retract(const Point& x, const Vec& step) const { return canonical(x + step); }

GeodesicSegment GeodesicSegment::reversed() const {
  GeodesicSegment out;
  out.start = end;
  out.end = start;
  out.initial_velocity = -final_velocity;
  out.final_velocity = -initial_velocity;
  out.length = length;
  out.samples.assign(samples.rbegin(), samples.rend());
  if (winding.size()) out.winding = -winding;
  return out;
}

namespace detail {

int steps_for(double length, double delta) {
  if (length <= delta) return kStepsPerSegment;
  return static_cast<int>(std::ceil(kStepsPerSegment * length / delta));
}

Trajectory integrate(const Manifold& m, const Point& p, const Vec& w, int steps, bool keep_samples) {
  Trajectory out;
  Point x = p;
  Vec v = w;
  const double speed = m.norm(p, w);
  const double h = 1.0 / steps;
  const bool embedded = m.backend() == Backend::embedded_level_set;
  if (keep_samples) {
    out.samples.reserve(steps + 1);
    out.samples.push_back(m.canonical(x));
  }
  for (int s = 0; s < steps; ++s) {
    const Vec k1x = v;
    const Vec k1v = m.geodesic_acceleration(x, v);
    const Vec k2x = v + 0.5 * h * k1v;
    const Vec k2v = m.geodesic_acceleration(x + 0.5 * h * k1x, k2x);
    const Vec k3x = v + 0.5 * h * k2v;
    const Vec k3v = m.geodesic_acceleration(x + 0.5 * h * k2x, k3x);
    const Vec k4x = v + h * k3v;
    const Vec k4v = m.geodesic_acceleration(x + h * k3x, k4x);
    x += (h / 6) * (k1x + 2 * k2x + 2 * k3x + k4x);
    v += (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v);
    if (embedded) {
      x = m.canonical(x);
      v = m.to_tangent(x, v);
    }
    const double sv = m.norm(x, v);
    if (!(sv > 0) || !std::isfinite(sv)) {
      if (speed == 0) break;
      throw NumericError("geodesic integration failed (velocity degenerated)");
    }
    v *= speed / sv;
    if (keep_samples) out.samples.push_back(embedded ? x : m.canonical(x));
  }
  if (!x.allFinite()) throw NumericError("geodesic integration produced non-finite state");
  out.end = x;
  out.end_velocity = v;
  return out;
}

GeodesicSegment segment_from_velocity(const Manifold& m, const Point& p, const Vec& w, const Point& end,
                                      const Eigen::VectorXi& winding) {
  GeodesicSegment seg;
  seg.start = p;
  seg.end = end;
  seg.length = m.norm(p, w);
  seg.winding = winding;
  if (seg.length == 0) {
    seg.initial_velocity = Vec::Zero(m.ambient_dim());
    seg.final_velocity = Vec::Zero(m.ambient_dim());
    seg.samples = {p, end};
    return seg;
  }
  Trajectory traj = integrate(m, p, w, steps_for(seg.length, m.delta()), true);
  seg.initial_velocity = w / seg.length;
  Vec fv = m.to_tangent(end, traj.end_velocity);
  seg.final_velocity = fv / m.norm(end, fv);
  traj.samples.back() = end;
  seg.samples = std::move(traj.samples);
  return seg;
}

}  // namespace detail

FlowState geodesic_flow(const Manifold& m, const Point& p, const Vec& v, double t) {
  m.require_point(p);
  if (v.size() != m.ambient_dim()) throw InputError("velocity has wrong dimension");
  if (m.tangency_defect(p, v) > kTangencyTol) throw InputError("velocity is not tangent at p");
  if (std::abs(m.norm(p, v) - 1) > kTangencyTol) throw InputError("velocity is not unit length");
  if (!(t >= 0) || !std::isfinite(t)) throw InputError("flow time must be nonnegative");
  if (t == 0) return {p, v};
  const detail::Trajectory traj = detail::integrate(m, p, t * v, detail::steps_for(t, m.delta()), false);
  const Point x = m.canonical(traj.end);
  Vec vel = m.to_tangent(x, traj.end_velocity);
  vel /= m.norm(x, vel);
  return {x, vel};
}

GeodesicSegment connect(const Manifold& m, const Point& p_in, const Point& q_in) {
  const bool chart = m.backend() == Backend::periodic_chart;
  const Point p = chart ? m.canonical(p_in) : p_in;
  const Point q = chart ? m.canonical(q_in) : q_in;
  m.require_point(p, "start point");
  m.require_point(q, "end point");

  const double delta = m.delta();
  if (m.distance_lower_bound(p, q) > delta * (1 + kDeltaSlack)) {
    throw DomainError("points are farther apart than delta");
  }
  const Vec disp = m.lift_displacement(p, q);
  const Point target = p + disp;
  if (disp.squaredNorm() == 0) {
    return detail::segment_from_velocity(m, p, Vec::Zero(m.ambient_dim()), q,
                                         chart ? Eigen::VectorXi::Zero(m.ambient_dim()) : Eigen::VectorXi());
  }

  const Frame basis = m.tangent_basis(p);
  const int d = m.dim();
  Eigen::VectorXd c(d);
  if (chart) {
    c = basis.topLeftCorner(d, d).inverse() * disp;
  } else {
    const Eigen::VectorXd proj = basis.transpose() * disp;
    c = proj.norm() > 0 ? Eigen::VectorXd(proj * (disp.norm() / proj.norm())) : proj;
  }

  const double tol = 1e-14 * std::max(1.0, target.cwiseAbs().maxCoeff());
  const int steps = detail::kStepsPerSegment;
  auto endpoint = [&](const Eigen::VectorXd& coeffs) {
    const Vec w = basis * coeffs;
    return Vec(detail::integrate(m, p, w, steps, false).end);
  };

  Eigen::MatrixXd jac(m.ambient_dim(), d);
  bool need_jacobian = true;
  double last_res = std::numeric_limits<double>::infinity();
  bool converged = false;
  for (int it = 0; it < kMaxShootingIters; ++it) {
    const Vec r = endpoint(c) - target;
    const double res = r.norm();
    if (!std::isfinite(res)) break;
    if (res <= tol) {
      converged = true;
      break;
    }
    if (res > 0.1 * last_res) need_jacobian = true;
    last_res = res;
    if (need_jacobian) {
      const double hc = 1e-6 * std::max(c.norm(), 1e-12);
      for (int k = 0; k < d; ++k) {
        Eigen::VectorXd cp = c, cm = c;
        cp[k] += hc;
        cm[k] -= hc;
        jac.col(k) = (endpoint(cp) - endpoint(cm)) / (2 * hc);
      }
      need_jacobian = false;
    }
    Eigen::VectorXd step = jac.colPivHouseholderQr().solve(-Eigen::VectorXd(r));
    const double cap = 0.5 * delta;
    if (step.norm() > cap) step *= cap / step.norm();
    c += step;
  }
  if (!converged) throw NumericError("shooting did not converge within 50 iterations");

  const Vec w = basis * c;
  const double len = m.norm(p, w);
  if (len > delta * (1 + kDeltaSlack)) throw DomainError("shortest connection exceeds delta");

  Eigen::VectorXi winding;
  if (chart) {
    winding.resize(m.ambient_dim());
    for (int i = 0; i < m.ambient_dim(); ++i) {
      winding[i] = static_cast<int>(std::lround((target[i] - q[i]) / m.periods()[i]));
    }
  }
  return detail::segment_from_velocity(m, p, w, q, winding);
}

Vec parallel_transport(const Manifold& m, const GeodesicSegment& seg, const Vec& w) {
  if (w.size() != m.ambient_dim()) throw InputError("vector has wrong dimension");
  if (m.tangency_defect(seg.start, w) > kTangencyTol) throw InputError("vector is not tangent at the segment start");
  if (seg.length == 0) return w;
  const bool embedded = m.backend() == Backend::embedded_level_set;
  const int steps = detail::steps_for(seg.length, m.delta());
  const double h = 1.0 / steps;
  Point x = seg.start;
  Vec v = seg.initial_velocity * seg.length;
  Vec y = w;
  const double speed = seg.length;
  for (int s = 0; s < steps; ++s) {
    const Vec k1x = v;
    const Vec k1v = m.geodesic_acceleration(x, v);
    const Vec k1y = m.transport_derivative(x, v, y);
    const Point x2 = x + 0.5 * h * k1x;
    const Vec v2 = v + 0.5 * h * k1v;
    const Vec y2 = y + 0.5 * h * k1y;
    const Vec k2v = m.geodesic_acceleration(x2, v2);
    const Vec k2y = m.transport_derivative(x2, v2, y2);
    const Point x3 = x + 0.5 * h * v2;
    const Vec v3 = v + 0.5 * h * k2v;
    const Vec y3 = y + 0.5 * h * k2y;
    const Vec k3v = m.geodesic_acceleration(x3, v3);
    const Vec k3y = m.transport_derivative(x3, v3, y3);
    const Point x4 = x + h * v3;
    const Vec v4 = v + h * k3v;
    const Vec y4 = y + h * k3y;
    const Vec k4v = m.geodesic_acceleration(x4, v4);
    const Vec k4y = m.transport_derivative(x4, v4, y4);
    x += (h / 6) * (k1x + 2 * v2 + 2 * v3 + v4);
    v += (h / 6) * (k1v + 2 * k2v + 2 * k3v + k4v);
    y += (h / 6) * (k1y + 2 * k2y + 2 * k3y + k4y);
    if (embedded) {
      x = m.canonical(x);
      v = m.to_tangent(x, v);
      y = m.to_tangent(x, y);
    }
    v *= speed / m.norm(x, v);
  }
  return m.to_tangent(seg.end, y);
}

}  // namespace closedgeo
