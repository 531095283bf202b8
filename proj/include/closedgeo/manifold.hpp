#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace closedgeo {

inline constexpr int kMaxAmbientDim = 8;

/// Coordinates of a point or tangent vector: ambient R^m for embedded manifolds,
/// chart coordinates for periodic charts. Inline storage, no heap traffic.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxAmbientDim, 1>;
using Point = Vec;
/// Tangent vectors stored column-wise.
using Frame = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxAmbientDim, kMaxAmbientDim>;

enum class ManifoldKind { round_sphere, ellipsoid, flat_torus, torus_of_revolution };
enum class Backend { embedded_level_set, periodic_chart };

std::string_view to_string(ManifoldKind kind);
std::string_view to_string(Backend backend);
ManifoldKind parse_manifold_kind(std::string_view name);

/// A built-in model manifold. Immutable value type; cheap to copy and safe to share.
///
/// Embedded manifolds are level sets G(x) = sum x_i^2 / a_i^2 - 1 = 0 in R^{d+1}.
/// Chart manifolds use coordinates periodic in every component: the flat torus with its
/// side lengths as periods, and the torus of revolution in angles (u, v) in [0, 2pi)^2
/// with metric (R + r cos v)^2 du^2 + r^2 dv^2.
class Manifold {
 public:
  /// Validates parameters and the connection radius; `delta` defaults per kind.
  static Manifold create(ManifoldKind kind, std::vector<double> params,
                         std::optional<double> delta = std::nullopt);

  ManifoldKind kind() const noexcept { return kind_; }
  Backend backend() const noexcept { return backend_; }
  const std::vector<double>& params() const noexcept { return params_; }
  int dim() const noexcept { return dim_; }
  /// Length of a coordinate vector (d + 1 embedded, d for charts).
  int ambient_dim() const noexcept { return ambient_; }
  double delta() const noexcept { return delta_; }
  double injectivity_radius() const noexcept { return injectivity_; }
  /// Chart periods; empty for embedded manifolds.
  const Vec& periods() const noexcept { return periods_; }
  /// Semi-axes of the level set; empty for charts.
  const Vec& semi_axes() const noexcept { return axes_; }
  bool orientable() const noexcept { return true; }

  double constraint_residual(const Point& x) const;
  /// Projects onto the level set (embedded) or wraps into [0, period) (chart).
  Point canonical(const Point& x) const;
  /// Throws InputError unless x is a valid point representation.
  void require_point(const Point& x, std::string_view what = "point") const;

  /// Riemannian metric at x.
  double inner(const Point& x, const Vec& a, const Vec& b) const;
  double norm(const Point& x, const Vec& a) const;
  /// Orthogonal projection onto T_x (identity for charts).
  Vec to_tangent(const Point& x, const Vec& v) const;
  /// Size of the component of v normal to T_x, relative to |v|.
  double tangency_defect(const Point& x, const Vec& v) const;
  /// Metric-orthonormal basis of T_x, one column per intrinsic direction.
  Frame tangent_basis(const Point& x) const;
  /// Metric-orthonormal basis of the complement of the unit tangent `u` in T_x.
  /// On surfaces the single column is the positively oriented normal J u.
  Frame normal_basis(const Point& x, const Vec& u) const;

  /// Second derivative of a geodesic through x with velocity v.
  Vec geodesic_acceleration(const Point& x, const Vec& v) const;
  /// Derivative of a parallel field w along a geodesic with velocity v at x.
  Vec transport_derivative(const Point& x, const Vec& v, const Vec& w) const;
  /// <R(E_b, T) T, E_a> for the unit tangent T and normal frame E.
  Eigen::MatrixXd jacobi_operator(const Point& x, const Vec& unit_velocity, const Frame& normals) const;

  /// Chord seed from p towards q: q - p (embedded), or the lift of q closest to p with
  /// ties at half a period broken towards the negative side (chart).
  Vec lift_displacement(const Point& p, const Point& q) const;
  /// A cheap lower bound for d(p, q), exact on the flat torus.
  double distance_lower_bound(const Point& p, const Point& q) const;
  /// Moves x by the coordinate vector `step` and returns to a valid representation.
  Point retract(const Point& x, const Vec& step) const;

  bool operator==(const Manifold& other) const;

 private:
  Manifold() = default;

  ManifoldKind kind_{};
  Backend backend_{};
  std::vector<double> params_;
  int dim_ = 0;
  int ambient_ = 0;
  double delta_ = 0;
  double injectivity_ = 0;
  Vec periods_;
  Vec axes_;
  Vec inv_axes2_;  // 1 / a_i^2
};

double default_delta(ManifoldKind kind, const std::vector<double>& params);

struct FlowState {
  Point position;
  Vec velocity;
};

/// Unit-speed geodesic flow for arclength t. Fixed-step RK4 with min(delta, t) / 64 steps,
/// projected back onto the constraint after every step.
FlowState geodesic_flow(const Manifold& m, const Point& p, const Vec& v, double t);

/// The unique shortest geodesic between two points closer than delta.
struct GeodesicSegment {
  Point start;
  Point end;
  Vec initial_velocity;  ///< unit, at start
  Vec final_velocity;    ///< unit, arriving at end
  double length = 0;
  std::vector<Point> samples;  ///< includes both endpoints
  /// Periods crossed between the canonical endpoints (chart backend only).
  Eigen::VectorXi winding;

  int sample_count() const noexcept { return static_cast<int>(samples.size()); }
  GeodesicSegment reversed() const;
};

/// Shooting: Newton iteration on the initial velocity until the flow hits q.
GeodesicSegment connect(const Manifold& m, const Point& p, const Point& q);

/// Parallel transport of w from seg.start to seg.end.
Vec parallel_transport(const Manifold& m, const GeodesicSegment& seg, const Vec& w);

namespace detail {

inline constexpr int kStepsPerSegment = 64;

int steps_for(double length, double delta);

struct Trajectory {
  Point end;  ///< unwrapped for charts
  Vec end_velocity;
  std::vector<Point> samples;
};

/// Integrates the geodesic with initial velocity w over unit time (so arclength |w|).
Trajectory integrate(const Manifold& m, const Point& p, const Vec& w, int steps, bool keep_samples);

/// Builds a segment by integrating from p with velocity w over unit time, ending at `end`.
GeodesicSegment segment_from_velocity(const Manifold& m, const Point& p, const Vec& w,
                                      const Point& end, const Eigen::VectorXi& winding);

}  // namespace detail

}  // namespace closedgeo
