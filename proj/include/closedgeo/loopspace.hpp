#pragma once

#include "closedgeo/manifold.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace closedgeo {

/// A closed geodesic polygon (x_0, ..., x_{N-1}) with every edge shorter than delta:
/// a point of the finite-dimensional loop space approximation. Immutable once built.
class Polygon {
 public:
  /// Connects consecutive vertices. Throws ResolutionError when an edge exceeds delta.
  static Polygon through(const Manifold& m, std::vector<Point> vertices);
  /// Assembles a polygon from segments that are already known to connect the vertices.
  static Polygon from_segments(const Manifold& m, std::vector<GeodesicSegment> segments);
  /// The zero-length constant curve at x. Only bookkeeping accepts it; every
  /// loop-space operation rejects it.
  static Polygon point_curve(const Manifold& m, Point x);

  const Manifold& manifold() const noexcept { return manifold_; }
  int size() const noexcept { return static_cast<int>(vertices_.size()); }
  bool trivial() const noexcept { return trivial_; }
  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const Point& vertex(int i) const { return vertices_[static_cast<size_t>(i)]; }
  const std::vector<GeodesicSegment>& segments() const noexcept { return segments_; }
  const GeodesicSegment& segment(int i) const { return segments_[static_cast<size_t>(i)]; }
  /// Free homotopy class: total winding of the segments (chart backend only).
  const std::optional<Eigen::VectorXi>& homotopy_class() const noexcept { return homotopy_class_; }

 private:
  Polygon(Manifold m) : manifold_(std::move(m)) {}
  void finish();

  Manifold manifold_;
  std::vector<Point> vertices_;
  std::vector<GeodesicSegment> segments_;
  std::optional<Eigen::VectorXi> homotopy_class_;
  bool trivial_ = false;
};

enum class Method { minimize, sweepout, newton, manual };
std::string_view to_string(Method method);
Method parse_method(std::string_view name);

struct TraceRow {
  int iteration = 0;
  double max_length = 0;  ///< polygon length (the family maximum for sweep-outs)
  double grad_norm = 0;
};

/// A critical polygon of the length function together with its convergence certificate.
struct ClosedGeodesic {
  Polygon polygon;
  double length = 0;
  double grad_norm = 0;
  Method method = Method::manual;
  bool converged = false;
  /// Minimization shrank the curve to a point; `polygon` is the last iterate.
  bool collapsed = false;
  int iterations = 0;
  std::vector<TraceRow> trace;
};

/// Criticality threshold scaled with the curve length.
double critical_tolerance(double grad_tol, double length);

/// Evaluates length and gradient of `p`; converged iff grad_norm <= grad_tol * max(1, length).
ClosedGeodesic certify(Polygon p, Method method, double grad_tol = 1e-10);

/// N = floor(a / delta) + 1 vertices suffice for curves of length at most a.
int vertices_for_length(double length_bound, double delta);

/// N points at equal arclength along a dense closed sample polyline, starting at samples[0].
Polygon polygon_from_samples(const Manifold& m, const std::vector<Point>& samples, int n);

double length(const Polygon& p);

/// Splits every segment into l pieces of equal arclength along the existing geodesic,
/// so length is preserved up to rounding.
Polygon subdivide(const Polygon& p, int l);

/// (x_0, ..., x_{N-1}) -> (x_{N-1}, ..., x_0).
Polygon reverse(const Polygon& p);

/// (x_0, ..., x_{N-1}) -> (x_k, ..., x_{(N-1+k) mod N}).
Polygon rotate(const Polygon& p, int k);

/// The n-fold traversal in Pi_{nN}.
Polygon iterate(const Polygon& p, int n);

/// First variation of length: at x_i, u_in - u_out where u_in arrives along segment i-1
/// and u_out leaves along segment i. Zero exactly at closed geodesics.
std::vector<Vec> grad_length(const Polygon& p);
double grad_norm(const Polygon& p);
double grad_norm(const Polygon& p, const std::vector<Vec>& grad);

/// Birkhoff's map T: the polygon through the arclength midpoints of the edges.
Polygon birkhoff_shorten(const Polygon& p);

}  // namespace closedgeo
