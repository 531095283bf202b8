#pragma once

#include "closedgeo/loopspace.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace closedgeo {

struct FinderOptions {
  /// Polygon size; 0 derives it from `length_bound` (N = floor(a / delta) + 1).
  int N = 0;
  std::optional<double> length_bound;
  int max_iters = 10000;
  double grad_tol = 1e-10;
  int family_size = 64;
  std::uint64_t seed = 0;
  int threads = 1;

  /// Throws InputError on non-positive tolerances or N in [1, 2].
  void validate() const;
};

/// N from the options, or `fallback` when neither N nor a length bound is given.
int resolve_vertices(const Manifold& m, const FinderOptions& opts, int fallback);

/// Birkhoff shortening inside the free homotopy class of the seed, then Newton.
/// A seed that shrinks below 10 * grad_tol comes back with `collapsed` set.
ClosedGeodesic minimize_in_class(const Manifold& m, const Polygon& seed, const FinderOptions& opts);

/// Discrete Birkhoff minimax over latitude polygons around the longest axis of a
/// 2-dimensional sphere or ellipsoid. The poles are fixed point curves.
ClosedGeodesic sweepout_minimax(const Manifold& m, const FinderOptions& opts);

/// Damped Newton on the transverse vertex displacements with a pseudo-inverse Hessian,
/// so it also converges onto degenerate critical manifolds.
ClosedGeodesic refine_newton(const Polygon& p, const FinderOptions& opts);

/// Circle of colatitude theta about semi-axis `axis` (-1: the longest) through the
/// next two axes, on an ellipsoid or round sphere.
Polygon latitude_polygon(const Manifold& m, int n, double colatitude, int axis = -1);

/// The section of the ellipsoid by the coordinate plane (i, j).
Polygon principal_ellipse_polygon(const Manifold& m, int i, int j, int n);

/// Straight chart loop from `base` in the class `cls` (in units of the periods).
Polygon class_loop(const Manifold& m, const std::vector<int>& cls, int n, std::optional<Point> base = std::nullopt);

/// Moves every vertex by a Gaussian tangent vector of standard deviation `amplitude`.
Polygon perturb(const Polygon& p, double amplitude, std::uint64_t seed);

}  // namespace closedgeo
