#pragma once

#include "closedgeo/loopspace.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace closedgeo {

/// Eigenvalues with |lambda| <= kNullThreshold * max|lambda| count as null.
inline constexpr double kNullThreshold = 1e-6;
/// Spectral work subdivides coarser polygons up to at least this many vertices.
inline constexpr int kMinSpectralVertices = 32;

/// Per-vertex orthonormal bases of the directions orthogonal to the outgoing edge.
struct TransverseFrame {
  std::vector<Frame> bases;
  int rank() const { return bases.empty() ? 0 : static_cast<int>(bases.front().cols()); }
};

TransverseFrame transverse_frame(const Polygon& p);

/// Components of grad_length in the transverse frame, stacked vertex by vertex.
Eigen::VectorXd transverse_gradient(const Polygon& p, const TransverseFrame& frame);

/// Second variation of length restricted to the transverse product, by central
/// differences of the analytic gradient. Only neighbouring vertices couple, so the
/// matrix is block tridiagonal with one wrap-around block.
struct TransverseHessian {
  Eigen::MatrixXd matrix;  ///< symmetrized
  int block = 0;           ///< d - 1
  double asymmetry = 0;    ///< max |H - H^T| / max |H| before symmetrization
  TransverseFrame frame;
  std::vector<std::string> warnings;

  int vertices() const { return block ? static_cast<int>(matrix.rows()) / block : 0; }
  /// H(z): the coupling between vertex N-1 and vertex 0 multiplied by z, i.e. the
  /// quadratic form on fields with xi_{i+N} = z xi_i. H(1) is `matrix`.
  Eigen::MatrixXcd twisted(std::complex<double> z) const;
};

TransverseHessian transverse_hessian(const Polygon& p, int threads = 1);

/// Subdivides p until it has at least kMinSpectralVertices vertices.
Polygon spectral_polygon(const Polygon& p);

/// Hessian of a converged geodesic on its spectral polygon. Throws InputError otherwise.
TransverseHessian hessian(const ClosedGeodesic& g, int threads = 1);

struct IndexNullity {
  int index = 0;
  int nullity = 0;
  std::vector<double> eigenvalues;  ///< ascending
  std::vector<std::string> warnings;
};

/// Counts eigenvalues below -eps * sigma and within eps * sigma of zero, sigma = max |lambda|.
IndexNullity count_spectrum(const Eigen::VectorXd& eigenvalues, double sigma);
IndexNullity index_nullity(const ClosedGeodesic& g, int threads = 1);

/// Monodromy of the Jacobi equation y'' + R(t) y = 0 in a parallel normal frame, acting
/// on (y, y'); size 2(d-1).
Eigen::MatrixXd poincare_map(const ClosedGeodesic& g);

/// Parallel transport of the orthonormal frame (u, normals) around the loop, expressed
/// in the initial frame.
Eigen::MatrixXd holonomy(const Polygon& p);
bool orientation_preserving(const ClosedGeodesic& g);

/// max |P^T J P - J|.
double symplectic_defect(const Eigen::MatrixXd& p);

struct BottSample {
  double z_arg = 0;  ///< in [0, 2 pi)
  int lambda = 0;
  int n = 0;
};

/// Precomputed local data from which Bott's functions are evaluated anywhere on |z| = 1.
class BottAnalysis {
 public:
  explicit BottAnalysis(const ClosedGeodesic& g, int threads = 1);

  /// Number of negative eigenvalues of the twisted Hessian H(z).
  int lambda(std::complex<double> z) const;
  /// dim ker(P - z) by singular values below eps * |P|.
  int kernel(std::complex<double> z) const;
  /// Nullity of H(z), for diagnostics.
  int hessian_kernel(std::complex<double> z) const;

  const Eigen::MatrixXd& poincare() const noexcept { return poincare_; }
  const std::vector<std::complex<double>>& poincare_eigenvalues() const noexcept { return eigenvalues_; }
  /// Arguments in [0, 2 pi) of the eigenvalues of P on the unit circle.
  std::vector<double> unit_eigenvalue_args() const;
  bool orientation_preserving() const noexcept { return orientation_preserving_; }
  const TransverseHessian& hessian() const noexcept { return hessian_; }
  double sigma() const noexcept { return sigma_; }

 private:
  TransverseHessian hessian_;
  double sigma_ = 0;
  Eigen::MatrixXd poincare_;
  std::vector<std::complex<double>> eigenvalues_;
  bool orientation_preserving_ = true;
};

struct BottFunctions {
  std::vector<BottSample> samples;  ///< sorted by z_arg
  std::vector<std::string> warnings;
};

/// Samples at exp(2 pi i k / grid) plus the n-th roots of +-1 for every n in `iterates`.
BottFunctions bott_functions(const BottAnalysis& analysis, int grid, const std::vector<int>& iterates = {});
BottFunctions bott_functions(const ClosedGeodesic& g, int grid, const std::vector<int>& iterates = {});

enum class IterateMode { bott, direct, both };
IterateMode parse_iterate_mode(std::string_view name);

struct IteratedIndex {
  int n = 1;
  std::optional<int> bott_index, bott_nullity;
  std::optional<int> direct_index, direct_nullity;
  int index = 0;
  int nullity = 0;
  bool agree = true;
};

/// Index and nullity of g^n: Bott's sums over the n-th roots of 1 (or -1 when transport
/// reverses orientation), and/or the n-fold polygon in Pi_{nN}. Mode `both` throws
/// ConsistencyError on disagreement.
IteratedIndex iterated_index(const ClosedGeodesic& g, int n, IterateMode mode, int threads = 1);
IteratedIndex iterated_index(const ClosedGeodesic& g, const BottAnalysis& analysis, int n, IterateMode mode,
                             int threads = 1);

/// Smallest k dividing N with x_{i+k} = x_i for all i: N for a prime curve. Advisory only.
int minimal_period(const Polygon& p, double tol = 1e-8);

struct SpectralData {
  int index = 0;
  int nullity = 0;
  Eigen::MatrixXd poincare_matrix;
  std::vector<std::complex<double>> poincare_eigenvalues;
  bool orientation_preserving = true;
  std::vector<BottSample> bott_samples;
  std::vector<double> hessian_eigenvalues;
  double symplectic_defect = 0;
  int vertices = 0;
  std::vector<std::string> warnings;
};

SpectralData analyze(const ClosedGeodesic& g, int grid, const std::vector<int>& iterates = {}, int threads = 1);

}  // namespace closedgeo
