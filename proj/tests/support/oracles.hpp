#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// library routine it is meant to check.

#include "closedgeo/errors.hpp"
#include "closedgeo/finder.hpp"
#include "closedgeo/loopspace.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using namespace closedgeo;

/// Perimeter of the ellipse with semi-axes a, b by adaptive Gauss-Kronrod quadrature.
inline double ellipse_perimeter(double a, double b) {
  auto f = [&](double t) { return std::sqrt(a * a * std::sin(t) * std::sin(t) + b * b * std::cos(t) * std::cos(t)); };
  double err = 0;
  const double quarter =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, std::numbers::pi / 2, 20, 1e-15, &err);
  return 4 * quarter;
}

using Poly = std::vector<long long>;

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly c(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) c[i + j] += a[i] * b[j];
  return c;
}

inline Poly poly_add(Poly a, const Poly& b) {
  if (a.size() < b.size()) a.resize(b.size(), 0);
  for (size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

inline Poly monomial(int k, long long c = 1) {
  Poly p(static_cast<size_t>(k) + 1, 0);
  p[static_cast<size_t>(k)] = c;
  return p;
}

/// 1 - t^b.
inline Poly one_minus(int b) { return poly_add(Poly{1}, monomial(b, -1)); }

/// Power series of num / den to degree K by long division; den[0] must be 1.
inline Poly long_division(Poly num, const Poly& den, int K) {
  Poly q(static_cast<size_t>(K) + 1, 0);
  num.resize(std::max(num.size(), q.size()) + den.size(), 0);
  for (int k = 0; k <= K; ++k) {
    const long long c = num[static_cast<size_t>(k)];
    q[static_cast<size_t>(k)] = c;
    for (size_t j = 0; j < den.size(); ++j) num[static_cast<size_t>(k) + j] -= c * den[j];
  }
  return q;
}

/// t^pre (t^0 / (1 - t^b1) + t^c / (1 - t^b2)) over a common denominator, divided out.
inline Poly two_term_series(int pre, int b1, int c, int b2, int K) {
  const Poly num = poly_mul(monomial(pre), poly_add(one_minus(b2), poly_mul(monomial(c), one_minus(b1))));
  return long_division(num, poly_mul(one_minus(b1), one_minus(b2)), K);
}

/// The sphere loop-space series written out from the closed formulas.
inline Poly sphere_series(bool plus, bool absolute, int n, int K) {
  Poly rel;
  if (n % 2 == 0) {
    rel = plus ? two_term_series(n - 1, 2, 2 * n - 2, 2 * n - 2, K) : two_term_series(n + 1, 4, 2 * n - 4, 4 * n - 4, K);
  } else {
    rel = plus ? two_term_series(n - 1, 2, n - 1, n - 1, K) : two_term_series(n + 1, 4, n - 3, 2 * n - 2, K);
  }
  if (!absolute) return rel;
  Poly out = poly_add(rel, Poly{1});
  if (n + 1 <= K) out[static_cast<size_t>(n) + 1] -= 1;
  out.resize(static_cast<size_t>(K) + 1);
  return out;
}

/// Type numbers by direct enumeration of the case formulas; p = 0 means rational.
inline std::map<int, int> brute_type_numbers(int s, int p, const std::map<int, int>& i) {
  std::map<int, int> m;
  if (s == 1) {
    m[i.at(1)] = 1;
    return m;
  }
  const bool s_even = s % 2 == 0;
  const bool diff_odd = s_even && ((i.at(2) - i.at(1)) % 2 != 0);
  auto window = [&](int q) {
    int dq = 1;
    for (int d = 1; d <= s; ++d) {
      if (s % d == 0 && d % q != 0) dq = d;
    }
    for (int k = 0; k <= 64; ++k) {
      if (i.at(dq) + 2 <= k && k <= i.at(s)) m[k] = 1;
    }
  };
  if (!diff_odd) {
    if (p == 0) m[i.at(s)] = 1;
    else window(p);
  } else if (p == 2) {
    window(2);
  }
  return m;
}

/// Central-difference directional derivative of length at vertex i along `dir`.
inline double fd_derivative(const Polygon& p, int i, const Vec& dir, double h) {
  const Manifold& m = p.manifold();
  auto moved = [&](double s) {
    std::vector<Point> v = p.vertices();
    v[static_cast<size_t>(i)] = m.retract(v[static_cast<size_t>(i)], s * dir);
    return length(Polygon::through(m, v));
  };
  return (moved(h) - moved(-h)) / (2 * h);
}

/// A perturbed latitude (embedded) or class (chart) loop with N vertices whose edges stay
/// well inside delta.
inline Polygon random_polygon(const Manifold& m, int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  static const std::vector<std::vector<int>> classes = {{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  for (int attempt = 0;; ++attempt) {
    try {
      std::optional<Polygon> base;
      if (m.backend() == Backend::embedded_level_set) {
        const int axis = static_cast<int>(u(rng) * m.ambient_dim()) % m.ambient_dim();
        base = latitude_polygon(m, n, 0.3 + 2.5 * u(rng), axis);
      } else {
        const auto& cls = classes[static_cast<size_t>(u(rng) * 4) % 4];
        Point b(2);
        b << u(rng) * m.periods()[0], u(rng) * m.periods()[1];
        base = class_loop(m, cls, n, b);
      }
      const double edge = length(*base) / n;
      if (edge > 0.6 * m.delta()) throw ResolutionError("edge too long for a test polygon", n);
      return perturb(*base, 0.15 * edge, rng());
    } catch (const Error&) {
      if (attempt > 200) throw;
    }
  }
}

/// Index sums over n-th roots of unity of a conjugation-symmetric step function of arg z.
struct StepProfile {
  int at_one = 0;
  int at_minus_one = 0;
  std::vector<double> jumps;  ///< sorted in (0, pi)
  std::vector<int> values;    ///< values.size() == jumps.size() + 1, on the open arcs

  int lambda(double arg) const {
    double a = std::fmod(arg, 2 * std::numbers::pi);
    if (a < 0) a += 2 * std::numbers::pi;
    if (a > std::numbers::pi) a = 2 * std::numbers::pi - a;
    if (std::abs(a) < 1e-12) return at_one;
    if (std::abs(a - std::numbers::pi) < 1e-12) return at_minus_one;
    size_t k = 0;
    while (k < jumps.size() && a > jumps[k]) ++k;
    return values[k];
  }

  int index(int n) const {
    int sum = 0;
    for (int j = 0; j < n; ++j) sum += lambda(2 * std::numbers::pi * j / n);
    return sum;
  }
};

inline StepProfile random_profile(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> value(0, 6);
  std::uniform_int_distribution<int> count(0, 4);
  std::uniform_real_distribution<double> where(0.01, std::numbers::pi - 0.01);
  StepProfile p;
  p.at_one = value(rng);
  p.at_minus_one = value(rng);
  const int k = count(rng);
  for (int j = 0; j < k; ++j) p.jumps.push_back(where(rng));
  std::sort(p.jumps.begin(), p.jumps.end());
  for (int j = 0; j <= k; ++j) p.values.push_back(value(rng));
  return p;
}

}  // namespace oracle
