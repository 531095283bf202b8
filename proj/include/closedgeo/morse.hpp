#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace closedgeo {

/// Type numbers of the iterate h = g^s of a prime nondegenerate closed geodesic g.
struct TypeNumberQuery {
  int s = 1;
  /// Prime for Z_p coefficients; empty for rational coefficients.
  std::optional<int> p;
  /// d -> i(d), the index of g^d. Only the divisors the formulas use must be present.
  std::map<int, int> index;
  /// Degenerate iterates are outside the theory and rejected.
  bool degenerate = false;
};

/// Greatest divisor of s not divisible by p.
int coprime_part(int s, int p);
bool is_prime(int p);

struct TypeNumberTable {
  std::optional<int> p;      ///< empty: rational coefficients
  std::map<int, int> m;      ///< nonzero entries only
  std::string coefficients() const;  ///< "Q" or "Z_p"
  int total() const;
};

TypeNumberTable type_numbers(const TypeNumberQuery& q);

struct ParityVerdict {
  bool passed = true;
  int n = 0;  ///< first offending iterate
  int k = 0;  ///< its nonzero degree of the wrong parity
};

/// Checks that every nonzero rational type number m_k(g^n), n <= indices.size(), has
/// k = i(1) mod 2. `indices[n - 1]` is i(n).
ParityVerdict lemma1_parity(const std::vector<int>& indices);

enum class SeriesSpace { omega_plus_rel, omega_rel, omega_plus, omega };
SeriesSpace parse_series_space(std::string_view name);
std::string_view to_string(SeriesSpace space);
bool relative(SeriesSpace space);

enum class SeriesBranch { automatic, even, odd };
SeriesBranch parse_series_branch(std::string_view name);

/// A term t^exponent / (1 - t^period).
struct GeometricTerm {
  int exponent = 0;
  int period = 1;
};

struct SeriesExpansion {
  SeriesSpace space = SeriesSpace::omega_plus_rel;
  int n = 2;
  int degree = 0;
  std::vector<long long> coefficients;  ///< c_0 .. c_degree
};

/// The rational-function terms of the relative series for S^n.
std::vector<GeometricTerm> series_terms(SeriesSpace space, int n, SeriesBranch branch = SeriesBranch::automatic);

/// Poincare series of the free loop spaces of S^n (rel the point curves or absolute) up to t^degree.
SeriesExpansion poincare_series(SeriesSpace space, int n, int degree, SeriesBranch branch = SeriesBranch::automatic);

struct MorseCheckInput {
  std::vector<long long> M;
  std::vector<long long> B;
  std::optional<int> stable_from;  ///< r*; defaults to R
};

struct MorseVerdict {
  bool passed = true;
  int stable_from = 0;
  std::optional<int> failed_at;  ///< first r violating the inequality or the equality
  std::string failure;           ///< "inequality" or "equality"
  std::vector<long long> alternating_M;  ///< sum_{j<=r} (-1)^{r-j} M_j
  std::vector<long long> alternating_B;
  std::vector<bool> weak;  ///< M_k >= B_k per k
};

MorseVerdict morse_check(const MorseCheckInput& input);

}  // namespace closedgeo
