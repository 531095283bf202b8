#include "closedgeo/morse.hpp"

#include "closedgeo/errors.hpp"

namespace closedgeo {

namespace {

int index_at(const TypeNumberQuery& q, int d) {
  const auto it = q.index.find(d);
  if (it == q.index.end()) throw InputError("index of iterate d = " + std::to_string(d) + " is required");
  if (it->second < 0) throw InputError("index of iterate d = " + std::to_string(d) + " is negative");
  return it->second;
}

void fill_window(TypeNumberTable& t, int lo, int hi) {
  for (int k = lo; k <= hi; ++k) t.m[k] = 1;
}

}  // namespace

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d) {
    if (p % d == 0) return false;
  }
  return true;
}

int coprime_part(int s, int p) {
  if (s < 1) throw InputError("s must be >= 1");
  if (p < 2) throw InputError("p must be >= 2");
  while (s % p == 0) s /= p;
  return s;
}

std::string TypeNumberTable::coefficients() const { return p ? "Z_" + std::to_string(*p) : "Q"; }

int TypeNumberTable::total() const {
  int sum = 0;
  for (const auto& [k, v] : m) sum += v;
  return sum;
}

TypeNumberTable type_numbers(const TypeNumberQuery& q) {
  if (q.degenerate) throw InputError("type numbers are only defined for nondegenerate iterates");
  if (q.s < 1) throw InputError("s must be >= 1");
  if (q.p && !is_prime(*q.p)) throw InputError(std::to_string(*q.p) + " is not prime");
  TypeNumberTable t;
  t.p = q.p;
  if (q.s == 1) {
    t.m[index_at(q, 1)] = 1;
    return t;
  }
  const bool case_a = q.s % 2 == 1 || (index_at(q, 2) - index_at(q, 1)) % 2 == 0;
  const int is = index_at(q, q.s);
  if (!q.p) {
    if (case_a) t.m[is] = 1;
    return t;
  }
  if (!case_a && *q.p != 2) return t;
  fill_window(t, index_at(q, coprime_part(q.s, *q.p)) + 2, is);
  return t;
}

ParityVerdict lemma1_parity(const std::vector<int>& indices) {
  ParityVerdict v;
  if (indices.empty()) return v;
  TypeNumberQuery q;
  for (size_t d = 0; d < indices.size(); ++d) q.index[static_cast<int>(d) + 1] = indices[d];
  const int base = indices.front();
  for (int n = 1; n <= static_cast<int>(indices.size()); ++n) {
    q.s = n;
    for (const auto& [k, m] : type_numbers(q).m) {
      if (m != 0 && (k - base) % 2 != 0) {
        v.passed = false;
        v.n = n;
        v.k = k;
        return v;
      }
    }
  }
  return v;
}

SeriesSpace parse_series_space(std::string_view name) {
  if (name == "omega+rel" || name == "omega_plus_rel_M" || name == "omega_plus_rel") return SeriesSpace::omega_plus_rel;
  if (name == "omega_rel" || name == "omega_rel_M" || name == "omegarel") return SeriesSpace::omega_rel;
  if (name == "omega+" || name == "omega_plus_abs" || name == "omega_plus") return SeriesSpace::omega_plus;
  if (name == "omega" || name == "omega_abs") return SeriesSpace::omega;
  throw InputError("unknown series space '" + std::string(name) + "'");
}

std::string_view to_string(SeriesSpace space) {
  switch (space) {
    case SeriesSpace::omega_plus_rel: return "omega_plus_rel_M";
    case SeriesSpace::omega_rel: return "omega_rel_M";
    case SeriesSpace::omega_plus: return "omega_plus_abs";
    case SeriesSpace::omega: return "omega_abs";
  }
  return "unknown";
}

bool relative(SeriesSpace space) { return space == SeriesSpace::omega_plus_rel || space == SeriesSpace::omega_rel; }

SeriesBranch parse_series_branch(std::string_view name) {
  if (name == "auto") return SeriesBranch::automatic;
  if (name == "even") return SeriesBranch::even;
  if (name == "odd") return SeriesBranch::odd;
  throw InputError("unknown series branch '" + std::string(name) + "'");
}

std::vector<GeometricTerm> series_terms(SeriesSpace space, int n, SeriesBranch branch) {
  if (n < 2) throw InputError("sphere dimension must be >= 2");
  const bool even = n % 2 == 0;
  if (branch == SeriesBranch::odd && n < 3) throw InputError("the odd-dimensional formula needs n >= 3");
  if (branch == SeriesBranch::odd && even) throw InputError("the odd-dimensional formula does not apply to even n");
  if (branch == SeriesBranch::even && !even) throw InputError("the even-dimensional formula does not apply to odd n");
  const bool plus = space == SeriesSpace::omega_plus_rel || space == SeriesSpace::omega_plus;
  if (plus) {
    if (even) return {{n - 1, 2}, {3 * n - 3, 2 * n - 2}};
    return {{n - 1, 2}, {2 * n - 2, n - 1}};
  }
  if (even) return {{n + 1, 4}, {3 * n - 3, 4 * n - 4}};
  return {{n + 1, 4}, {2 * n - 2, 2 * n - 2}};
}

SeriesExpansion poincare_series(SeriesSpace space, int n, int degree, SeriesBranch branch) {
  if (degree < 0) throw InputError("degree must be >= 0");
  SeriesExpansion out;
  out.space = space;
  out.n = n;
  out.degree = degree;
  out.coefficients.assign(static_cast<size_t>(degree) + 1, 0);
  for (const auto& term : series_terms(space, n, branch)) {
    for (int k = term.exponent; k <= degree; k += term.period) ++out.coefficients[static_cast<size_t>(k)];
  }
  if (!relative(space)) {
    out.coefficients[0] += 1;
    if (n + 1 <= degree) out.coefficients[static_cast<size_t>(n) + 1] -= 1;
    for (size_t k = 0; k < out.coefficients.size(); ++k) {
      if (out.coefficients[k] < 0) {
        throw ConsistencyError("absolute series has a negative coefficient at t^" + std::to_string(k),
                               "{\"degree\": " + std::to_string(k) + "}");
      }
    }
  }
  return out;
}

MorseVerdict morse_check(const MorseCheckInput& input) {
  if (input.M.size() != input.B.size()) throw InputError("M and B must have the same length");
  if (input.M.empty()) throw InputError("M and B must be non-empty");
  const int top = static_cast<int>(input.M.size()) - 1;
  for (size_t k = 0; k < input.M.size(); ++k) {
    if (input.M[k] < 0 || input.B[k] < 0) throw InputError("M and B entries must be nonnegative");
  }
  MorseVerdict v;
  v.stable_from = input.stable_from.value_or(top);
  if (v.stable_from < 0 || v.stable_from > top) throw InputError("stable-from rank must lie in [0, R]");
  long long am = 0, ab = 0;
  for (int r = 0; r <= top; ++r) {
    am = input.M[static_cast<size_t>(r)] - am;
    ab = input.B[static_cast<size_t>(r)] - ab;
    v.alternating_M.push_back(am);
    v.alternating_B.push_back(ab);
    v.weak.push_back(input.M[static_cast<size_t>(r)] >= input.B[static_cast<size_t>(r)]);
    if (!v.passed) continue;
    if (am < ab) {
      v.passed = false;
      v.failed_at = r;
      v.failure = "inequality";
    } else if (r >= v.stable_from && am != ab) {
      v.passed = false;
      v.failed_at = r;
      v.failure = "equality";
    }
  }
  return v;
}

}  // namespace closedgeo
