#include "closedgeo/errors.hpp"
#include "closedgeo/morse.hpp"
#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace closedgeo;

namespace {

TypeNumberQuery query(int s, std::optional<int> p, std::map<int, int> index) {
  TypeNumberQuery q;
  q.s = s;
  q.p = p;
  q.index = std::move(index);
  return q;
}

std::map<int, int> linear_profile(int s, int c) {
  std::map<int, int> m;
  for (int d = 1; d <= s; ++d) m[d] = c * d;
  return m;
}

std::vector<long long> coeffs(const oracle::Poly& p) { return {p.begin(), p.end()}; }

}  // namespace

TEST_CASE("type number worked cases") {
  CHECK(type_numbers(query(1, std::nullopt, {{1, 1}})).m == std::map<int, int>{{1, 1}});
  CHECK(type_numbers(query(1, 5, {{1, 1}})).m == std::map<int, int>{{1, 1}});

  const auto even = std::map<int, int>{{1, 1}, {2, 3}};
  CHECK(type_numbers(query(2, std::nullopt, even)).m == std::map<int, int>{{3, 1}});
  CHECK(type_numbers(query(2, 2, even)).m == std::map<int, int>{{3, 1}});
  CHECK(type_numbers(query(2, 2, even)).coefficients() == "Z_2");

  const auto odd = std::map<int, int>{{1, 1}, {2, 2}};
  CHECK(type_numbers(query(2, std::nullopt, odd)).m.empty());
  CHECK(type_numbers(query(2, 3, odd)).m.empty());
  CHECK(type_numbers(query(2, 2, odd)).m.empty());
  CHECK(type_numbers(query(2, std::nullopt, odd)).coefficients() == "Q");
}

TEST_CASE("type number queries are validated") {
  CHECK_THROWS_AS(type_numbers(query(0, std::nullopt, {})), InputError);
  CHECK_THROWS_AS(type_numbers(query(2, 4, {{1, 1}, {2, 3}})), InputError);
  CHECK_THROWS_AS(type_numbers(query(4, 2, {{1, 1}, {4, 3}})), InputError);
  try {
    type_numbers(query(6, 3, {{1, 1}, {6, 3}}));
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find('2') != std::string::npos);
  }
  TypeNumberQuery q = query(1, std::nullopt, {{1, 1}});
  q.degenerate = true;
  CHECK_THROWS_AS(type_numbers(q), InputError);
  CHECK_THROWS_AS(type_numbers(query(1, std::nullopt, {{1, -1}})), InputError);
}

TEST_CASE("coprime part and primality") {
  CHECK(coprime_part(12, 2) == 3);
  CHECK(coprime_part(12, 3) == 4);
  CHECK(coprime_part(12, 5) == 12);
  CHECK(coprime_part(8, 2) == 1);
  CHECK(is_prime(2));
  CHECK(is_prime(7));
  CHECK_FALSE(is_prime(1));
  CHECK_FALSE(is_prime(9));
}

TEST_CASE("type numbers agree with enumeration of the case formulas") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> value(0, 10);
  for (int s = 1; s <= 12; ++s) {
    for (int p : {0, 2, 3, 5, 7}) {
      for (int trial = 0; trial < 40; ++trial) {
        std::map<int, int> idx;
        for (int d = 1; d <= s; ++d) idx[d] = value(rng);
        const TypeNumberTable t = type_numbers(query(s, p ? std::optional<int>(p) : std::nullopt, idx));
        CHECK(t.m == oracle::brute_type_numbers(s, p, idx));
        if (s >= 2 && p != 0) {
          const bool diff_odd = s % 2 == 0 && (idx[2] - idx[1]) % 2 != 0;
          if (!diff_odd || p == 2) {
            CHECK(t.total() == std::max(0, idx[s] - idx[coprime_part(s, p)] - 1));
          }
        }
        if (p == 0) CHECK(t.total() <= 1);
      }
    }
  }
}

TEST_CASE("iterate index parity") {
  std::vector<int> sphere;
  for (int n = 1; n <= 8; ++n) sphere.push_back(2 * n - 1);
  CHECK(lemma1_parity(sphere).passed);
  std::vector<int> linear;
  for (int n = 1; n <= 8; ++n) linear.push_back(n);
  CHECK(lemma1_parity(linear).passed);
  for (int c = 0; c <= 3; ++c) {
    std::vector<int> hyperbolic;
    for (int n = 1; n <= 6; ++n) hyperbolic.push_back(c * n);
    bool expect = true;
    for (int s = 1; s <= 6; ++s) {
      for (const auto& [k, v] : oracle::brute_type_numbers(s, 0, linear_profile(s, c))) {
        if (v && (k - c) % 2 != 0) expect = false;
      }
    }
    CHECK(lemma1_parity(hyperbolic).passed == expect);
    CHECK(expect);
  }
  const ParityVerdict bad = lemma1_parity({1, 3, 4});
  CHECK_FALSE(bad.passed);
  CHECK(bad.n == 3);
  CHECK(bad.k == 4);
}

TEST_CASE("parity holds on Bott-consistent profiles") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const oracle::StepProfile prof = oracle::random_profile(rng);
    std::vector<int> idx;
    for (int n = 1; n <= 10; ++n) idx.push_back(prof.index(n));
    CHECK(lemma1_parity(idx).passed);
  }
}

TEST_CASE("loop space series examples") {
  CHECK(poincare_series(SeriesSpace::omega_plus_rel, 2, 6).coefficients == std::vector<long long>{0, 1, 0, 2, 0, 2, 0});
  CHECK(poincare_series(SeriesSpace::omega_plus_rel, 3, 7).coefficients ==
        std::vector<long long>{0, 0, 1, 0, 2, 0, 2, 0});
  CHECK(poincare_series(SeriesSpace::omega_plus, 2, 3).coefficients == std::vector<long long>{1, 1, 0, 1});
  CHECK_THROWS_AS(poincare_series(SeriesSpace::omega_plus_rel, 2, 6, SeriesBranch::odd), InputError);
  CHECK_THROWS_AS(poincare_series(SeriesSpace::omega_plus_rel, 4, 6, SeriesBranch::odd), InputError);
  CHECK_THROWS_AS(poincare_series(SeriesSpace::omega_plus_rel, 3, 6, SeriesBranch::even), InputError);
  CHECK_THROWS_AS(poincare_series(SeriesSpace::omega_rel, 1, 6), InputError);
  CHECK_THROWS_AS(poincare_series(SeriesSpace::omega_rel, 2, -1), InputError);
  CHECK(poincare_series(SeriesSpace::omega_rel, 4, 9, SeriesBranch::even).coefficients ==
        poincare_series(SeriesSpace::omega_rel, 4, 9).coefficients);
}

TEST_CASE("series match the long-division oracle") {
  const SeriesSpace spaces[] = {SeriesSpace::omega_plus_rel, SeriesSpace::omega_rel, SeriesSpace::omega_plus,
                                SeriesSpace::omega};
  for (int n = 2; n <= 8; ++n) {
    for (SeriesSpace sp : spaces) {
      CAPTURE(n);
      const bool plus = sp == SeriesSpace::omega_plus_rel || sp == SeriesSpace::omega_plus;
      const SeriesExpansion e = poincare_series(sp, n, 30);
      CHECK(e.coefficients == coeffs(oracle::sphere_series(plus, !relative(sp), n, 30)));
    }
  }
}

TEST_CASE("absolute series are nonnegative") {
  for (int n = 2; n <= 8; ++n) {
    for (SeriesSpace sp : {SeriesSpace::omega_plus, SeriesSpace::omega}) {
      for (long long c : poincare_series(sp, n, 50).coefficients) CHECK(c >= 0);
    }
  }
}

TEST_CASE("series space names") {
  CHECK(parse_series_space("omega+rel") == SeriesSpace::omega_plus_rel);
  CHECK(parse_series_space("omega_rel") == SeriesSpace::omega_rel);
  CHECK(parse_series_space("omega+") == SeriesSpace::omega_plus);
  CHECK(parse_series_space("omega") == SeriesSpace::omega);
  for (SeriesSpace sp : {SeriesSpace::omega_plus_rel, SeriesSpace::omega_rel, SeriesSpace::omega_plus,
                         SeriesSpace::omega}) {
    CHECK(parse_series_space(to_string(sp)) == sp);
  }
  CHECK_THROWS_AS(parse_series_space("lambda"), InputError);
  CHECK(parse_series_branch("auto") == SeriesBranch::automatic);
  CHECK_THROWS_AS(parse_series_branch("neither"), InputError);
}

TEST_CASE("Morse inequality checker examples") {
  const MorseVerdict same = morse_check({{1, 0, 2, 0, 2}, {1, 0, 2, 0, 2}, std::nullopt});
  CHECK(same.passed);
  CHECK(same.stable_from == 4);

  const MorseVerdict pair = morse_check({{1, 1, 1}, {1, 0, 0}, 2});
  CHECK(pair.passed);

  const MorseVerdict low = morse_check({{0, 0}, {1, 0}, std::nullopt});
  CHECK_FALSE(low.passed);
  REQUIRE(low.failed_at);
  CHECK(*low.failed_at == 0);
  CHECK(low.failure == "inequality");

  const MorseVerdict eq = morse_check({{1, 1, 0}, {1, 0, 0}, 1});
  CHECK_FALSE(eq.passed);
  CHECK(eq.failure == "equality");

  CHECK_THROWS_AS(morse_check({{1, 2}, {1}, std::nullopt}), InputError);
  CHECK_THROWS_AS(morse_check({{1, 2}, {1, 2}, 5}), InputError);
  CHECK_THROWS_AS(morse_check({{-1, 2}, {1, 2}, std::nullopt}), InputError);
}

TEST_CASE("Morse checker on series data and cancelling pairs") {
  const auto b = poincare_series(SeriesSpace::omega_rel, 2, 9).coefficients;
  CHECK(morse_check({b, b, std::nullopt}).passed);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<int> n_dist(2, 6);
    const auto base = poincare_series(SeriesSpace::omega_plus, n_dist(rng), 12).coefficients;
    std::vector<long long> m = base;
    const int rstar = 12;
    std::uniform_int_distribution<int> j_dist(0, rstar - 2);
    for (int k = 0; k < 3; ++k) {
      const auto j = static_cast<size_t>(j_dist(rng));
      m[j] += 1;
      m[j + 1] += 1;
    }
    const MorseVerdict v = morse_check({m, base, rstar});
    CHECK(v.passed);
    for (bool w : v.weak) CHECK(w);
  }
}
