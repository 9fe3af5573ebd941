#include <doctest.h>

#include "oracle_factor.hpp"
#include "toruslab/algebra.hpp"

using namespace toruslab;
using namespace toruslab::algebra;

namespace {

IntMatrix cat_map() { return IntMatrix(2, {big_int(2), big_int(1), big_int(1), big_int(1)}); }

IntMatrix blockdiag_cat_cat() {
  std::vector<big_int> e(16, 0);
  e[0] = 2; e[1] = 1; e[4] = 1; e[5] = 1;
  e[10] = 2; e[11] = 1; e[14] = 1; e[15] = 1;
  return IntMatrix(4, std::move(e));
}

IntMatrix companion(const std::vector<long long>& monic_coeffs_low_to_high) {
  int d = int(monic_coeffs_low_to_high.size()) - 1;
  std::vector<big_int> e(std::size_t(d) * d, 0);
  for (int i = 0; i + 1 < d; ++i) e[std::size_t(i + 1) * d + i] = 1;
  for (int i = 0; i < d; ++i) e[std::size_t(i) * d + (d - 1)] = -big_int(monic_coeffs_low_to_high[std::size_t(i)]);
  return IntMatrix(d, std::move(e));
}

PolyZ P(std::initializer_list<long long> c) {
  PolyZ p;
  for (auto v : c) p.push_back(big_int(v));
  normalize(p);
  return p;
}

// random unimodular matrix as a product of elementary shears (test-local)
IntMatrix random_unimodular(int d, CounterRng& rng, int steps, long long max_entry) {
  for (;;) {
    std::vector<big_int> m(std::size_t(d) * d, 0);
    for (int i = 0; i < d; ++i) m[std::size_t(i) * d + i] = 1;
    for (int s = 0; s < steps; ++s) {
      int i = int(rng.next_below(std::uint64_t(d)));
      int j = int(rng.next_below(std::uint64_t(d - 1)));
      if (j >= i) ++j;
      long long c = 1 + long(rng.next_below(3));
      if (rng.next_unit() < 0.5) c = -c;
      for (int k = 0; k < d; ++k) m[std::size_t(i) * d + k] += big_int(c) * m[std::size_t(j) * d + k];
    }
    big_int mx = 0;
    for (const auto& e : m)
      if (abs(e) > mx) mx = abs(e);
    if (mx > max_entry) continue;
    auto mm = IntMatrix::try_make(d, m);
    if (mm && !(*mm == IntMatrix::identity(d))) return *mm;
  }
}

}  // namespace

TEST_CASE("charpoly matches hand formulas") {
  CHECK(charpoly(cat_map()).coeffs == P({1, -3, 1}));
  CHECK(charpoly(IntMatrix::identity(3)).coeffs == P({-1, 3, -3, 1}));
  CHECK(charpoly(blockdiag_cat_cat()).coeffs == P({1, -6, 11, -6, 1}));
}

TEST_CASE("charpoly satisfies Cayley-Hamilton exactly") {
  CounterRng rng(7101, 0);
  for (int trial = 0; trial < 24; ++trial) {
    int d = 2 + int(rng.next_below(3));
    IntMatrix m = random_unimodular(d, rng, 8, 1000000);
    CharPoly p = charpoly(m);
    CHECK(p.coeffs.size() == std::size_t(d) + 1);
    CHECK(p.coeffs.back() == 1);
    // evaluate p at m by Horner in the matrix algebra
    std::vector<big_int> acc(std::size_t(d) * d, 0);
    for (int i = 0; i < d; ++i) acc[std::size_t(i) * d + i] = p.coeffs.back();
    for (int k = d - 1; k >= 0; --k) {
      std::vector<big_int> next(std::size_t(d) * d, 0);
      for (int i = 0; i < d; ++i)
        for (int kk = 0; kk < d; ++kk)
          for (int j = 0; j < d; ++j)
            next[std::size_t(i) * d + j] += acc[std::size_t(i) * d + kk] * m.at(kk, j);
      for (int i = 0; i < d; ++i) next[std::size_t(i) * d + i] += p.coeffs[std::size_t(k)];
      acc = std::move(next);
    }
    for (const auto& v : acc) CHECK(v == 0);
  }
}

TEST_CASE("power_charpoly") {
  CHECK(power_charpoly(cat_map(), 1).coeffs == P({1, -3, 1}));
  CHECK(power_charpoly(cat_map(), 2).coeffs == P({1, -7, 1}));
  CHECK(power_charpoly(cat_map(), 4).coeffs == P({1, -47, 1}));
  CHECK(power_charpoly(IntMatrix::identity(3), 4).coeffs == P({-1, 3, -3, 1}));
}

TEST_CASE("irreducibility: pinned examples") {
  CHECK(is_irreducible_poly(P({1, -3, 1})));
  CHECK_FALSE(is_irreducible_poly(P({1, -6, 11, -6, 1})));
  CHECK(is_irreducible_poly(P({-1, 0, 0, -1, 1})));  // t^4 - t^3 - 1
  CHECK(is_irreducible_poly(P({1, -2, 0, -2, 1})));
  CHECK(is_irreducible_poly(P({1, -1, 3, -1, 1})));
  // degree cap
  PolyZ big(14, big_int(0));
  big[0] = 1;
  big[13] = 1;
  CHECK_THROWS_AS(is_irreducible_poly(big), capacity_error);
}

TEST_CASE("irreducibility agrees with the independent oracle") {
  CounterRng rng(20260810, 1);
  int checked = 0;
  while (checked < 160) {
    int d = 2 + int(rng.next_below(5));  // degrees 2..6
    PolyZ p(std::size_t(d) + 1);
    for (int i = 0; i < d; ++i) p[std::size_t(i)] = big_int(int(rng.next_below(11)) - 5);
    p[std::size_t(d)] = 1;
    if (p[0] == 0) continue;
    CHECK(is_irreducible_poly(p) == toruslab_test::oracle_is_irreducible(p));
    ++checked;
  }
  // a few structured reducibles
  CHECK(is_irreducible_poly(poly_mul(P({1, -3, 1}), P({1, 3, 1}))) ==
        toruslab_test::oracle_is_irreducible(poly_mul(P({1, -3, 1}), P({1, 3, 1}))));
}

TEST_CASE("forbidden pair detection") {
  // (t^2-3t+1)(t^2+3t+1) has lambda,-lambda pairs
  PolyZ pm = poly_mul(P({1, -3, 1}), P({1, 3, 1}));
  CHECK(has_plus_minus_pair(pm));
  CHECK_FALSE(has_plus_minus_pair(P({1, -3, 1})));
  // t^4 - t^2 - 1: roots +-1.2720 and +-0.7862 i -> both kinds
  CHECK(has_plus_minus_pair(P({-1, 0, -1, 0, 1})));
  CHECK(has_imaginary_pair(P({-1, 0, -1, 0, 1})));
  CHECK_FALSE(has_imaginary_pair(P({1, -3, 1})));
  CHECK_FALSE(has_imaginary_pair(P({1, -2, 0, -2, 1})));
  // t^2 + 1: purely imaginary pair
  CHECK(has_imaginary_pair(P({1, 0, 1})));
}

TEST_CASE("spectrum: cat map") {
  SpectrumReport s = spectrum(cat_map(), 106);
  REQUIRE(s.eigenvalues.size() == 2);
  CHECK(s.classes.size() == 2);
  CHECK(s.unit_circle_count == 0);
  // (3 +- sqrt 5)/2
  double lo = to_double(s.classes[0].modulus);
  double hi = to_double(s.classes[1].modulus);
  CHECK(lo == doctest::Approx(0.3819660112501051).epsilon(1e-12));
  CHECK(hi == doctest::Approx(2.618033988749895).epsilon(1e-12));
  CHECK(to_double(s.certified_gap) == doctest::Approx(hi - lo).epsilon(1e-9));
}

TEST_CASE("spectrum: partially hyperbolic quartic has exactly two on the circle") {
  SpectrumReport s = spectrum(companion({1, -2, 0, -2, 1}), 106);
  CHECK(s.unit_circle_count == 2);
  int on = 0;
  for (const auto& e : s.eigenvalues) {
    if (e.on_unit_circle) ++on;
  }
  CHECK(on == 2);
  // real pair (1+sqrt3 +- sqrt(2sqrt3))/2
  bool has_2296 = false, has_0435 = false;
  for (const auto& e : s.eigenvalues) {
    double m = to_double(e.modulus);
    if (std::abs(m - 2.2966302628865375) < 1e-9) has_2296 = true;
    if (std::abs(m - 0.4354205446823394) < 1e-9) has_0435 = true;
  }
  CHECK(has_2296);
  CHECK(has_0435);
}

TEST_CASE("spectrum: repeated factors and identity") {
  SpectrumReport s = spectrum(blockdiag_cat_cat(), 106);
  CHECK(s.classes.size() == 2);
  CHECK(s.classes[0].multiplicity == 2);
  CHECK(s.classes[1].multiplicity == 2);
  CHECK(s.unit_circle_count == 0);

  SpectrumReport id = spectrum(IntMatrix::identity(2), 106);
  CHECK(id.classes.size() == 1);
  CHECK(id.classes[0].multiplicity == 2);
  CHECK(id.unit_circle_count == 2);
}

TEST_CASE("spectrum: modulus product is unimodular") {
  CounterRng rng(42, 3);
  for (int trial = 0; trial < 12; ++trial) {
    int d = 2 + int(rng.next_below(3));
    IntMatrix m = random_unimodular(d, rng, 10, 1000000);
    SpectrumReport s = spectrum(m, 106);
    ext_real prod = 1;
    for (const auto& e : s.eigenvalues)
      for (int k = 0; k < e.multiplicity; ++k) prod *= e.modulus;
    CHECK(abs(prod - 1) < ldexp(ext_real(1), -60));
  }
}

TEST_CASE("check_hypotheses: the three pinned verdicts") {
  HypothesisReport cat = check_hypotheses(cat_map());
  CHECK(cat.verdict == Verdict::thm1_eligible);
  CHECK(cat.irreducible);
  CHECK(cat.l4_irreducible);
  CHECK(cat.hyperbolic);
  CHECK(cat.no_three_same_modulus);
  CHECK(cat.remark1_consistent);

  HypothesisReport bd = check_hypotheses(blockdiag_cat_cat());
  CHECK(bd.verdict == Verdict::neither);
  CHECK_FALSE(bd.irreducible);
  CHECK(bd.failure_reason == "reducible");

  HypothesisReport ph = check_hypotheses(companion({1, -2, 0, -2, 1}));
  CHECK(ph.verdict == Verdict::thm2_eligible);
  CHECK(ph.totally_irreducible);
  CHECK(ph.two_on_circle);
  CHECK(ph.real_simple_off_circle);
  CHECK(ph.spec.unit_circle_count == 2);
}

TEST_CASE("check_hypotheses: conformal quartic preset is thm1-eligible") {
  HypothesisReport r = check_hypotheses(companion({1, -1, 3, -1, 1}));
  CHECK(r.verdict == Verdict::thm1_eligible);
  CHECK(r.spec.classes.size() == 2);
  CHECK(r.spec.classes[0].multiplicity == 2);
  CHECK(r.spec.classes[1].multiplicity == 2);
}

TEST_CASE("remark-1 consistency on random d=4 unimodular matrices") {
  CounterRng rng(99101, 7);
  for (int trial = 0; trial < 250; ++trial) {
    IntMatrix m = random_unimodular(4, rng, 20, 100);
    HypothesisReport r = check_hypotheses(m);
    CHECK(r.remark1_consistent);
    // exact characterization, valid with no exceptions: L^4 stays irreducible
    // iff no +-pair collapses chi at the squaring steps L -> L^2 -> L^4
    bool l2_irr = r.irreducible && !has_plus_minus_pair(r.chi.coeffs);
    bool l4_exact = l2_irr && !has_plus_minus_pair(power_charpoly(m, 2).coeffs);
    CHECK(r.l4_irreducible == l4_exact);
  }
}

TEST_CASE("remark-1 equivalence has genuine exceptions: the arg pi/4 family") {
  // lambda = i * conj(lambda): conjugates collide at the 4th power while no
  // lambda,-lambda or i*lambda,-i*lambda pair exists in chi itself
  IntMatrix m(4, {big_int(1), big_int(0), big_int(-1), big_int(0),
                  big_int(-1), big_int(1), big_int(-1), big_int(-4),
                  big_int(0), big_int(0), big_int(1), big_int(2),
                  big_int(3), big_int(-1), big_int(-3), big_int(1)});
  HypothesisReport r = check_hypotheses(m);
  PolyZ expected{big_int(1), big_int(-4), big_int(8), big_int(-4), big_int(1)};
  CHECK(r.chi.coeffs == expected);
  CHECK(r.irreducible);
  CHECK_FALSE(r.forbidden_pairs_present);
  CHECK_FALSE(r.l4_irreducible);   // chi_{L^4} = (t^2 + 34t + 1)^2
  CHECK_FALSE(r.remark1_consistent);  // reported honestly
  // the squared-step detector does catch it
  CHECK(has_plus_minus_pair(power_charpoly(m, 2).coeffs));
}

TEST_CASE("periodic counts for the cat map") {
  CHECK(periodic_count(cat_map(), 1) == 1);
  CHECK(periodic_count(cat_map(), 2) == 5);
  CHECK(periodic_count(cat_map(), 3) == 16);
  CHECK_THROWS_AS(periodic_count(IntMatrix::identity(2), 1), degenerate_error);
}

TEST_CASE("periodic points enumerate exactly") {
  auto p1 = periodic_points(cat_map(), 1);
  REQUIRE(p1.size() == 1);
  CHECK(p1[0][0] == 0);
  CHECK(p1[0][1] == 0);

  auto p2 = periodic_points(cat_map(), 2);
  CHECK(p2.size() == 5);
  // all satisfy L^2 x = x mod 1
  IntMatrix L2 = cat_map().pow(2);
  for (const auto& x : p2) {
    for (int i = 0; i < 2; ++i) {
      big_rat y = big_rat(L2.at(i, 0)) * x[0] + big_rat(L2.at(i, 1)) * x[1] - x[std::size_t(i)];
      CHECK(denominator(y) == 1);
    }
  }
  for (int n = 1; n <= 4; ++n)
    CHECK(big_int(periodic_points(cat_map(), n).size()) == periodic_count(cat_map(), n));
}

TEST_CASE("capacity and degenerate errors") {
  CHECK_THROWS_AS(periodic_points(cat_map(), 40, big_int(100)), capacity_error);
  CHECK_THROWS_AS(spectrum(cat_map(), 99), std::invalid_argument);
}
