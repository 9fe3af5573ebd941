#include <doctest.h>

#include "oracle_factor.hpp"
#include "toruslab/polynomial.hpp"

using namespace toruslab;
using namespace toruslab::algebra;

namespace {
PolyZ P(std::initializer_list<long long> coeffs_low_to_high) {
  PolyZ p;
  for (auto c : coeffs_low_to_high) p.push_back(big_int(c));
  normalize(p);
  return p;
}
}  // namespace

TEST_CASE("polynomial arithmetic basics") {
  PolyZ a = P({1, -3, 1});       // t^2 - 3t + 1
  PolyZ b = P({-1, 1});          // t - 1
  CHECK(degree(a) == 2);
  CHECK(poly_eval(a, big_int(1)) == -1);
  CHECK(poly_eval(a, big_int(-1)) == 5);
  PolyZ prod = poly_mul(a, a);
  CHECK(prod == P({1, -6, 11, -6, 1}));
  PolyZ q;
  CHECK(try_div_exact(prod, a, &q));
  CHECK(q == a);
  CHECK_FALSE(try_div_exact(a, b, nullptr));
}

TEST_CASE("gcd and squarefree decomposition") {
  PolyZ a = P({1, -3, 1});
  PolyZ sq = poly_mul(a, a);
  PolyZ g = poly_gcd(sq, poly_derivative(sq));
  CHECK(g == a);

  auto dec = squarefree_decomposition(poly_mul(sq, P({-1, 1})));
  // (t-1) * (t^2-3t+1)^2
  CHECK(dec.size() == 2);
  CHECK(dec[0].multiplicity == 1);
  CHECK(dec[0].factor == P({-1, 1}));
  CHECK(dec[1].multiplicity == 2);
  CHECK(dec[1].factor == a);
}

TEST_CASE("sturm real-root counting") {
  CHECK(sturm_count_real(P({1, -3, 1})) == 2);
  CHECK(sturm_count_real(P({1, 0, 1})) == 0);          // t^2 + 1
  CHECK(sturm_count_real(P({-2, 0, 1})) == 2);         // t^2 - 2
  CHECK(sturm_count_open(P({-2, 0, 1}), big_rat(0), big_rat(2)) == 1);
  CHECK(sturm_count_open(P({-2, 0, 1}), big_rat(-1), big_rat(1)) == 0);
  // quartic with 4 real roots: (t^2-2)(t^2-3)
  CHECK(sturm_count_real(poly_mul(P({-2, 0, 1}), P({-3, 0, 1}))) == 4);
}

TEST_CASE("unit circle root count") {
  // cat-map polynomial: both roots real, off circle
  CHECK(unit_circle_root_count(P({1, -3, 1})) == 0);
  // t^2 + 1: roots +-i
  CHECK(unit_circle_root_count(P({1, 0, 1})) == 2);
  // t - 1 and (t-1)^2
  CHECK(unit_circle_root_count(P({-1, 1})) == 1);
  CHECK(unit_circle_root_count(poly_mul(P({-1, 1}), P({-1, 1}))) == 2);
  // Salem-type quartic from the companion preset: exactly 2 on the circle
  CHECK(unit_circle_root_count(P({1, -2, 0, -2, 1})) == 2);
  // conformal quartic: all four roots off the circle
  CHECK(unit_circle_root_count(P({1, -1, 3, -1, 1})) == 0);
  // t^4 + 1: all roots on the circle
  CHECK(unit_circle_root_count(P({1, 0, 0, 0, 1})) == 4);
  // (t^2-3t+1)(t^2+1): mixed
  CHECK(unit_circle_root_count(poly_mul(P({1, -3, 1}), P({1, 0, 1}))) == 2);
}

TEST_CASE("roots of unity detection") {
  CHECK(has_root_of_unity_root(P({-1, 1})));            // t - 1
  CHECK(has_root_of_unity_root(P({1, 1, 1})));          // t^2 + t + 1
  CHECK(has_root_of_unity_root(P({1, 0, 0, 0, 1})));    // t^4 + 1, 8th roots
  CHECK_FALSE(has_root_of_unity_root(P({1, -3, 1})));
  // Salem quartic: circle pair is not a root of unity
  CHECK_FALSE(has_root_of_unity_root(P({1, -2, 0, -2, 1})));
}

TEST_CASE("polynomial in t^n") {
  CHECK(is_polynomial_in_tn(P({1, 0, -3, 0, 1}), 2));        // t^4 - 3t^2 + 1
  CHECK_FALSE(is_polynomial_in_tn(P({1, -2, 0, -2, 1}), 2)); // exponent 3 present
  CHECK_FALSE(is_polynomial_in_tn(P({1, -3, 1}), 2));
}

TEST_CASE("kronecker oracle sanity") {
  using toruslab_test::oracle_is_irreducible;
  CHECK(oracle_is_irreducible(P({1, -3, 1})));
  CHECK_FALSE(oracle_is_irreducible(P({1, -6, 11, -6, 1})));
  CHECK(oracle_is_irreducible(P({-1, 0, 0, -1, 1})));  // t^4 - t^3 - 1
}
