#pragma once

// Exact univariate polynomial arithmetic over Z and Q at desk-scale degrees.
// Everything here is exact: gcds, squarefree split, Sturm counts, and the
// unit-circle root count via the reciprocal pairing t + 1/t.

#include <utility>
#include <vector>

#include "toruslab/intmatrix.hpp"

namespace toruslab {
namespace algebra {

// coefficients low -> high, no trailing zero (zero polynomial = empty vector)
using PolyZ = std::vector<big_int>;
using PolyQ = std::vector<big_rat>;

int degree(const PolyZ& p);
int degree(const PolyQ& p);
void normalize(PolyZ& p);
void normalize(PolyQ& p);
bool is_monic(const PolyZ& p);

PolyZ poly_add(const PolyZ& a, const PolyZ& b);
PolyZ poly_sub(const PolyZ& a, const PolyZ& b);
PolyZ poly_mul(const PolyZ& a, const PolyZ& b);
PolyZ poly_neg(PolyZ a);
PolyZ poly_derivative(const PolyZ& p);
big_int poly_eval(const PolyZ& p, const big_int& x);
big_rat poly_eval(const PolyZ& p, const big_rat& x);

// p(-t) and the reciprocal polynomial t^deg * p(1/t)
PolyZ poly_negate_var(PolyZ p);
PolyZ poly_reverse(PolyZ p);

// quotient of p by monic divisor g when the division is exact over Z
bool try_div_exact(const PolyZ& p, const PolyZ& g, PolyZ* quotient);

// rational division with remainder (g != 0)
void poly_divmod(const PolyQ& a, const PolyQ& b, PolyQ* q, PolyQ* r);

PolyQ to_poly_q(const PolyZ& p);
// clears denominators and divides by content; leading coefficient > 0
PolyZ primitive_part(const PolyQ& p);

// gcd over Q, returned as a primitive integer polynomial with positive lead
PolyZ poly_gcd(const PolyZ& a, const PolyZ& b);

// Yun squarefree decomposition: p = prod f_i^{m_i} (f_i squarefree, pairwise
// coprime, primitive, positive lead).  Requires deg p >= 1.
struct SquarefreeFactor {
  PolyZ factor;
  int multiplicity;
};
std::vector<SquarefreeFactor> squarefree_decomposition(const PolyZ& p);

// distinct real roots of p in the open interval (a, b); requires p(a), p(b) != 0
int sturm_count_open(const PolyZ& p, const big_rat& a, const big_rat& b);
// distinct real roots on the whole line
int sturm_count_real(const PolyZ& p);

// number of roots on the unit circle, counted with multiplicity; exact
int unit_circle_root_count(const PolyZ& p);

// true iff some root is a root of unity (exact; bounded cyclotomic sweep)
bool has_root_of_unity_root(const PolyZ& p);

// true iff every exponent with nonzero coefficient is divisible by n
bool is_polynomial_in_tn(const PolyZ& p, int n);

// ceil of the 2-norm of the coefficient vector (Mignotte-style factor bound)
big_int coeff_l2_ceiling(const PolyZ& p);

}  // namespace algebra
}  // namespace toruslab
