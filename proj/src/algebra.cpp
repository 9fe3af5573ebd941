#include "toruslab/algebra.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace toruslab {
namespace algebra {

CharPoly charpoly(const IntMatrix& m) {
  // Faddeev-LeVerrier: M_1 = A, c_{d-1} = -tr M_1,
  // M_k = A (M_{k-1} + c_{d-k+1} I), c_{d-k} = -tr(M_k)/k.
  // All divisions are exact for integer matrices.
  const int d = m.dim();
  std::vector<big_int> coeffs(std::size_t(d) + 1, 0);
  coeffs[std::size_t(d)] = 1;
  std::vector<big_int> mk = m.entries();
  big_int c = 0;
  for (int i = 0; i < d; ++i) c -= mk[std::size_t(i) * d + i];
  coeffs[std::size_t(d - 1)] = c;
  for (int k = 2; k <= d; ++k) {
    // mk <- A * (mk + c I)
    for (int i = 0; i < d; ++i) mk[std::size_t(i) * d + i] += c;
    std::vector<big_int> next(std::size_t(d) * d, 0);
    for (int i = 0; i < d; ++i)
      for (int kk = 0; kk < d; ++kk) {
        const big_int& aik = m.at(i, kk);
        if (aik == 0) continue;
        for (int j = 0; j < d; ++j) next[std::size_t(i) * d + j] += aik * mk[std::size_t(kk) * d + j];
      }
    big_int tr = 0;
    for (int i = 0; i < d; ++i) tr += next[std::size_t(i) * d + i];
    if (tr % k != 0) throw std::logic_error("charpoly: non-exact division in trace recursion");
    c = -tr / k;
    coeffs[std::size_t(d - k)] = c;
    mk = std::move(next);
  }
  CharPoly p;
  p.dim = d;
  p.coeffs = std::move(coeffs);
  return p;
}

CharPoly power_charpoly(const IntMatrix& m, int k) {
  if (k < 1) throw std::invalid_argument("power_charpoly: k must be >= 1");
  return charpoly(m.pow(k));
}

bool is_poly_in_tn(const CharPoly& p, int n) { return is_polynomial_in_tn(p.coeffs, n); }

bool has_plus_minus_pair(const PolyZ& p) {
  return degree(poly_gcd(p, poly_negate_var(p))) > 0;
}

bool has_imaginary_pair(const PolyZ& p) {
  // p(t) = A(t^2) + t B(t^2); a purely imaginary pair +-(i mu) exists iff
  // A and B share a real root s = -mu^2 < 0
  PolyZ a, b;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i % 2 == 0)
      a.push_back(p[i]);
    else
      b.push_back(p[i]);
  }
  normalize(a);
  normalize(b);
  PolyZ g = b.empty() ? a : (a.empty() ? b : poly_gcd(a, b));
  // strip a root at s = 0 (would mean t = 0, impossible for unit det)
  while (!g.empty() && g[0] == 0) g.erase(g.begin());
  if (degree(g) < 1) return false;
  big_int m = 0;
  for (const auto& c : g)
    if (abs(c) > m) m = abs(c);
  big_rat lo = -(big_rat(m) + 1);
  return sturm_count_open(g, lo, big_rat(0)) > 0;
}

// ---------------------------------------------------------------------------
// Irreducibility by bounded exhaustive divisor search

namespace {

std::vector<big_int> signed_divisors(const big_int& n0) {
  big_int n = abs(n0);
  if (n == 0) return {};
  if (n > big_int("1000000000000"))
    throw capacity_error("is_irreducible: constant term too large for exact divisor search");
  std::vector<big_int> divs;
  for (big_int i = 1; i * i <= n; ++i) {
    if (n % i == 0) {
      divs.push_back(i);
      if (i * i != n) divs.push_back(n / i);
    }
  }
  std::size_t k = divs.size();
  for (std::size_t i = 0; i < k; ++i) divs.push_back(-divs[i]);
  std::sort(divs.begin(), divs.end());
  return divs;
}

bool has_integer_root(const PolyZ& p) {
  for (const auto& r : signed_divisors(p[0]))
    if (poly_eval(p, r) == 0) return true;
  return false;
}

big_int binomial(int n, int k) {
  big_int r = 1;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return r;
}

bool is_perfect_square(const big_int& n, big_int* root) {
  if (n < 0) return false;
  big_int r = sqrt(n);
  if (r * r == n) {
    if (root) *root = r;
    return true;
  }
  if ((r + 1) * (r + 1) == n) {
    if (root) *root = r + 1;
    return true;
  }
  return false;
}

// quartic into two monic quadratics, closed form over divisor pairs of c0
bool quartic_has_quadratic_factor(const PolyZ& p) {
  const big_int &c0 = p[0], &c1 = p[1], &c2 = p[2], &c3 = p[3];
  for (const auto& b : signed_divisors(c0)) {
    if (c0 % b != 0) continue;
    big_int d = c0 / b;
    big_int s = c2 - b - d;           // a*c
    big_int disc = c3 * c3 - 4 * s;   // (a-c)^2
    big_int sq;
    if (!is_perfect_square(disc, &sq)) continue;
    for (int sign = -1; sign <= 1; sign += 2) {
      big_int num = c3 + sign * sq;
      if (num % 2 != 0) continue;
      big_int a = num / 2;
      big_int c = c3 - a;
      if (a * d + b * c == c1) return true;
    }
  }
  return false;
}

// exhaustive monic divisor candidates of degree k, Mignotte-bounded, with
// g(0) | p(0), g(1) | p(1), g(-1) | p(-1) pruning
bool has_monic_factor_of_degree(const PolyZ& p, int k) {
  const big_int bound_norm = coeff_l2_ceiling(p);
  const big_int p1 = poly_eval(p, big_int(1));
  const big_int pm1 = poly_eval(p, big_int(-1));
  std::vector<big_int> divs0 = signed_divisors(p[0]);

  std::vector<big_int> bounds(static_cast<std::size_t>(k));   // bounds[j] for coefficient b_j, j = 1..k-1
  big_int total = divs0.size();
  for (int j = 1; j < k; ++j) {
    bounds[std::size_t(j)] = binomial(k, j) * bound_norm;
    total *= 2 * bounds[std::size_t(j)] + 1;
    if (total > big_int("200000000"))
      throw capacity_error("is_irreducible: divisor search space too large at degree " +
                           std::to_string(degree(p)));
  }

  PolyZ g(std::size_t(k) + 1, 0);
  g[std::size_t(k)] = 1;

  // recurse over coefficients b_{k-1} ... b_1, then b_0 over divisors of c_0
  std::function<bool(int)> rec = [&](int j) -> bool {
    if (j == 0) {
      for (const auto& b0 : divs0) {
        g[0] = b0;
        big_int g1 = poly_eval(g, big_int(1));
        if (g1 == 0 || p1 % g1 != 0) continue;
        big_int gm1 = poly_eval(g, big_int(-1));
        if (gm1 == 0 || pm1 % gm1 != 0) continue;
        if (try_div_exact(p, g, nullptr)) return true;
      }
      return false;
    }
    const big_int& B = bounds[std::size_t(j)];
    for (big_int b = -B; b <= B; ++b) {
      g[std::size_t(j)] = b;
      if (rec(j - 1)) return true;
    }
    g[std::size_t(j)] = 0;
    return false;
  };
  return rec(k - 1);
}

}  // namespace

bool is_irreducible_poly(const PolyZ& p) {
  int d = degree(p);
  if (d > 12) throw capacity_error("is_irreducible: degree " + std::to_string(d) + " exceeds 12");
  if (!is_monic(p)) throw std::invalid_argument("is_irreducible: polynomial must be monic");
  if (d <= 0) return false;
  if (d == 1) return true;
  if (p[0] == 0) return false;  // t divides
  if (has_integer_root(p)) return false;
  for (int k = 2; k <= d / 2; ++k) {
    if (d == 4 && k == 2) {
      if (quartic_has_quadratic_factor(p)) return false;
    } else if (has_monic_factor_of_degree(p, k)) {
      return false;
    }
  }
  return true;
}

bool is_irreducible(const CharPoly& p) { return is_irreducible_poly(p.coeffs); }

// ---------------------------------------------------------------------------

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::thm1_eligible: return "thm1-eligible";
    case Verdict::thm2_eligible: return "thm2-eligible";
    default: return "neither";
  }
}

HypothesisReport check_hypotheses(const IntMatrix& m, int precision_bits) {
  HypothesisReport r;
  r.chi = charpoly(m);
  r.chi4 = power_charpoly(m, 4);
  r.irreducible = is_irreducible_poly(r.chi.coeffs);
  r.l4_irreducible = is_irreducible_poly(r.chi4.coeffs);
  r.forbidden_pairs_present = has_plus_minus_pair(r.chi.coeffs) || has_imaginary_pair(r.chi.coeffs);
  r.remark1_consistent = (r.l4_irreducible == (r.irreducible && !r.forbidden_pairs_present));

  r.spec = spectrum(m, precision_bits);
  r.hyperbolic = (r.spec.unit_circle_count == 0);
  r.no_three_same_modulus = true;
  for (const auto& c : r.spec.classes)
    if (c.multiplicity > 2) r.no_three_same_modulus = false;

  bool squarefree = true;
  int distinct_real = sturm_count_real(r.chi.coeffs);
  for (const auto& b : r.spec.eigenvalues)
    if (b.multiplicity > 1) squarefree = false;

  r.two_on_circle = (r.spec.unit_circle_count == 2);
  r.real_simple_off_circle =
      squarefree && (distinct_real == r.chi.dim - r.spec.unit_circle_count);

  if (r.irreducible) {
    bool rou = r.hyperbolic ? false : has_root_of_unity_root(r.chi.coeffs);
    bool power_of_tn = false;
    for (int n = 2; n <= r.chi.dim && !power_of_tn; ++n)
      if (is_polynomial_in_tn(r.chi.coeffs, n)) power_of_tn = true;
    r.totally_irreducible = !rou && !power_of_tn;
  }

  if (r.hyperbolic && r.l4_irreducible && r.no_three_same_modulus) {
    r.verdict = Verdict::thm1_eligible;
  } else if (r.totally_irreducible && r.two_on_circle && r.real_simple_off_circle) {
    r.verdict = Verdict::thm2_eligible;
  } else {
    r.verdict = Verdict::neither;
    // first failed check, in the documented survey order
    if (!r.hyperbolic)
      r.failure_reason = "non-hyperbolic";
    else if (!r.irreducible)
      r.failure_reason = "reducible";
    else if (!r.l4_irreducible)
      r.failure_reason = "L4-reducible";
    else
      r.failure_reason = "three-same-modulus";
  }
  return r;
}

// ---------------------------------------------------------------------------

big_int periodic_count(const IntMatrix& m, int n) {
  if (n < 1) throw std::invalid_argument("periodic_count: n must be >= 1");
  IntMatrix mn = m.pow(n);
  std::vector<big_int> b = mn.entries();
  const int d = m.dim();
  for (int i = 0; i < d; ++i) b[std::size_t(i) * d + i] -= 1;
  big_int det = det_exact(d, b);
  if (det == 0) throw degenerate_error("periodic_count: m^n has eigenvalue 1");
  return abs(det);
}

std::vector<std::vector<big_rat>> periodic_points(const IntMatrix& m, int n, const big_int& cap) {
  big_int count = periodic_count(m, n);  // raises degenerate_error if singular
  if (count > cap)
    throw capacity_error("periodic_points: count " + count.str() + " exceeds cap " + cap.str());
  const int d = m.dim();
  IntMatrix mn = m.pow(n);
  std::vector<big_int> b = mn.entries();
  for (int i = 0; i < d; ++i) b[std::size_t(i) * d + i] -= 1;
  SmithForm sf = smith_normal_form(d, std::move(b));

  std::vector<std::vector<big_rat>> points;
  points.reserve(static_cast<std::size_t>(count));
  std::vector<big_int> idx(std::size_t(d), 0);
  for (;;) {
    std::vector<big_rat> x(std::size_t(d), big_rat(0));
    for (int i = 0; i < d; ++i) {
      if (idx[std::size_t(i)] == 0) continue;
      big_rat yi(idx[std::size_t(i)], sf.diag[std::size_t(i)]);
      for (int row = 0; row < d; ++row)
        x[std::size_t(row)] += big_rat(sf.v[std::size_t(row) * d + i]) * yi;
    }
    for (auto& c : x) {
      // reduce into [0,1)
      big_int num = numerator(c), den = denominator(c);
      big_int q = num / den;
      if (num < 0 && q * den != num) --q;
      c -= big_rat(q);
    }
    points.push_back(std::move(x));
    int pos = d - 1;
    while (pos >= 0) {
      idx[std::size_t(pos)] += 1;
      if (idx[std::size_t(pos)] < sf.diag[std::size_t(pos)]) break;
      idx[std::size_t(pos)] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  std::sort(points.begin(), points.end());
  if (big_int(points.size()) != count)
    throw std::logic_error("periodic_points: enumeration does not match determinant count");
  return points;
}

}  // namespace algebra
}  // namespace toruslab
