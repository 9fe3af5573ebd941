#include "toruslab/polynomial.hpp"

#include <algorithm>
#include <numeric>

namespace toruslab {
namespace algebra {

int degree(const PolyZ& p) { return int(p.size()) - 1; }
int degree(const PolyQ& p) { return int(p.size()) - 1; }

void normalize(PolyZ& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}
void normalize(PolyQ& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

bool is_monic(const PolyZ& p) { return !p.empty() && p.back() == 1; }

PolyZ poly_add(const PolyZ& a, const PolyZ& b) {
  PolyZ r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] += b[i];
  normalize(r);
  return r;
}

PolyZ poly_sub(const PolyZ& a, const PolyZ& b) {
  PolyZ r(std::max(a.size(), b.size()), 0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  normalize(r);
  return r;
}

PolyZ poly_mul(const PolyZ& a, const PolyZ& b) {
  if (a.empty() || b.empty()) return {};
  PolyZ r(a.size() + b.size() - 1, 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  }
  normalize(r);
  return r;
}

PolyZ poly_neg(PolyZ a) {
  for (auto& c : a) c = -c;
  return a;
}

PolyZ poly_derivative(const PolyZ& p) {
  if (p.size() <= 1) return {};
  PolyZ r(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) r[i - 1] = p[i] * int(i);
  normalize(r);
  return r;
}

big_int poly_eval(const PolyZ& p, const big_int& x) {
  big_int v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

big_rat poly_eval(const PolyZ& p, const big_rat& x) {
  big_rat v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + big_rat(*it);
  return v;
}

PolyZ poly_negate_var(PolyZ p) {
  for (std::size_t i = 1; i < p.size(); i += 2) p[i] = -p[i];
  return p;
}

PolyZ poly_reverse(PolyZ p) {
  std::reverse(p.begin(), p.end());
  normalize(p);
  return p;
}

bool try_div_exact(const PolyZ& p, const PolyZ& g, PolyZ* quotient) {
  // synthetic division by monic g; fails as soon as a remainder appears
  if (g.empty() || g.back() != 1) throw std::invalid_argument("try_div_exact: divisor must be monic");
  int dp = degree(p), dg = degree(g);
  if (dp < dg) return false;
  PolyZ rem = p;
  PolyZ q(std::size_t(dp - dg) + 1, 0);
  for (int k = dp - dg; k >= 0; --k) {
    big_int c = rem[std::size_t(k + dg)];
    q[std::size_t(k)] = c;
    if (c == 0) continue;
    for (int j = 0; j <= dg; ++j) rem[std::size_t(k + j)] -= c * g[std::size_t(j)];
  }
  for (const auto& c : rem)
    if (c != 0) return false;
  if (quotient) {
    normalize(q);
    *quotient = std::move(q);
  }
  return true;
}

void poly_divmod(const PolyQ& a, const PolyQ& b, PolyQ* q, PolyQ* r) {
  if (b.empty()) throw std::invalid_argument("poly_divmod: division by zero polynomial");
  PolyQ rem = a;
  PolyQ quo;
  int db = degree(b);
  if (degree(rem) >= db) quo.assign(std::size_t(degree(rem) - db) + 1, big_rat(0));
  while (degree(rem) >= db) {
    int k = degree(rem) - db;
    big_rat c = rem.back() / b.back();
    quo[std::size_t(k)] = c;
    for (int j = 0; j <= db; ++j) rem[std::size_t(k + j)] -= c * b[std::size_t(j)];
    normalize(rem);
  }
  if (q) *q = std::move(quo);
  if (r) *r = std::move(rem);
}

PolyQ to_poly_q(const PolyZ& p) {
  PolyQ r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = big_rat(p[i]);
  return r;
}

PolyZ primitive_part(const PolyQ& p) {
  if (p.empty()) return {};
  big_int den_lcm = 1;
  for (const auto& c : p) {
    big_int d = denominator(c);
    den_lcm = lcm(den_lcm, d);
  }
  PolyZ z(p.size());
  big_int content = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    big_rat scaled = p[i] * big_rat(den_lcm);
    z[i] = numerator(scaled);
    content = gcd(content, z[i]);
  }
  if (content == 0) return {};
  if (z.back() < 0) content = -content;
  for (auto& c : z) c /= content;
  return z;
}

PolyZ poly_gcd(const PolyZ& a, const PolyZ& b) {
  PolyQ x = to_poly_q(a), y = to_poly_q(b);
  while (!y.empty()) {
    PolyQ r;
    poly_divmod(x, y, nullptr, &r);
    x = std::move(y);
    y = std::move(r);
  }
  return primitive_part(x);
}

namespace {

PolyQ poly_sub_q(const PolyQ& a, const PolyQ& b) {
  PolyQ r(std::max(a.size(), b.size()), big_rat(0));
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  normalize(r);
  return r;
}

PolyQ derivative_q(const PolyQ& p) {
  if (p.size() <= 1) return {};
  PolyQ r(p.size() - 1);
  for (std::size_t i = 1; i < p.size(); ++i) r[i - 1] = p[i] * big_rat(int(i));
  normalize(r);
  return r;
}

}  // namespace

std::vector<SquarefreeFactor> squarefree_decomposition(const PolyZ& p) {
  if (degree(p) < 1) throw std::invalid_argument("squarefree_decomposition: degree must be >= 1");
  std::vector<SquarefreeFactor> out;
  PolyZ dp = poly_derivative(p);
  PolyZ g = poly_gcd(p, dp);
  if (degree(g) == 0) {
    PolyQ mono = to_poly_q(p);
    out.push_back({primitive_part(mono), 1});
    return out;
  }
  // Yun's algorithm over Q, primitivized at the end of each step
  PolyQ pq = to_poly_q(p), gq = to_poly_q(g);
  PolyQ w, y;
  poly_divmod(pq, gq, &w, nullptr);
  poly_divmod(to_poly_q(dp), gq, &y, nullptr);
  PolyQ z = poly_sub_q(y, derivative_q(w));
  int i = 1;
  while (degree(w) > 0) {
    PolyZ wz = primitive_part(w);
    PolyZ zz = primitive_part(z);
    PolyZ ai = zz.empty() ? wz : poly_gcd(wz, zz);
    if (degree(ai) > 0) out.push_back({ai, i});
    PolyQ aq = to_poly_q(ai), w2, y2;
    poly_divmod(w, aq, &w2, nullptr);
    poly_divmod(z, aq, &y2, nullptr);
    w = std::move(w2);
    z = poly_sub_q(y2, derivative_q(w));
    ++i;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Sturm chains (rational arithmetic)

namespace {

std::vector<PolyQ> sturm_chain(const PolyZ& p) {
  std::vector<PolyQ> chain;
  chain.push_back(to_poly_q(p));
  chain.push_back(to_poly_q(poly_derivative(p)));
  while (!chain.back().empty() && degree(chain.back()) >= 0) {
    PolyQ r;
    poly_divmod(chain[chain.size() - 2], chain.back(), nullptr, &r);
    if (r.empty()) break;
    for (auto& c : r) c = -c;
    chain.push_back(std::move(r));
    if (degree(chain.back()) == 0) break;
  }
  return chain;
}

int sign_of(const big_rat& x) { return x > 0 ? 1 : (x < 0 ? -1 : 0); }

big_rat eval_q(const PolyQ& p, const big_rat& x) {
  big_rat v = 0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) v = v * x + *it;
  return v;
}

int sign_changes_at(const std::vector<PolyQ>& chain, const big_rat& x) {
  int changes = 0, prev = 0;
  for (const auto& q : chain) {
    if (q.empty()) continue;
    int s = sign_of(eval_q(q, x));
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  return changes;
}

int sign_changes_at_infinity(const std::vector<PolyQ>& chain, bool positive) {
  int changes = 0, prev = 0;
  for (const auto& q : chain) {
    if (q.empty()) continue;
    int s = sign_of(q.back());
    if (!positive && (degree(q) & 1)) s = -s;
    if (s == 0) continue;
    if (prev != 0 && s != prev) ++changes;
    prev = s;
  }
  return changes;
}

}  // namespace

int sturm_count_open(const PolyZ& p, const big_rat& a, const big_rat& b) {
  if (degree(p) < 1) return 0;
  if (poly_eval(p, a) == 0 || poly_eval(p, b) == 0)
    throw std::invalid_argument("sturm_count_open: endpoint is a root");
  auto chain = sturm_chain(p);
  return sign_changes_at(chain, a) - sign_changes_at(chain, b);
}

int sturm_count_real(const PolyZ& p) {
  if (degree(p) < 1) return 0;
  auto chain = sturm_chain(p);
  return sign_changes_at_infinity(chain, false) - sign_changes_at_infinity(chain, true);
}

// ---------------------------------------------------------------------------
// Unit-circle root count.
//
// Circle roots of q are roots of r = gcd(q, reverse(q)); after stripping
// t = 1 and t = -1, r is palindromic of even degree and factors through
// s = t + 1/t.  Roots of r on the circle correspond exactly to real roots
// of the reduced polynomial G(s) in (-2, 2).

namespace {

// G(s) with r(t) = t^m G(t + 1/t) for palindromic r of degree 2m
PolyZ chebyshev_reduce(const PolyZ& r) {
  int m = degree(r) / 2;
  // c_k(s) = t^k + t^{-k}:  c_0 = 2, c_1 = s, c_{k+1} = s c_k - c_{k-1}
  std::vector<PolyZ> c(std::size_t(m) + 1);
  c[0] = PolyZ{2};
  if (m >= 1) c[1] = PolyZ{0, 1};
  for (int k = 2; k <= m; ++k) {
    PolyZ shifted(c[std::size_t(k - 1)].size() + 1, 0);
    for (std::size_t i = 0; i < c[std::size_t(k - 1)].size(); ++i)
      shifted[i + 1] = c[std::size_t(k - 1)][i];
    c[std::size_t(k)] = poly_sub(shifted, c[std::size_t(k - 2)]);
  }
  PolyZ g{r[std::size_t(m)]};
  for (int k = 1; k <= m; ++k) {
    PolyZ term = c[std::size_t(k)];
    for (auto& t : term) t *= r[std::size_t(m + k)];
    g = poly_add(g, term);
  }
  return g;
}

int circle_count_squarefree(PolyZ q) {
  int count = 0;
  // strip roots at t = +-1
  const PolyZ lin_p1 = {big_int(-1), big_int(1)};  // t - 1
  const PolyZ lin_m1 = {big_int(1), big_int(1)};   // t + 1
  PolyZ quo;
  while (degree(q) >= 1 && poly_eval(q, big_int(1)) == 0) {
    try_div_exact(q, lin_p1, &quo);
    q = quo;
    ++count;
  }
  while (degree(q) >= 1 && poly_eval(q, big_int(-1)) == 0) {
    try_div_exact(q, lin_m1, &quo);
    q = quo;
    ++count;
  }
  if (degree(q) < 1) return count;
  PolyZ r = poly_gcd(q, poly_reverse(q));
  if (degree(r) < 1) return count;
  // r must be palindromic here: its roots are closed under inversion and
  // t = +-1 have been removed, so an anti-palindromic r would vanish at 1
  PolyZ rr = poly_reverse(r);
  if (rr != r) throw std::logic_error("circle_count: gcd with reverse not palindromic");
  PolyZ g = chebyshev_reduce(r);
  count += 2 * sturm_count_open(g, big_rat(-2), big_rat(2));
  return count;
}

}  // namespace

int unit_circle_root_count(const PolyZ& p) {
  if (degree(p) < 1) return 0;
  int total = 0;
  for (const auto& f : squarefree_decomposition(p))
    total += f.multiplicity * circle_count_squarefree(f.factor);
  return total;
}

bool has_root_of_unity_root(const PolyZ& p) {
  int d = degree(p);
  if (d < 1) return false;
  // all cyclotomic divisors have degree phi(n) <= d; phi(n) > sqrt(n)/2
  // for n > 6, so scanning n up to 4(d+1)^2 + 6 is exhaustive
  int n_max = 4 * (d + 1) * (d + 1) + 6;
  for (int n = 1; n <= n_max; ++n) {
    // phi(n)
    int phi = n, m = n;
    for (int q = 2; q * q <= m; ++q)
      if (m % q == 0) {
        phi -= phi / q;
        while (m % q == 0) m /= q;
      }
    if (m > 1) phi -= phi / m;
    if (phi > d) continue;
    PolyZ cyc(std::size_t(n) + 1, 0);  // t^n - 1
    cyc[0] = -1;
    cyc[std::size_t(n)] = 1;
    if (degree(poly_gcd(p, cyc)) > 0) return true;
  }
  return false;
}

bool is_polynomial_in_tn(const PolyZ& p, int n) {
  if (n < 2) throw std::invalid_argument("is_polynomial_in_tn: n must be >= 2");
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] != 0 && int(i) % n != 0) return false;
  return true;
}

big_int coeff_l2_ceiling(const PolyZ& p) {
  big_int s = 0;
  for (const auto& c : p) s += c * c;
  big_int r = sqrt(s);
  if (r * r < s) ++r;
  return r;
}

}  // namespace algebra
}  // namespace toruslab
