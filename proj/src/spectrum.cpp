#include <boost/multiprecision/cpp_complex.hpp>

#include <algorithm>
#include <cmath>
#include <map>

#include "toruslab/algebra.hpp"

// Certified spectra.  Roots of each squarefree factor are found by Aberth
// simultaneous iteration at extended precision; every approximation gets an
// a-posteriori radius deg * |p(z)/p'(z)| that contains a true root.  Real
// roots are pinned by an exact Sturm count, conjugate pairs are symmetrized
// exactly, and +-pairs are identified through gcd(p(t), p(-t)).  Unit-circle
// membership falls back to the exact reciprocal pairing when radii straddle 1.

namespace toruslab {
namespace algebra {

namespace {

template <int Digits>
using real_t = mp::number<mp::cpp_bin_float<Digits>, mp::et_on>;
template <int Digits>
using cplx_t = mp::number<mp::complex_adaptor<mp::cpp_bin_float<Digits>>>;

struct BallRaw {
  ext_real re, im, radius;
};

template <int Digits>
cplx_t<Digits> eval_poly(const std::vector<cplx_t<Digits>>& c, const cplx_t<Digits>& z) {
  cplx_t<Digits> v = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * z + *it;
  return v;
}

template <int Digits>
real_t<Digits> eval_poly_real(const std::vector<real_t<Digits>>& c, const real_t<Digits>& x) {
  real_t<Digits> v = 0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * x + *it;
  return v;
}

// roots of one squarefree integer polynomial; false = needs more precision
template <int Digits>
bool aberth_roots(const PolyZ& q, std::vector<BallRaw>* out) {
  using R = real_t<Digits>;
  using C = cplx_t<Digits>;
  const int m = degree(q);
  out->clear();
  if (m == 1) {
    // exact rational root
    big_rat root(-q[0], q[1]);
    BallRaw b;
    b.re = ext_real(numerator(root)) / ext_real(denominator(root));
    b.im = 0;
    b.radius = 0;
    out->push_back(b);
    return true;
  }

  std::vector<C> c(q.size());
  std::vector<R> cr(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    cr[i] = R(q[i]);
    c[i] = C(cr[i]);
  }
  std::vector<C> dc(q.size() - 1);
  std::vector<R> dcr(q.size() - 1);
  for (std::size_t i = 1; i < q.size(); ++i) {
    dcr[i - 1] = cr[i] * int(i);
    dc[i - 1] = C(dcr[i - 1]);
  }

  R lead = abs(cr.back());
  R maxrel = 0;
  for (std::size_t i = 0; i + 1 < cr.size(); ++i) {
    R rel = abs(cr[i]) / lead;
    if (rel > maxrel) maxrel = rel;
  }
  R cauchy = 1 + maxrel;

  // staggered ring of initial guesses, off the real axis
  std::vector<C> z(static_cast<std::size_t>(m));
  for (int j = 0; j < m; ++j) {
    double ang = 2.0 * 3.14159265358979323846 * (j + 0.3173) / m + 0.42;
    double rad = 0.6 + 0.5 * (j % 3) / 3.0;
    z[std::size_t(j)] = C(R(std::cos(ang) * rad) * cauchy, R(std::sin(ang) * rad) * cauchy);
  }

  const R eps = ldexp(R(1), -(std::numeric_limits<R>::digits - 8)) * cauchy;
  bool converged = false;
  for (int iter = 0; iter < 400 && !converged; ++iter) {
    R maxstep = 0;
    for (int i = 0; i < m; ++i) {
      C p = eval_poly<Digits>(c, z[std::size_t(i)]);
      C dp = eval_poly<Digits>(dc, z[std::size_t(i)]);
      if (abs(p) == 0) continue;
      if (abs(dp) == 0) {
        z[std::size_t(i)] += C(eps, eps);
        maxstep = cauchy;
        continue;
      }
      C w = p / dp;
      C s = 0;
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        C diff = z[std::size_t(i)] - z[std::size_t(j)];
        if (abs(diff) == 0) diff = C(eps, eps);
        s += 1 / diff;
      }
      C denom = C(1) - w * s;
      C step = (abs(denom) == 0) ? w : w / denom;
      z[std::size_t(i)] -= step;
      maxstep = std::max(maxstep, R(abs(step)));
    }
    if (maxstep < eps) converged = true;
  }
  if (!converged) return false;

  // exact real-root count pins which approximations are real
  int n_real = sturm_count_real(q);
  std::vector<int> order(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) order[std::size_t(i)] = i;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return abs(imag(z[std::size_t(a)])) < abs(imag(z[std::size_t(b)])); });
  std::vector<bool> real_flag(std::size_t(m), false);
  for (int k = 0; k < n_real; ++k) {
    int i = order[std::size_t(k)];
    real_flag[std::size_t(i)] = true;
    R x = real(z[std::size_t(i)]);
    for (int it = 0; it < 80; ++it) {
      R px = eval_poly_real<Digits>(cr, x);
      R dpx = eval_poly_real<Digits>(dcr, x);
      if (px == 0 || dpx == 0) break;
      R step = px / dpx;
      x -= step;
      if (abs(step) < eps) break;
    }
    z[std::size_t(i)] = C(x);
  }

  // symmetrize conjugate pairs exactly
  std::vector<bool> used(std::size_t(m), false);
  for (int i = 0; i < m; ++i) {
    if (real_flag[std::size_t(i)] || used[std::size_t(i)]) continue;
    if (imag(z[std::size_t(i)]) < 0) continue;
    int best = -1;
    R bestd = 0;
    for (int j = 0; j < m; ++j) {
      if (j == i || real_flag[std::size_t(j)] || used[std::size_t(j)]) continue;
      if (imag(z[std::size_t(j)]) > 0) continue;
      R dcj = abs(z[std::size_t(j)] - conj(z[std::size_t(i)]));
      if (best < 0 || dcj < bestd) {
        best = j;
        bestd = dcj;
      }
    }
    if (best < 0) return false;  // pairing failed; escalate
    z[std::size_t(best)] = conj(z[std::size_t(i)]);
    used[std::size_t(i)] = used[std::size_t(best)] = true;
  }

  // a-posteriori radii: the disk |w - z| <= deg |p(z)/p'(z)| holds a root
  std::vector<R> radii(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    C p = eval_poly<Digits>(c, z[std::size_t(i)]);
    C dp = eval_poly<Digits>(dc, z[std::size_t(i)]);
    if (abs(dp) == 0) return false;
    radii[std::size_t(i)] = R(m) * abs(p) / abs(dp);
  }
  // pairwise separation certifies the ball <-> root bijection
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (abs(z[std::size_t(i)] - z[std::size_t(j)]) <= radii[std::size_t(i)] + radii[std::size_t(j)])
        return false;

  for (int i = 0; i < m; ++i) {
    BallRaw b;
    b.re = ext_real(real(z[std::size_t(i)]));
    b.im = ext_real(imag(z[std::size_t(i)]));
    b.radius = ext_real(radii[std::size_t(i)]) * ext_real("1.000000000000000001") +
               ldexp(ext_real(1), -320);
    out->push_back(b);
  }
  return true;
}

bool roots_at_digits(int digits_level, const PolyZ& q, std::vector<BallRaw>* out) {
  switch (digits_level) {
    case 0: return aberth_roots<35>(q, out);
    case 1: return aberth_roots<60>(q, out);
    default: return aberth_roots<135>(q, out);
  }
}

int bits_of_level(int level) {
  switch (level) {
    case 0: return std::numeric_limits<real_t<35>>::digits;
    case 1: return std::numeric_limits<real_t<60>>::digits;
    default: return std::numeric_limits<real_t<135>>::digits;
  }
}

struct FactorRoots {
  PolyZ factor;
  int multiplicity;
  std::vector<BallRaw> balls;
  int circle_count;  // exact, with factor taken squarefree
};

// union-find over root indices for exact-equal-modulus grouping
struct UnionFind {
  std::vector<int> p;
  explicit UnionFind(int n) : p(std::size_t(n)) {
    for (int i = 0; i < n; ++i) p[std::size_t(i)] = i;
  }
  int find(int x) { return p[std::size_t(x)] == x ? x : p[std::size_t(x)] = find(p[std::size_t(x)]); }
  void unite(int a, int b) { p[std::size_t(find(a))] = find(b); }
};

}  // namespace

SpectrumReport spectrum_of_poly(const PolyZ& p, int precision_bits) {
  if (precision_bits < 100)
    throw std::invalid_argument("spectrum: precision_bits must be >= 100");
  const int d = degree(p);
  if (d < 1) throw std::invalid_argument("spectrum: polynomial must be nonconstant");

  int start_level = 0;
  while (start_level < 2 && bits_of_level(start_level) < precision_bits) ++start_level;
  if (bits_of_level(start_level) < precision_bits)
    throw precision_error("spectrum: requested precision exceeds the 449-bit ladder");

  auto factors = squarefree_decomposition(p);
  PolyZ pm_pairs = poly_gcd(p, poly_negate_var(p));  // roots with -root also a root

  for (int level = start_level; level <= 2; ++level) {
    std::vector<FactorRoots> fr;
    bool ok = true;
    for (const auto& f : factors) {
      FactorRoots r;
      r.factor = f.factor;
      r.multiplicity = f.multiplicity;
      r.circle_count = unit_circle_root_count(f.factor);
      if (!roots_at_digits(level, f.factor, &r.balls)) {
        ok = false;
        break;
      }
      fr.push_back(std::move(r));
    }
    if (!ok) continue;

    // flatten
    SpectrumReport rep;
    rep.dim = d;
    rep.precision_bits = bits_of_level(level);
    std::vector<int> factor_of;
    for (std::size_t fi = 0; fi < fr.size(); ++fi)
      for (const auto& b : fr[fi].balls) {
        RootBall rb;
        rb.re = b.re;
        rb.im = b.im;
        rb.radius = b.radius;
        rb.modulus = sqrt(b.re * b.re + b.im * b.im);
        rb.multiplicity = fr[fi].multiplicity;
        rep.eigenvalues.push_back(rb);
        factor_of.push_back(int(fi));
      }
    const int n = int(rep.eigenvalues.size());

    // unit-circle membership: exact counts arbitrate the straddling balls
    bool circle_ok = true;
    {
      std::size_t idx = 0;
      for (auto& f : fr) {
        int straddle = 0;
        std::vector<std::size_t> members;
        for (std::size_t bi = 0; bi < f.balls.size(); ++bi, ++idx) {
          auto& rb = rep.eigenvalues[idx];
          ext_real dist1 = abs(rb.modulus - 1);
          if (dist1 <= rb.radius) {
            ++straddle;
            members.push_back(idx);
          }
        }
        if (straddle != f.circle_count) {
          // radii cannot yet separate off-circle roots from the circle
          circle_ok = false;
          break;
        }
        for (auto mi : members) rep.eigenvalues[mi].on_unit_circle = true;
      }
    }
    if (!circle_ok) continue;

    // mark balls whose true root also has -root a root of p: these are the
    // roots of pm_pairs = gcd(p(t), p(-t)), located among the p-balls
    std::vector<bool> pm_marked(std::size_t(n), false);
    bool pm_ok = true;
    if (degree(pm_pairs) >= 1) {
      for (const auto& pf : squarefree_decomposition(pm_pairs)) {
        std::vector<BallRaw> pb;
        if (!roots_at_digits(level, pf.factor, &pb)) {
          pm_ok = false;
          break;
        }
        for (const auto& b : pb) {
          int hit = -1, hits = 0;
          for (int i = 0; i < n; ++i) {
            const auto& e = rep.eigenvalues[std::size_t(i)];
            ext_real dx = e.re - b.re, dy = e.im - b.im;
            if (sqrt(dx * dx + dy * dy) <= 2 * (e.radius + b.radius)) {
              hit = i;
              ++hits;
            }
          }
          if (hits != 1) {
            pm_ok = false;
            break;
          }
          pm_marked[std::size_t(hit)] = true;
        }
        if (!pm_ok) break;
      }
    }
    if (!pm_ok) continue;

    // group exactly-equal moduli: conjugate partners, +- partners, circle roots
    UnionFind uf(n);
    int first_circle = -1;
    for (int i = 0; i < n; ++i) {
      const auto& a = rep.eigenvalues[std::size_t(i)];
      if (a.on_unit_circle) {
        if (first_circle < 0)
          first_circle = i;
        else
          uf.unite(i, first_circle);
      }
      for (int j = i + 1; j < n; ++j) {
        const auto& b = rep.eigenvalues[std::size_t(j)];
        if (factor_of[std::size_t(i)] == factor_of[std::size_t(j)] && a.im != 0 &&
            a.re == b.re && a.im == -b.im)
          uf.unite(i, j);  // exact conjugates
      }
      if (pm_marked[std::size_t(i)]) {
        // the unique reflected partner ball holds exactly -lambda_i
        int hit = -1, hits = 0;
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const auto& b = rep.eigenvalues[std::size_t(j)];
          ext_real dx = a.re + b.re, dy = a.im + b.im;
          if (sqrt(dx * dx + dy * dy) <= 4 * (a.radius + b.radius)) {
            hit = j;
            ++hits;
          }
        }
        if (hits > 1) {
          pm_ok = false;
          break;
        }
        if (hit >= 0) uf.unite(i, hit);
      }
    }
    if (!pm_ok) continue;

    // representatives and certified separation across distinct groups
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups[uf.find(i)].push_back(i);
    struct G {
      ext_real modulus, radius;
      int mult;
    };
    std::vector<G> gs;
    for (auto& [root, members] : groups) {
      G g;
      g.modulus = rep.eigenvalues[std::size_t(members.front())].modulus;
      g.radius = 0;
      g.mult = 0;
      for (int i : members) {
        g.radius = std::max(g.radius, rep.eigenvalues[std::size_t(i)].radius);
        g.mult += rep.eigenvalues[std::size_t(i)].multiplicity;
        rep.eigenvalues[std::size_t(i)].class_index = int(gs.size());  // provisional
      }
      // circle groups sit exactly at modulus 1
      if (rep.eigenvalues[std::size_t(members.front())].on_unit_circle) g.modulus = 1;
      gs.push_back(g);
    }
    bool separated = true;
    ext_real gap = -1;
    for (std::size_t a = 0; a < gs.size() && separated; ++a)
      for (std::size_t b = a + 1; b < gs.size(); ++b) {
        ext_real sep = abs(gs[a].modulus - gs[b].modulus);
        if (sep <= gs[a].radius + gs[b].radius) {
          separated = false;
          break;
        }
        if (gap < 0 || sep < gap) gap = sep;
      }
    if (!separated) continue;

    // order classes by modulus ascending and remap indices
    std::vector<int> perm(gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) perm[i] = int(i);
    std::sort(perm.begin(), perm.end(),
              [&](int a, int b) { return gs[std::size_t(a)].modulus < gs[std::size_t(b)].modulus; });
    std::vector<int> inv(gs.size());
    for (std::size_t i = 0; i < gs.size(); ++i) inv[std::size_t(perm[i])] = int(i);
    for (auto& e : rep.eigenvalues) e.class_index = inv[std::size_t(e.class_index)];
    for (int pi : perm) {
      ModulusClass mc;
      mc.modulus = gs[std::size_t(pi)].modulus;
      mc.multiplicity = gs[std::size_t(pi)].mult;
      rep.classes.push_back(mc);
    }
    rep.certified_gap = gap < 0 ? ext_real(0) : gap;
    rep.unit_circle_count = 0;
    for (const auto& e : rep.eigenvalues)
      if (e.on_unit_circle) rep.unit_circle_count += e.multiplicity;

    // unimodularity sanity: product of moduli with multiplicity is |c_0| = 1
    ext_real prod = 1;
    for (const auto& e : rep.eigenvalues)
      for (int k = 0; k < e.multiplicity; ++k) prod *= e.modulus;
    ext_real target = ext_real(abs(p[0]));
    if (abs(prod - target) > ldexp(ext_real(1), -80) * target)
      throw std::logic_error("spectrum: modulus product check failed");
    return rep;
  }
  throw precision_error(
      "spectrum: could not certify modulus classes at 449 bits (grouping ambiguous)");
}

SpectrumReport spectrum(const IntMatrix& m, int precision_bits) {
  return spectrum_of_poly(charpoly(m).coeffs, precision_bits);
}

}  // namespace algebra
}  // namespace toruslab
