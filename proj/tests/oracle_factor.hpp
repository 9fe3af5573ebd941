#pragma once

// Test-only reducibility oracle, independent of the production search.
// Kronecker-style: a degree-k monic divisor g satisfies g(m) | p(m) at every
// integer m, so enumerate divisor tuples at k+1 sample points, interpolate,
// and trial-divide.  Slower than the production path but methodically
// different (value divisors + interpolation vs coefficient boxes).

#include <vector>

#include "toruslab/polynomial.hpp"

namespace toruslab_test {

using toruslab::big_int;
using toruslab::big_rat;
using toruslab::algebra::PolyZ;

inline std::vector<big_int> all_signed_divisors(const big_int& n0) {
  big_int n = abs(n0);
  std::vector<big_int> out;
  for (big_int i = 1; i * i <= n; ++i)
    if (n % i == 0) {
      out.push_back(i);
      out.push_back(-i);
      if (i * i != n) {
        out.push_back(n / i);
        out.push_back(-n / i);
      }
    }
  return out;
}

// true iff p (monic, deg >= 2) has a monic integer factor of degree k
inline bool kronecker_has_factor(const PolyZ& p, int k) {
  using namespace toruslab::algebra;
  // sample points 0, 1, -1, 2, -2, ... avoiding roots of p
  std::vector<big_int> pts;
  for (int v = 0; int(pts.size()) < k + 1; ++v) {
    for (int s : {1, -1}) {
      if (v == 0 && s == -1) continue;
      big_int x = v * s;
      if (poly_eval(p, x) != 0) pts.push_back(x);
      if (int(pts.size()) == k + 1) break;
    }
    if (v > 40) throw std::runtime_error("kronecker: could not find sample points");
  }
  std::vector<std::vector<big_int>> choices;
  for (const auto& x : pts) choices.push_back(all_signed_divisors(poly_eval(p, x)));

  std::vector<std::size_t> idx(pts.size(), 0);
  for (;;) {
    // Lagrange interpolation through (pts[i], choices[i][idx[i]])
    std::vector<big_rat> g(std::size_t(k) + 1, big_rat(0));
    for (std::size_t i = 0; i < pts.size(); ++i) {
      std::vector<big_rat> basis{big_rat(1)};
      big_rat denom(1);
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (i == j) continue;
        // basis *= (t - pts[j])
        std::vector<big_rat> nb(basis.size() + 1, big_rat(0));
        for (std::size_t c = 0; c < basis.size(); ++c) {
          nb[c + 1] += basis[c];
          nb[c] -= basis[c] * big_rat(pts[j]);
        }
        basis = std::move(nb);
        denom *= big_rat(pts[i] - pts[j]);
      }
      big_rat w = big_rat(choices[i][idx[i]]) / denom;
      for (std::size_t c = 0; c < basis.size(); ++c) g[c] += basis[c] * w;
    }
    // monic integer candidate?
    bool ok = g.back() == 1;
    PolyZ gz;
    if (ok)
      for (const auto& c : g) {
        if (denominator(c) != 1) {
          ok = false;
          break;
        }
        gz.push_back(numerator(c));
      }
    if (ok && toruslab::algebra::try_div_exact(p, gz, nullptr)) return true;

    std::size_t pos = 0;
    while (pos < idx.size()) {
      if (++idx[pos] < choices[pos].size()) break;
      idx[pos] = 0;
      ++pos;
    }
    if (pos == idx.size()) return false;
  }
}

// independent brute-force irreducibility over Z
inline bool oracle_is_irreducible(const PolyZ& p) {
  using namespace toruslab::algebra;
  int d = degree(p);
  if (d <= 0) return false;
  if (d == 1) return true;
  if (p[0] == 0) return false;
  for (int k = 1; k <= d / 2; ++k)
    if (kronecker_has_factor(p, k)) return false;
  return true;
}

}  // namespace toruslab_test
