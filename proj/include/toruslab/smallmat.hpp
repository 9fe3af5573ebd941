#pragma once

// Tiny dense matrix/vector helpers templated over the scalar, for the d <= 6
// torus maps.  Double-precision heavy lifting (QR, SVD, eigen) goes through
// Eigen instead; these exist so the extended-precision paths need no Eigen
// scalar adapters.

#include <vector>

#include "toruslab/common.hpp"

namespace toruslab {

template <class Real>
struct SmallMat {
  int n = 0;
  std::vector<Real> a;  // row-major

  SmallMat() = default;
  explicit SmallMat(int n_) : n(n_), a(std::size_t(n_) * n_, Real(0)) {}

  static SmallMat identity(int n_) {
    SmallMat m(n_);
    for (int i = 0; i < n_; ++i) m.at(i, i) = 1;
    return m;
  }

  Real& at(int i, int j) { return a[std::size_t(i) * n + j]; }
  const Real& at(int i, int j) const { return a[std::size_t(i) * n + j]; }

  SmallMat mul(const SmallMat& o) const {
    SmallMat r(n);
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < n; ++k) {
        const Real& v = at(i, k);
        if (v == 0) continue;
        for (int j = 0; j < n; ++j) r.at(i, j) += v * o.at(k, j);
      }
    return r;
  }

  std::vector<Real> apply(const std::vector<Real>& x) const {
    std::vector<Real> y(std::size_t(n), Real(0));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) y[std::size_t(i)] += at(i, j) * x[std::size_t(j)];
    return y;
  }
};

template <class Real>
Real det(SmallMat<Real> m) {
  using std::abs;
  Real sign = 1, d = 1;
  for (int k = 0; k < m.n; ++k) {
    int p = k;
    for (int i = k + 1; i < m.n; ++i)
      if (abs(m.at(i, k)) > abs(m.at(p, k))) p = i;
    if (m.at(p, k) == 0) return Real(0);
    if (p != k) {
      for (int j = k; j < m.n; ++j) std::swap(m.at(p, j), m.at(k, j));
      sign = -sign;
    }
    d *= m.at(k, k);
    for (int i = k + 1; i < m.n; ++i) {
      Real f = m.at(i, k) / m.at(k, k);
      for (int j = k; j < m.n; ++j) m.at(i, j) -= f * m.at(k, j);
    }
  }
  return sign * d;
}

// Gaussian elimination with partial pivoting; throws on (near-)singular input
template <class Real>
std::vector<Real> solve_linear(SmallMat<Real> m, std::vector<Real> b) {
  using std::abs;
  const int n = m.n;
  for (int k = 0; k < n; ++k) {
    int p = k;
    for (int i = k + 1; i < n; ++i)
      if (abs(m.at(i, k)) > abs(m.at(p, k))) p = i;
    if (m.at(p, k) == 0) throw numeric_error("solve_linear: singular matrix");
    if (p != k) {
      for (int j = k; j < n; ++j) std::swap(m.at(p, j), m.at(k, j));
      std::swap(b[std::size_t(p)], b[std::size_t(k)]);
    }
    for (int i = k + 1; i < n; ++i) {
      Real f = m.at(i, k) / m.at(k, k);
      if (f == 0) continue;
      for (int j = k; j < n; ++j) m.at(i, j) -= f * m.at(k, j);
      b[std::size_t(i)] -= f * b[std::size_t(k)];
    }
  }
  std::vector<Real> x(std::size_t(n), Real(0));
  for (int i = n - 1; i >= 0; --i) {
    Real s = b[std::size_t(i)];
    for (int j = i + 1; j < n; ++j) s -= m.at(i, j) * x[std::size_t(j)];
    x[std::size_t(i)] = s / m.at(i, i);
  }
  return x;
}

template <class Real>
Real pi_of() {
  using std::acos;
  static const Real p = acos(Real(-1));
  return p;
}

}  // namespace toruslab
