#include "toruslab/intmatrix.hpp"

#include <fstream>
#include <sstream>

namespace toruslab {
namespace algebra {

IntMatrix::IntMatrix(int dim, std::vector<big_int> entries, bool strict_sl) {
  if (dim < 2) throw std::invalid_argument("IntMatrix: dim must be >= 2");
  if (entries.size() != std::size_t(dim) * dim)
    throw std::invalid_argument("IntMatrix: entry count does not match dim");
  big_int d = det_exact(dim, entries);
  if (d != 1 && d != -1)
    throw std::invalid_argument("IntMatrix: determinant must be +1 or -1, got " + d.str());
  if (strict_sl && d != 1)
    throw std::invalid_argument("IntMatrix: strict SL mode requires det +1");
  dim_ = dim;
  a_ = std::move(entries);
  det_ = d;
}

IntMatrix IntMatrix::identity(int dim) {
  std::vector<big_int> e(std::size_t(dim) * dim, 0);
  for (int i = 0; i < dim; ++i) e[std::size_t(i) * dim + i] = 1;
  return IntMatrix(dim, std::move(e));
}

std::optional<IntMatrix> IntMatrix::try_make(int dim, std::vector<big_int> entries) {
  big_int d = det_exact(dim, entries);
  if (d != 1 && d != -1) return std::nullopt;
  IntMatrix m;
  m.dim_ = dim;
  m.a_ = std::move(entries);
  m.det_ = d;
  return m;
}

IntMatrix IntMatrix::mul(const IntMatrix& o) const {
  if (dim_ != o.dim_) throw std::invalid_argument("IntMatrix::mul: dim mismatch");
  IntMatrix r;
  r.dim_ = dim_;
  r.a_.assign(std::size_t(dim_) * dim_, 0);
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < dim_; ++k) {
      const big_int& aik = at(i, k);
      if (aik == 0) continue;
      for (int j = 0; j < dim_; ++j) r.a_[std::size_t(i) * dim_ + j] += aik * o.at(k, j);
    }
  r.det_ = det_ * o.det_;
  return r;
}

IntMatrix IntMatrix::pow(int k) const {
  if (k < 0) throw std::invalid_argument("IntMatrix::pow: negative exponent");
  IntMatrix r = identity(dim_);
  IntMatrix base = *this;
  while (k > 0) {
    if (k & 1) r = r.mul(base);
    k >>= 1;
    if (k) base = base.mul(base);
  }
  return r;
}

big_int IntMatrix::trace() const {
  big_int t = 0;
  for (int i = 0; i < dim_; ++i) t += at(i, i);
  return t;
}

IntMatrix IntMatrix::inverse() const {
  // adjugate / det with det = +-1, so entries stay integral
  const int d = dim_;
  std::vector<big_int> adj(std::size_t(d) * d);
  std::vector<big_int> minor((std::size_t(d) - 1) * (d - 1));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      int r = 0;
      for (int ii = 0; ii < d; ++ii) {
        if (ii == i) continue;
        int c = 0;
        for (int jj = 0; jj < d; ++jj) {
          if (jj == j) continue;
          minor[std::size_t(r) * (d - 1) + c] = at(ii, jj);
          ++c;
        }
        ++r;
      }
      big_int m = (d == 1) ? big_int(1) : det_exact(d - 1, minor);
      if ((i + j) & 1) m = -m;
      adj[std::size_t(j) * d + i] = m;  // transpose for the adjugate
    }
  if (det_ == -1)
    for (auto& e : adj) e = -e;
  IntMatrix r;
  r.dim_ = d;
  r.a_ = std::move(adj);
  r.det_ = det_;  // det(A^-1) = 1/det(A) = det(A) for units
  return r;
}

big_int IntMatrix::max_abs_entry() const {
  big_int m = 0;
  for (const auto& e : a_)
    if (abs(e) > m) m = abs(e);
  return m;
}

std::string IntMatrix::to_text() const {
  std::ostringstream os;
  os << dim_ << "\n";
  for (int i = 0; i < dim_; ++i) {
    for (int j = 0; j < dim_; ++j) os << (j ? " " : "") << at(i, j);
    os << "\n";
  }
  return os.str();
}

big_int det_exact(int dim, const std::vector<big_int>& entries) {
  // Bareiss fraction-free elimination; all divisions are exact.
  std::vector<big_int> a = entries;
  auto at = [&](int i, int j) -> big_int& { return a[std::size_t(i) * dim + j]; };
  big_int prev = 1;
  int sign = 1;
  for (int k = 0; k + 1 < dim; ++k) {
    if (at(k, k) == 0) {
      int p = -1;
      for (int i = k + 1; i < dim; ++i)
        if (at(i, k) != 0) {
          p = i;
          break;
        }
      if (p < 0) return 0;
      for (int j = k; j < dim; ++j) std::swap(at(k, j), at(p, j));
      sign = -sign;
    }
    for (int i = k + 1; i < dim; ++i)
      for (int j = k + 1; j < dim; ++j) {
        big_int num = at(i, j) * at(k, k) - at(i, k) * at(k, j);
        at(i, j) = num / prev;  // exact by Sylvester identity
      }
    prev = at(k, k);
  }
  return sign > 0 ? at(dim - 1, dim - 1) : -at(dim - 1, dim - 1);
}

IntMatrix parse_matrix_text(std::istream& in, bool strict_sl) {
  int d = 0;
  if (!(in >> d)) throw parse_error("matrix file: missing dimension line");
  if (d < 2 || d > 64) throw parse_error("matrix file: dimension out of range: " + std::to_string(d));
  std::vector<big_int> e;
  e.reserve(std::size_t(d) * d);
  for (int i = 0; i < d * d; ++i) {
    std::string tok;
    if (!(in >> tok)) throw parse_error("matrix file: expected " + std::to_string(d * d) + " entries");
    try {
      e.emplace_back(big_int(tok));
    } catch (...) {
      throw parse_error("matrix file: bad integer token '" + tok + "'");
    }
  }
  try {
    return IntMatrix(d, std::move(e), strict_sl);
  } catch (const std::invalid_argument& ex) {
    throw parse_error(std::string("matrix file: ") + ex.what());
  }
}

IntMatrix load_matrix_file(const std::string& path, bool strict_sl) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open matrix file: " + path);
  return parse_matrix_text(in, strict_sl);
}

SmithForm smith_normal_form(int dim, std::vector<big_int> a) {
  // Track only V (column operations): solutions of A x in Z^d are x = V y
  // with y_i = k_i / d_i.  Row operations (U side) do not affect them.
  auto at = [&](int i, int j) -> big_int& { return a[std::size_t(i) * dim + j]; };
  std::vector<big_int> v(std::size_t(dim) * dim, 0);
  for (int i = 0; i < dim; ++i) v[std::size_t(i) * dim + i] = 1;
  auto vat = [&](int i, int j) -> big_int& { return v[std::size_t(i) * dim + j]; };

  auto swap_cols = [&](int c1, int c2) {
    for (int i = 0; i < dim; ++i) {
      std::swap(at(i, c1), at(i, c2));
      std::swap(vat(i, c1), vat(i, c2));
    }
  };
  auto addmul_col = [&](int dst, int src, const big_int& q) {
    for (int i = 0; i < dim; ++i) {
      at(i, dst) += q * at(i, src);
      vat(i, dst) += q * vat(i, src);
    }
  };
  auto swap_rows = [&](int r1, int r2) {
    for (int j = 0; j < dim; ++j) std::swap(at(r1, j), at(r2, j));
  };
  auto addmul_row = [&](int dst, int src, const big_int& q) {
    for (int j = 0; j < dim; ++j) at(dst, j) += q * at(src, j);
  };

  for (int k = 0; k < dim; ++k) {
    for (;;) {
      // pick the smallest nonzero pivot in the trailing block
      int pi = -1, pj = -1;
      big_int best = 0;
      for (int i = k; i < dim; ++i)
        for (int j = k; j < dim; ++j)
          if (at(i, j) != 0 && (pi < 0 || abs(at(i, j)) < best)) {
            pi = i;
            pj = j;
            best = abs(at(i, j));
          }
      if (pi < 0) break;  // trailing block is zero
      if (pi != k) swap_rows(k, pi);
      if (pj != k) swap_cols(k, pj);
      bool clean = true;
      for (int i = k + 1; i < dim; ++i)
        if (at(i, k) != 0) {
          big_int q = at(i, k) / at(k, k);
          addmul_row(i, k, -q);
          if (at(i, k) != 0) clean = false;
        }
      for (int j = k + 1; j < dim; ++j)
        if (at(k, j) != 0) {
          big_int q = at(k, j) / at(k, k);
          addmul_col(j, k, -q);
          if (at(k, j) != 0) clean = false;
        }
      if (clean) break;
    }
  }
  // normalize signs; divisibility chain is not needed by the caller
  SmithForm f;
  f.diag.resize(dim);
  for (int i = 0; i < dim; ++i) f.diag[i] = abs(at(i, i));
  f.v = std::move(v);
  return f;
}

}  // namespace algebra
}  // namespace toruslab
