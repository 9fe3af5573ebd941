#pragma once

// Exact integer matrices with unit determinant: the automorphisms acted on
// by every other module.  All arithmetic is arbitrary precision.

#include <boost/multiprecision/cpp_int.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "toruslab/common.hpp"

namespace toruslab {

using big_int = mp::cpp_int;
using big_rat = mp::cpp_rational;

namespace algebra {

// d x d integer matrix with det in {+1, -1}, checked at construction.
class IntMatrix {
 public:
  IntMatrix(int dim, std::vector<big_int> entries, bool strict_sl = false);

  static IntMatrix identity(int dim);
  // returns nullopt instead of throwing when det is not a unit (survey filter)
  static std::optional<IntMatrix> try_make(int dim, std::vector<big_int> entries);

  int dim() const { return dim_; }
  const big_int& at(int i, int j) const { return a_[std::size_t(i) * dim_ + j]; }
  const std::vector<big_int>& entries() const { return a_; }
  const big_int& det() const { return det_; }

  IntMatrix mul(const IntMatrix& o) const;
  IntMatrix pow(int k) const;
  IntMatrix inverse() const;  // exact: adjugate over det = +-1
  big_int trace() const;

  bool operator==(const IntMatrix& o) const { return dim_ == o.dim_ && a_ == o.a_; }

  big_int max_abs_entry() const;
  std::string to_text() const;  // matrix text format: "d" line then d rows

 private:
  IntMatrix() = default;
  int dim_ = 0;
  std::vector<big_int> a_;
  big_int det_ = 0;
};

// exact determinant of an arbitrary integer matrix (Bareiss elimination)
big_int det_exact(int dim, const std::vector<big_int>& entries);

// parse the matrix text format; throws parse_error with a diagnostic
IntMatrix parse_matrix_text(std::istream& in, bool strict_sl = false);
IntMatrix load_matrix_file(const std::string& path, bool strict_sl = false);

// Smith normal form A = U D V with U, V unimodular. Returns diagonal of D
// and the inverse transform needed by the periodic-point solver.
struct SmithForm {
  std::vector<big_int> diag;            // d_1, ..., d_n (non-negative)
  std::vector<big_int> v;               // V, row-major (x = V y recovers solutions)
};
SmithForm smith_normal_form(int dim, std::vector<big_int> a);

}  // namespace algebra
}  // namespace toruslab
