#pragma once

// Hypothesis layer: characteristic polynomials, exact irreducibility,
// certified spectra with modulus classes, forbidden-pair detection, and
// the theorem-eligibility verdict.  Decisions that are yes/no hypotheses
// are made in exact arithmetic; floating point only ever narrows balls.

#include <string>
#include <vector>

#include "toruslab/polynomial.hpp"

namespace toruslab {
namespace algebra {

struct CharPoly {
  int dim = 0;    // degree; equals the dim of the source matrix
  PolyZ coeffs;   // monic, |c_0| = 1 for a unimodular source
};

// exact characteristic polynomial (Faddeev-LeVerrier trace recursion)
CharPoly charpoly(const IntMatrix& m);

// exact characteristic polynomial of m^k
CharPoly power_charpoly(const IntMatrix& m, int k);

// no monic integer factor of degree 1 <= k < deg; bounded exhaustive
// divisor search; degree > 12 raises capacity_error
bool is_irreducible(const CharPoly& p);
bool is_irreducible_poly(const PolyZ& p);

bool is_poly_in_tn(const CharPoly& p, int n);

// exact forbidden-pair tests (Remark-1 hypotheses)
bool has_plus_minus_pair(const PolyZ& p);   // roots lambda and -lambda
bool has_imaginary_pair(const PolyZ& p);    // purely imaginary pair

// --------------------------------------------------------------------------
// Certified spectrum

struct RootBall {
  ext_real re, im;        // approximation; a true root lies within radius
  ext_real radius;
  ext_real modulus;
  int multiplicity = 1;   // from the squarefree decomposition
  bool on_unit_circle = false;  // decided exactly
  int class_index = -1;   // modulus class, ascending
};

struct ModulusClass {
  ext_real modulus;
  int multiplicity = 0;   // counted with root multiplicities
};

struct SpectrumReport {
  int dim = 0;
  int precision_bits = 0;          // mantissa bits actually used
  std::vector<RootBall> eigenvalues;   // distinct roots; multiplicities sum to dim
  std::vector<ModulusClass> classes;   // ascending modulus
  int unit_circle_count = 0;           // with multiplicity, exact
  ext_real certified_gap = 0;          // min separation between distinct class moduli
};

// precision_bits >= 100; escalates internally up to ~449 bits, then raises
// precision_error if modulus classes cannot be certified
SpectrumReport spectrum(const IntMatrix& m, int precision_bits = 106);
SpectrumReport spectrum_of_poly(const PolyZ& p, int precision_bits = 106);

// --------------------------------------------------------------------------
// Verdict

enum class Verdict { thm1_eligible, thm2_eligible, neither };

const char* verdict_name(Verdict v);

struct HypothesisReport {
  bool irreducible = false;
  bool l4_irreducible = false;
  bool totally_irreducible = false;
  bool no_three_same_modulus = false;
  bool forbidden_pairs_present = false;
  bool hyperbolic = false;
  bool two_on_circle = false;
  bool real_simple_off_circle = false;
  bool remark1_consistent = false;  // l4_irreducible == (irreducible && !forbidden)
  Verdict verdict = Verdict::neither;
  std::string failure_reason;  // first failed check in the documented order; empty unless neither
  CharPoly chi;
  CharPoly chi4;
  SpectrumReport spec;
};

HypothesisReport check_hypotheses(const IntMatrix& m, int precision_bits = 106);

// --------------------------------------------------------------------------
// Periodic points of the automorphism (exact rationals)

// |det(m^n - I)|; degenerate_error when the determinant vanishes
big_int periodic_count(const IntMatrix& m, int n);

// all x in [0,1)^d with m^n x = x mod Z^d, exact, sorted lexicographically;
// capacity_error when the count exceeds cap
std::vector<std::vector<big_rat>> periodic_points(const IntMatrix& m, int n,
                                                  const big_int& cap = 4096);

}  // namespace algebra
}  // namespace toruslab
