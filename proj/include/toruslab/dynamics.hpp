#pragma once

// Composable smooth torus maps: linear automorphisms, exactly
// volume-preserving shears x -> x + v g(w.x), and trigonometric vector-field
// nodes for non-volume-preserving controls.  Evaluation runs on the
// universal-cover lift and is templated over the scalar, so the same map can
// be iterated in double or extended precision.

#include <string>
#include <variant>
#include <vector>

#include "toruslab/algebra.hpp"
#include "toruslab/smallmat.hpp"

namespace toruslab {
namespace dynamics {

using TorusPoint = std::vector<double>;     // coords in [0,1)
using ExtPoint = std::vector<ext_real>;

// finite sine/cosine sum with mean zero (no constant term)
struct TrigProfile {
  struct Term {
    double amp = 0;
    int freq = 1;
    bool cosine = false;  // default sin
  };
  std::vector<Term> terms;

  template <class Real>
  Real value(const Real& s) const {
    using std::cos;
    using std::sin;
    const Real two_pi = 2 * pi_of<Real>();
    Real v = 0;
    for (const auto& t : terms) {
      Real arg = two_pi * t.freq * s;
      v += Real(t.amp) * (t.cosine ? cos(arg) : sin(arg));
    }
    return v;
  }

  template <class Real>
  Real slope(const Real& s) const {
    using std::cos;
    using std::sin;
    const Real two_pi = 2 * pi_of<Real>();
    Real v = 0;
    for (const auto& t : terms) {
      Real arg = two_pi * t.freq * s;
      Real f = two_pi * t.freq;
      v += Real(t.amp) * (t.cosine ? -f * sin(arg) : f * cos(arg));
    }
    return v;
  }

  double amp_sup() const {
    double s = 0;
    for (const auto& t : terms) s += std::abs(t.amp);
    return s;
  }
};

// x -> x + v g(w.x); w.v = 0 exactly, so det Df = 1 identically and the
// inverse is y -> y - v g(w.y)
struct ShearNode {
  std::vector<long long> w;
  std::vector<long long> v;
  TrigProfile g;
  // v_index/amp/freq as written in the map file, for round-tripping (-1: none)
  int file_v_index = -1;
};

struct LinearNode {
  algebra::IntMatrix mat;
  algebra::IntMatrix inv;
  std::vector<double> fmat, finv;       // cached casts
  std::vector<ext_real> emat, einv;
  explicit LinearNode(algebra::IntMatrix m);

  template <class Real>
  const std::vector<Real>& cast(bool inverse) const;
};

template <>
inline const std::vector<double>& LinearNode::cast<double>(bool inverse) const {
  return inverse ? finv : fmat;
}
template <>
inline const std::vector<ext_real>& LinearNode::cast<ext_real>(bool inverse) const {
  return inverse ? einv : emat;
}

// x -> x + sum_k [ c_k cos(2 pi k.x) + s_k sin(2 pi k.x) ]
struct FourierNode {
  struct Mode {
    std::vector<int> k;
    std::vector<double> cos_coef, sin_coef;
  };
  std::vector<Mode> modes;
};

using MapNode = std::variant<LinearNode, ShearNode, FourierNode>;

class TorusMap {
 public:
  TorusMap(int dim, std::vector<MapNode> nodes);

  int dim() const { return dim_; }
  const std::vector<MapNode>& nodes() const { return nodes_; }
  bool volume_exact() const { return volume_exact_; }
  // induced map on homology: the product of the linear parts
  const algebra::IntMatrix& linear_part() const { return linear_part_; }

  TorusMap composed_after(const TorusMap& inner) const;  // this o inner

 private:
  int dim_;
  std::vector<MapNode> nodes_;
  bool volume_exact_;
  algebra::IntMatrix linear_part_;
};

// kernel basis element of the integer covector w (documented selection rule)
std::vector<long long> kernel_basis_element(const std::vector<long long>& w, int v_index);

TorusMap shear_map(int dim, const std::vector<long long>& w, int v_index, double amp, int freq);
TorusMap linear_map(const algebra::IntMatrix& m);

// f = psi^{-1} o L o psi for psi built from linear/shear nodes
TorusMap make_conjugated(const algebra::IntMatrix& L, const TorusMap& psi);
// per-node closed-form inverse map (linear/shear nodes only)
TorusMap closed_form_inverse(const TorusMap& f);

// ---------------------------------------------------------------------------
// Evaluation (templated over the scalar)

template <class Real>
std::vector<Real> apply_lift(const TorusMap& f, std::vector<Real> x);

template <class Real>
std::vector<Real> apply(const TorusMap& f, const std::vector<Real>& x) {
  return wrap01(apply_lift(f, x));
}

template <class Real>
SmallMat<Real> differential_lift(const TorusMap& f, const std::vector<Real>& x);

struct Differential {
  SmallMat<double> matrix;
  bool exact_formula = true;  // all node types carry exact derivatives
};

Differential differential(const TorusMap& f, const TorusPoint& x);

// node-by-node inversion in reverse order; trigonometric nodes by damped
// Newton to residual < tol.  Throws inversion_error after 50 steps.
template <class Real>
std::vector<Real> inverse_lift(const TorusMap& f, std::vector<Real> y, const Real& tol);

template <class Real>
std::vector<Real> inverse_apply(const TorusMap& f, const std::vector<Real>& y, const Real& tol) {
  return wrap01(inverse_lift(f, y, tol));
}

// grid upper estimate of the C1 distance to the linear model
struct C1Distance {
  double value = 0;
  double c0_part = 0;
  double c1_part = 0;
  double grid_step = 0;
};
C1Distance c1_distance(const TorusMap& f, const algebra::IntMatrix& L, int grid_n);

// Newton refinement of a periodic point of f^n near seed
TorusPoint refine_periodic(const TorusMap& f, const TorusPoint& seed, int n, double tol = 1e-12);

// ---------------------------------------------------------------------------
// Map description file: one node per line
//   linear <matrix-file>
//   shear w=<ints,comma-separated> v_index=<int> amp=<real> freq=<int>
//   fourier <coeff-file>
TorusMap load_map_file(const std::string& path, int dim);
void write_map_file(const std::string& path, const TorusMap& f,
                    const std::string& aux_prefix);

}  // namespace dynamics
}  // namespace toruslab

#include "toruslab/dynamics_impl.hpp"
