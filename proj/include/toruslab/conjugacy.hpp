#pragma once

// Solving h o L = f o h for the unique conjugacy h = id + u homotopic to the
// identity, two independent ways: a spectral-split fixed-point sweep on a
// grid, and pointwise orbit iteration h_n = f^{-n} o h_0 o L^n.

#include <Eigen/Dense>

#include <optional>
#include <string>

#include "toruslab/dynamics.hpp"
#include "toruslab/grid.hpp"

namespace toruslab {
namespace conjugacy {

using dynamics::TorusMap;
using dynamics::TorusPoint;

// periodic vector field u on a uniform grid with multilinear interpolation
class DisplacementField {
 public:
  DisplacementField(int dim, int grid_n);  // zero field
  DisplacementField(int dim, int grid_n, std::vector<double> values);

  int dim() const { return dim_; }
  int grid_n() const { return grid_; }
  double grid_step() const { return 1.0 / grid_; }
  double norm_sup() const { return norm_sup_; }
  const std::vector<double>& values() const { return values_; }
  const GridIndexer& indexer() const { return idx_; }

  double* at(std::size_t node) { return values_.data() + node * std::size_t(dim_); }
  const double* at(std::size_t node) const { return values_.data() + node * std::size_t(dim_); }

  // multilinear periodic interpolation of u
  TorusPoint eval(const TorusPoint& x) const;
  // h(x) = x + u(x), not wrapped
  TorusPoint apply_lift(const TorusPoint& x) const;

  void recompute_norm();  // refresh the cached sup norm and re-check < 0.5

 private:
  int dim_, grid_;
  GridIndexer idx_;
  std::vector<double> values_;
  double norm_sup_ = 0;
};

void save_field_text(const std::string& path, const DisplacementField& u);
void save_field_binary(const std::string& path, const DisplacementField& u);
DisplacementField load_field(const std::string& path);  // sniffs text vs binary

// --------------------------------------------------------------------------
// Real eigen-decomposition of L into 1x1 / 2x2 conformal blocks

struct SpectralSplit {
  struct Block {
    int offset = 0;  // column offset in the basis
    int size = 1;    // 1 or 2
    double modulus = 0;
    bool stable = false;          // modulus < 1
    Eigen::Matrix2d action;       // top-left size x size entries used
    Eigen::Matrix2d action_inv;
  };
  int dim = 0;
  Eigen::MatrixXd basis;       // columns ordered by modulus ascending
  Eigen::MatrixXd basis_inv;
  std::vector<Block> blocks;
  double block_diag_error = 0;  // ||B^-1 L B - blockdiag|| relative

  // orthonormal basis (QR of the block columns) of one modulus class
  Eigen::MatrixXd block_onb(int block_index) const;
};

// throws unsupported_error when some |lambda| is within 1e-8 of 1
SpectralSplit spectral_split(const algebra::IntMatrix& L);

// --------------------------------------------------------------------------

struct SolveReport {
  DisplacementField u;
  int sweeps = 0;
  double final_delta = 0;  // last successive sup-difference (standard coords)
  double residual = 0;
  double grid_step = 0;
};

// Fixed-point sweeps for u(Lx) = L u(x) + phi(x + u(x)), stable blocks pulled
// forward, unstable blocks backward.  Divergence (sup-difference rising five
// sweeps in a row) raises divergence_error; a non-hyperbolic L raises
// unsupported_error.
SolveReport solve_spectral(const TorusMap& f, const algebra::IntMatrix& L, int grid_n,
                           double tau, const DisplacementField* initial = nullptr,
                           int max_sweeps = 5000, int threads = 1);

struct OrbitSample {
  TorusPoint x;
  TorusPoint h_x;                  // h_{n}(x) at the deepest n computed
  std::vector<double> increments;  // |h_{k+1} - h_k| torus distance, k = 0..
  // smoothed per-step decay rate, max over n >= 5 of (inc[n+4]/inc[n])^{1/4};
  // raw step ratios oscillate around the geometric trend
  double contraction_ratio = 0;
};

struct OrbitSolveResult {
  int n_max = 0;
  int precision_bits = 0;
  std::vector<OrbitSample> samples;
};

// h_n(x) = f^{-n}(L^n x) in extended precision; the precision budget
// n*log2(rho_max) + 20 bits is checked before running
OrbitSolveResult solve_orbit(const TorusMap& f, const algebra::IntMatrix& L, int n_max,
                             const std::vector<TorusPoint>& samples);

// max over grid nodes of the torus distance between h(Lx) and f(h(x));
// eval_grid_n = 0 evaluates on the field's own grid, larger values probe
// interpolated points between nodes
double residual(const DisplacementField& u, const TorusMap& f, const algebra::IntMatrix& L,
                int eval_grid_n = 0);

// grid field w with h(x + w(x)) = x within tau
DisplacementField invert(const DisplacementField& u, double tau);

}  // namespace conjugacy
}  // namespace toruslab
