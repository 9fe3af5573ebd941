#pragma once

// Derivative-cocycle diagnostics: Lyapunov spectra by QR averaging, invariant
// sub-bundle fields by power iteration along orbits, fiber-bunching margins,
// quasiconformal distortion, and the projective obstruction of a 2x2 block.

#include <Eigen/Dense>

#include "toruslab/conjugacy.hpp"
#include "toruslab/dynamics.hpp"
#include "toruslab/grid.hpp"

namespace toruslab {
namespace cocycles {

using dynamics::TorusMap;
using dynamics::TorusPoint;

// classical orthogonalized product: push a frame by Df, re-orthonormalize
// each step, average the log diagonal; exponents sorted descending
std::vector<double> lyapunov_qr(const TorusMap& f, const TorusPoint& x0, int n);

struct CocycleStats {
  std::vector<double> exponents;   // means, sorted descending
  std::vector<double> stderrs;     // standard errors of the means
  int n_iters = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  double bunching_margin = std::numeric_limits<double>::quiet_NaN();
  double distortion_max = std::numeric_limits<double>::quiet_NaN();
};

// averages lyapunov_qr over uniform random starts (volume = the invariant
// measure for volume-preserving f, so uniform sampling is stationary)
CocycleStats volume_lyapunov(const TorusMap& f, int n_samples, int n, std::uint64_t seed,
                             int threads = 1);

// --------------------------------------------------------------------------
// Sub-bundle fields

struct SubBundleField {
  int dim = 0;          // ambient dimension
  int k = 0;            // fiber dimension
  GridIndexer idx;
  std::vector<double> bases;  // per node: d x k orthonormal basis, column-major
  double continuity_defect = 0;  // max subspace distance between adjacent nodes

  Eigen::MatrixXd basis_at_node(std::size_t node) const;
  // basis at the node nearest to x
  Eigen::MatrixXd basis_near(const TorusPoint& x) const;
};

// modulus-class data shared by the flag estimators
struct ClassLayout {
  std::vector<int> dims;      // class dimensions, modulus ascending
  std::vector<double> moduli;
  int dim_total = 0;
  int fast_dim(int k) const;  // sum of dims for classes >= k (0-based)
  int slow_dim(int k) const;  // sum of dims for classes <= k
};
ClassLayout class_layout(const algebra::IntMatrix& L);

// E_k^f at a single point: intersection of the fast flag (forward QR push
// from the backward orbit) and the slow flag (backward push from the forward
// orbit); k is the 0-based modulus-class index, dims from L
Eigen::MatrixXd flag_at(const TorusMap& f, const algebra::IntMatrix& L, int k,
                        const TorusPoint& x, int n_power);

// fast flag of dimension m at x (leading m columns of the pushed frame)
Eigen::MatrixXd fast_flag_at(const TorusMap& f, const TorusPoint& x, int m, int n_power);
// slow flag of dimension m (push with Df^{-1} from the forward orbit)
Eigen::MatrixXd slow_flag_at(const TorusMap& f, const TorusPoint& x, int m, int n_power);

// grid field of E_k^f; throws conditioning_error when the flag intersection
// is ill-conditioned and numeric_error when the continuity defect exceeds
// defect_bound
SubBundleField flag_estimate(const TorusMap& f, const algebra::IntMatrix& L, int k, int grid_n,
                             int n_power, double defect_bound = 0.5, int threads = 1);

// deterministic gauge: orthonormal basis of span(P) aligned against the
// reference columns, so nearby subspaces get nearby bases
Eigen::MatrixXd canonical_basis(const Eigen::MatrixXd& subspace_basis,
                                const Eigen::MatrixXd& reference);

// principal-angle intersection of two subspaces (column spans); expected
// dimension k_out; throws conditioning_error when angles are ambiguous
Eigen::MatrixXd intersect_subspaces(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    int k_out, double angle_floor = 1e-6);

// --------------------------------------------------------------------------

struct BunchingReport {
  double margin_nu = 0;      // min over grid of 1 - |F||F^-1| nu^beta
  double margin_nu_hat = 0;  // min over grid of 1 - |F||F^-1| nu_hat^{-beta}
  double margin = 0;         // min of both
  double nu = 0, nu_hat = 0, beta = 0;
};

// F = Df restricted to the field E; nu < 1 < nu_hat.  When `reference` has
// E.k columns, norms are taken in reference-frame coordinates (the class
// eigenframe of L makes a conformal block report |F||F^-1| = 1 exactly);
// the result is invariant under the orthonormal gauge of E.
BunchingReport bunching_check(const TorusMap& f, const SubBundleField& E, double beta,
                              double nu, double nu_hat,
                              const Eigen::MatrixXd& reference = Eigen::MatrixXd());

// raw (non-orthonormal) eigenframe columns of one modulus class of L
Eigen::MatrixXd class_reference_frame(const algebra::IntMatrix& L, int k);

// defaults from measured exponents with a 10% safety factor
std::pair<double, double> default_bunching_rates(const CocycleStats& stats);

// --------------------------------------------------------------------------

struct DistortionSeries {
  std::vector<double> log_distortion;  // log kappa(F^n) for n = 1..n_max
  double value = 0;                    // kappa at n_max
  double slope = 0;                    // least-squares slope of log kappa vs n
};

enum class BundleTransport {
  transported,   // burn-in QR push, then transport by Df (invariant bundles)
  fixed_plane,   // keep the supplied plane fixed (non-invariant control)
};

// distortion |F^n| |(F^n)^{-1}| of Df compressed to a 2-dim (or k-dim)
// moving bundle along the orbit of x.  With a k-column `reference`, products
// are expressed in reference-frame coordinates (see bunching_check); the
// value is invariant under the orthonormal gauge of the moving basis.
DistortionSeries distortion(const TorusMap& f, const Eigen::MatrixXd& plane0,
                            const TorusPoint& x, int n, BundleTransport transport,
                            int burn_in = 40,
                            const Eigen::MatrixXd& reference = Eigen::MatrixXd());

// convenience: averaged log-distortion over several seeded starts
DistortionSeries distortion_averaged(const TorusMap& f, const algebra::IntMatrix& L, int k,
                                     int n, int n_rep, std::uint64_t seed,
                                     BundleTransport transport, int burn_in = 40);

// deterministic non-invariant control plane for L: the first seeded plane
// whose fixed compression Q^T L Q has real eigenvalues with modulus ratio
// >= 1.3, so the per-step projected products grow at a positive rate
Eigen::MatrixXd control_plane(const algebra::IntMatrix& L);

enum class ProjectiveClass { has_fixed_line, has_invariant_line_pair, neither };

const char* projective_class_name(ProjectiveClass c);

// real eigenvalues -> fixed line; purely imaginary pair -> invariant line
// pair; otherwise neither.  Near-degenerate discriminant raises
// indeterminate_error.
ProjectiveClass projective_obstruction(const Eigen::Matrix2d& m);

}  // namespace cocycles
}  // namespace toruslab
