#pragma once

// Quantitative rigidity tests: periodic Livsic obstructions for the
// restricted Jacobian, conditional-density ratios along contracted leaf
// pairs, Holder/Lipschitz regularity of the conjugacy, the derivative
// transfer identity, and flag transport.

#include "toruslab/cocycles.hpp"

namespace toruslab {
namespace rigidity {

using conjugacy::DisplacementField;
using cocycles::SubBundleField;
using dynamics::TorusMap;
using dynamics::TorusPoint;

// --------------------------------------------------------------------------
// Livsic obstructions over periodic orbits

struct OrbitObstruction {
  int period = 0;
  TorusPoint point;        // refined representative
  double value = 0;        // |sum log Jac(f|_E) - n log det(L|_E_L)|
  double volume_defect = 0;  // |sum log |det Df|| over the orbit (0 for exact volume)
  bool refined = false;
  std::string warning;
};

struct ObstructionReport {
  std::vector<OrbitObstruction> orbits;
  double max_obstruction = 0;   // over successfully refined orbits
  double max_volume_defect = 0;
  int n_orbits = 0;
  int n_failed = 0;
  double logdet_class = 0;      // log det(L|_E_L) per iterate
  std::vector<int> period_counts;  // orbits used per period 1..max_period
};

// E designated by the modulus-class index of L (ascending); periodic points
// of L are enumerated exactly and refined for f.  Refinement failures are
// recorded per orbit and excluded from the max with a warning.
ObstructionReport livsic_obstruction(const TorusMap& f, const algebra::IntMatrix& L,
                                     int class_k, int max_period,
                                     int max_orbits_per_period = 500,
                                     double refine_tol = 1e-12);

// Birkhoff average of log Jac(f|_E) over seeded random orbits (transported
// moving basis); comparing against log det(L|_E_L) is the volume-averaged
// counterpart of the periodic obstructions
struct JacobianAverage {
  double mean = 0;
  double stderr_of_mean = 0;
  int n_iters = 0;
  int n_samples = 0;
};
JacobianAverage volume_jacobian_average(const TorusMap& f, const algebra::IntMatrix& L,
                                        int class_k, int n, int n_samples, std::uint64_t seed,
                                        int burn_in = 60);

// --------------------------------------------------------------------------
// Conditional-density ratios

struct DensityRatio {
  double value = 0;
  int depth = 0;          // truncation depth actually used
  double tail_bound = 0;  // geometric estimate of the dropped tail
};

// Pi_{j>=1} Jac(f|_E)(f^{-j}y) / Jac(f|_E)(f^{-j}x); y must lie on the local
// contracted leaf of x (checked: the backward pair distance must decay)
DensityRatio density_ratio(const TorusMap& f, const algebra::IntMatrix& L, int class_k,
                           const TorusPoint& x, const TorusPoint& y, double tau,
                           int max_depth = 120, int burn_in = 40);

// a point at leafwise distance ~delta from x along the class-k leaf of f,
// built by displacing on the far backward orbit and flowing forward
TorusPoint leaf_point(const TorusMap& f, const algebra::IntMatrix& L, int class_k,
                      const TorusPoint& x, double delta, int n_back = 24,
                      std::uint64_t seed = 0);

// --------------------------------------------------------------------------
// Holder exponent of the conjugacy

struct RegularityEstimate {
  std::string direction_tag;
  std::vector<double> scales;
  double alpha = 0;
  double band_lo = 0, band_hi = 0;  // bootstrap 95% band
  bool lipschitz = false;           // band contains 1
  double fit_residual_rms = 0;
  double span_decades = 0;
  bool meets_span_target = false;   // >= 2 decades
  int n_pairs = 0;
};

struct HolderDirection {
  enum class Mode { global, fixed_vector, subspace } mode = Mode::global;
  std::string tag = "global";
  Eigen::MatrixXd basis;  // used by fixed_vector (1 col) and subspace
};

// scales must be >= 4 grid steps of h (interpolation floor); fewer than 4
// usable scales raises insufficient_scale_error
RegularityEstimate holder_exponent(const DisplacementField& u, const HolderDirection& dir,
                                   std::vector<double> scales, int n_pairs,
                                   std::uint64_t seed, int bootstrap_rounds = 200);

// --------------------------------------------------------------------------
// Derivative transfer identity along a class

struct TransferReport {
  double max_defect = 0;
  double median_defect = 0;
  int n_pts = 0;
  double fd_scale = 0;        // base Richardson scale
  int richardson_levels = 3;  // dyadic levels used
};

// At sample points, estimate D(x) = derivative of h along E_L by Richardson
// finite differences and report |F_{h(x)} D(x) - D(Lx) L|_{E_L}| / |D(x)|.
// Non-convergent difference quotients raise numeric_error.
TransferReport transfer_check(const DisplacementField& u, const TorusMap& f,
                              const algebra::IntMatrix& L, int class_k, int n_pts,
                              double fd_scale, std::uint64_t seed, int n_power = 40);

// --------------------------------------------------------------------------
// Tangency of transported flags

struct FlagTransportReport {
  double max_defect = 0;
  double mean_defect = 0;
  int n_pts = 0;
  double delta = 0;
};

// for x and y = x + delta e with e in the slow unstable flag E^L_(1,k):
// the orthogonal component of h(y)-h(x) against the estimated f-flag at
// h(x), normalized; k counts unstable classes from the slowest (1-based)
FlagTransportReport flag_transport_check(const DisplacementField& u,
                                         const algebra::IntMatrix& L, int k_slow_unstable,
                                         const SubBundleField& f_flag, int n_pts, double delta,
                                         std::uint64_t seed);

// the exact slow unstable flag span of L (orthonormal columns)
Eigen::MatrixXd slow_unstable_flag_of_linear(const algebra::IntMatrix& L, int k_slow_unstable);

}  // namespace rigidity
}  // namespace toruslab
