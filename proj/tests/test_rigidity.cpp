#include <doctest.h>

#include "toruslab/rigidity.hpp"

using namespace toruslab;
using namespace toruslab::rigidity;
using dynamics::TorusMap;
using dynamics::TorusPoint;

namespace {

algebra::IntMatrix cat_map() {
  return algebra::IntMatrix(2, {big_int(2), big_int(1), big_int(1), big_int(1)});
}

TorusMap conjugated_cat(double eps) {
  return dynamics::make_conjugated(cat_map(), dynamics::shear_map(2, {1, 0}, 0, eps, 1));
}

TorusMap sheared_cat(double eps) {
  return dynamics::shear_map(2, {1, 0}, 0, eps, 1)
      .composed_after(dynamics::linear_map(cat_map()));
}

constexpr double kCatExponent = 0.9624236501192069;

}  // namespace

TEST_CASE("livsic: f = L has zero obstruction exactly") {
  TorusMap L = dynamics::linear_map(cat_map());
  ObstructionReport rep = livsic_obstruction(L, cat_map(), 1, 3);
  CHECK(rep.n_orbits >= 7);  // 1 fixed + 2 period-2 + >=4 period-3 orbits
  CHECK(rep.n_failed == 0);
  CHECK(rep.max_obstruction < 1e-12);
  CHECK(rep.max_volume_defect < 1e-12);
  CHECK(rep.logdet_class == doctest::Approx(kCatExponent).epsilon(1e-12));
}

TEST_CASE("livsic: smooth conjugate is a coboundary over every orbit") {
  TorusMap f = conjugated_cat(0.02);
  ObstructionReport rep = livsic_obstruction(f, cat_map(), 1, 4);
  CHECK(rep.n_failed == 0);
  CHECK(rep.max_obstruction < 1e-8);
  // volume preservation telescopes exactly on periodic orbits
  CHECK(rep.max_volume_defect < 1e-10);
  // inventory matches the exact counts: 1, 2, 5, 10 orbits for periods 1..4
  REQUIRE(rep.period_counts.size() == 4);
  CHECK(rep.period_counts[0] == 1);
  CHECK(rep.period_counts[1] == 2);
  CHECK(rep.period_counts[2] == 5);
  CHECK(rep.period_counts[3] == 10);
}

TEST_CASE("livsic: sheared cat shows a positive obstruction") {
  TorusMap f = sheared_cat(0.05);
  ObstructionReport rep = livsic_obstruction(f, cat_map(), 1, 4);
  CHECK(rep.n_failed == 0);
  CHECK(rep.max_obstruction > 1e-4);
  CHECK(rep.max_volume_defect < 1e-10);  // still volume-preserving
}

TEST_CASE("livsic: gauge invariance of the restricted determinant") {
  // the loop product is invariant under rotating the starting basis; compare
  // two maps whose obstruction values must agree orbit by orbit under
  // reruns (deterministic), and check the identity-gauge consistency with
  // the return-map eigenvalues for the fixed point
  TorusMap f = sheared_cat(0.04);
  ObstructionReport a = livsic_obstruction(f, cat_map(), 1, 3);
  ObstructionReport b = livsic_obstruction(f, cat_map(), 1, 3);
  REQUIRE(a.orbits.size() == b.orbits.size());
  for (std::size_t i = 0; i < a.orbits.size(); ++i)
    CHECK(a.orbits[i].value == b.orbits[i].value);

  // fixed point: obstruction equals |log|unstable eigenvalue of Df(p)| - log lambda|
  TorusPoint p = dynamics::refine_periodic(f, TorusPoint{0.0, 0.0}, 1, 1e-13);
  SmallMat<double> dfp = dynamics::differential_lift<double>(f, p);
  double tr = dfp.at(0, 0) + dfp.at(1, 1);
  double det = dfp.at(0, 0) * dfp.at(1, 1) - dfp.at(0, 1) * dfp.at(1, 0);
  double mu = (tr + std::sqrt(tr * tr - 4 * det)) / 2;  // unstable eigenvalue
  double expect = std::abs(std::log(std::abs(mu)) - kCatExponent);
  double got = -1;
  for (const auto& o : a.orbits)
    if (o.period == 1) got = o.value;
  CHECK(got == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("volume jacobian average matches the top exponent") {
  TorusMap f = sheared_cat(0.05);
  JacobianAverage ja = volume_jacobian_average(f, cat_map(), 1, 20000, 12, 31);
  cocycles::CocycleStats st = cocycles::volume_lyapunov(f, 12, 20000, 31);
  double shift_jac = ja.mean - kCatExponent;
  double shift_lya = st.exponents[0] - kCatExponent;
  double err = 2 * std::sqrt(ja.stderr_of_mean * ja.stderr_of_mean +
                             st.stderrs[0] * st.stderrs[0]);
  CHECK(std::abs(shift_jac - shift_lya) <= std::max(err, 1e-5));
  CHECK(std::abs(shift_lya) > 2 * st.stderrs[0]);  // the shift itself is resolved
}

TEST_CASE("leaf_point and density_ratio") {
  // f = L: leaves are linear, the Jacobian is constant, ratio = 1
  TorusMap L = dynamics::linear_map(cat_map());
  TorusPoint x{0.33, 0.71};
  TorusPoint y = leaf_point(L, cat_map(), 1, x, 1e-2);
  CHECK(std::abs(torus_dist_2(x, y) - 1e-2) < 7e-3);
  DensityRatio r0 = density_ratio(L, cat_map(), 1, x, y, 1e-12);
  CHECK(r0.value == doctest::Approx(1.0).epsilon(1e-10));

  // same point gives exactly 1
  DensityRatio rsame = density_ratio(L, cat_map(), 1, x, x, 1e-12);
  CHECK(rsame.value == 1.0);

  // conjugated map: finite value, stable under doubling the depth
  TorusMap f = conjugated_cat(0.03);
  TorusPoint xf{0.2, 0.6};
  TorusPoint yf = leaf_point(f, cat_map(), 1, xf, 1e-2);
  DensityRatio r1 = density_ratio(f, cat_map(), 1, xf, yf, 1e-10, 40);
  DensityRatio r2 = density_ratio(f, cat_map(), 1, xf, yf, 1e-14, 80);
  // the double-precision leaf floor bounds the attainable truncation
  CHECK(std::abs(r1.value - r2.value) < 5e-9);
  CHECK(r1.value > 0.5);
  CHECK(r1.value < 2.0);

  // a deliberately off-leaf pair fails the contraction gate
  TorusPoint bad = xf;
  bad[0] += 1e-2;  // generic direction: has a stable component
  bool ok = true;
  try {
    density_ratio(f, cat_map(), 1, xf, bad, 1e-12);
  } catch (const leaf_pairing_error&) {
    ok = false;
  }
  CHECK_FALSE(ok);
}

TEST_CASE("density ratio multiplicativity along a leaf triple") {
  TorusMap f = conjugated_cat(0.03);
  TorusPoint x{0.41, 0.13};
  TorusPoint y = leaf_point(f, cat_map(), 1, x, 0.8e-2);
  TorusPoint z = leaf_point(f, cat_map(), 1, x, 2.0e-2);
  const double tau = 1e-11;
  double rxy = density_ratio(f, cat_map(), 1, x, y, tau, 60).value;
  double ryz = density_ratio(f, cat_map(), 1, y, z, tau, 60).value;
  double rxz = density_ratio(f, cat_map(), 1, x, z, tau, 60).value;
  CHECK(std::abs(rxz - rxy * ryz) < 3 * tau + 2e-8);
}

TEST_CASE("holder exponent: identity map calibrates to alpha = 1") {
  conjugacy::DisplacementField id(2, 512);
  HolderDirection dir;
  dir.mode = HolderDirection::Mode::global;
  std::vector<double> scales;
  for (double s = 4.0 / 512; s <= 0.26; s *= 2) scales.push_back(s);
  RegularityEstimate est = holder_exponent(id, dir, scales, 60, 2025);
  CHECK(std::abs(est.alpha - 1.0) < 1e-3);
  CHECK(est.lipschitz);
  CHECK(est.fit_residual_rms < 1e-10);
  CHECK(est.span_decades > 1.5);
}

TEST_CASE("holder exponent: two-decade span when the grid allows it") {
  conjugacy::DisplacementField id(2, 4096);
  HolderDirection dir;
  dir.mode = HolderDirection::Mode::global;
  std::vector<double> scales;
  for (double s = 4.0 / 4096; s <= 0.2; s *= 2) scales.push_back(s);
  RegularityEstimate est = holder_exponent(id, dir, scales, 24, 7);
  CHECK(est.meets_span_target);
  CHECK(std::abs(est.alpha - 1.0) < 1e-3);
}

TEST_CASE("holder exponent: smooth conjugacy reads Lipschitz in every direction") {
  const double eps = 0.02;
  TorusMap f = conjugated_cat(eps);
  conjugacy::SolveReport sol = conjugacy::solve_spectral(f, cat_map(), 256, 1e-9);
  conjugacy::SpectralSplit split = conjugacy::spectral_split(cat_map());

  std::vector<double> scales{1.0 / 64, 1.0 / 32, 1.0 / 16, 1.0 / 8};
  std::vector<HolderDirection> dirs;
  HolderDirection g;
  g.mode = HolderDirection::Mode::global;
  dirs.push_back(g);
  HolderDirection du;
  du.mode = HolderDirection::Mode::fixed_vector;
  du.tag = "unstable";
  du.basis = split.block_onb(1);
  dirs.push_back(du);
  HolderDirection ds;
  ds.mode = HolderDirection::Mode::fixed_vector;
  ds.tag = "stable";
  ds.basis = split.block_onb(0);
  dirs.push_back(ds);

  for (const auto& dir : dirs) {
    RegularityEstimate est = holder_exponent(sol.u, dir, scales, 80, 4711);
    CAPTURE(dir.tag);
    CHECK(est.band_lo <= 1.0);
    CHECK(1.0 <= est.band_hi);
    CHECK(std::abs(est.alpha - 1.0) < 0.05);
  }
}

TEST_CASE("holder exponent: insufficient scales error") {
  conjugacy::DisplacementField id(2, 16);
  HolderDirection dir;
  std::vector<double> scales{0.3, 0.4};  // only two usable
  CHECK_THROWS_AS(holder_exponent(id, dir, scales, 10, 1), insufficient_scale_error);
}

TEST_CASE("transfer check: identity on f = L is exact, conjugated is small") {
  TorusMap L = dynamics::linear_map(cat_map());
  conjugacy::DisplacementField id(2, 128);
  TransferReport t0 = transfer_check(id, L, cat_map(), 1, 24, 1.0 / 16, 5);
  CHECK(t0.max_defect < 1e-10);

  const double eps = 0.02;
  TorusMap f = conjugated_cat(eps);
  conjugacy::SolveReport sol = conjugacy::solve_spectral(f, cat_map(), 256, 1e-9);
  TransferReport t1 = transfer_check(sol.u, f, cat_map(), 1, 60, 1.0 / 32, 5);
  CHECK(t1.max_defect < 1e-3);

  // first-order convergence: halving the scale shrinks the defect until the
  // interpolation floor
  TransferReport t2 = transfer_check(sol.u, f, cat_map(), 1, 60, 1.0 / 16, 5);
  CHECK(t1.max_defect < t2.max_defect + 1e-4);
}

TEST_CASE("flag transport: tangency of the transported unstable flag") {
  const double eps = 0.02;
  TorusMap f = conjugated_cat(eps);
  conjugacy::SolveReport sol = conjugacy::solve_spectral(f, cat_map(), 256, 1e-9);
  cocycles::SubBundleField flag = cocycles::flag_estimate(f, cat_map(), 1, 64, 40);

  FlagTransportReport r1 = flag_transport_check(sol.u, cat_map(), 1, flag, 60, 1.0 / 64, 9);
  CHECK(r1.max_defect < 0.05);
  FlagTransportReport r2 = flag_transport_check(sol.u, cat_map(), 1, flag, 60, 1.0 / 32, 9);
  CHECK(r1.mean_defect < r2.mean_defect + 5e-3);  // decreasing in delta

  // negative control: a deliberately wrong constant subspace does not improve
  cocycles::SubBundleField wrong = flag;
  conjugacy::SpectralSplit split = conjugacy::spectral_split(cat_map());
  Eigen::MatrixXd stable_dir = split.block_onb(0);
  for (std::size_t node = 0; node < wrong.idx.count(); ++node)
    for (int i = 0; i < 2; ++i) wrong.bases[node * 2 + std::size_t(i)] = stable_dir(i, 0);
  FlagTransportReport w1 = flag_transport_check(sol.u, cat_map(), 1, wrong, 60, 1.0 / 64, 9);
  FlagTransportReport w2 = flag_transport_check(sol.u, cat_map(), 1, wrong, 60, 1.0 / 32, 9);
  CHECK(w1.max_defect > 0.5);
  CHECK(std::abs(w1.mean_defect - w2.mean_defect) < 0.2);  // no decay trend
}

TEST_CASE("identity h on f = L transports flags with zero defect") {
  TorusMap L = dynamics::linear_map(cat_map());
  conjugacy::DisplacementField id(2, 64);
  cocycles::SubBundleField flag = cocycles::flag_estimate(L, cat_map(), 1, 16, 40);
  FlagTransportReport r = flag_transport_check(id, cat_map(), 1, flag, 40, 1.0 / 8, 3);
  CHECK(r.max_defect < 1e-8);
}
