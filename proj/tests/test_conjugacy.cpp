#include <doctest.h>

#include <filesystem>

#include "toruslab/conjugacy.hpp"

using namespace toruslab;
using namespace toruslab::conjugacy;
using dynamics::TorusMap;
using dynamics::TorusPoint;

namespace {

algebra::IntMatrix cat_map() {
  return algebra::IntMatrix(2, {big_int(2), big_int(1), big_int(1), big_int(1)});
}

algebra::IntMatrix ph_quartic() {
  // companion of t^4 - 2t^3 - 2t + 1, two eigenvalues on the unit circle
  std::vector<big_int> e(16, 0);
  e[0 * 4 + 3] = -1;
  e[1 * 4 + 0] = 1; e[1 * 4 + 3] = 2;
  e[2 * 4 + 1] = 1; e[2 * 4 + 3] = 0;
  e[3 * 4 + 2] = 1; e[3 * 4 + 3] = 2;
  return algebra::IntMatrix(4, std::move(e));
}

TorusMap psi_shear(double eps) { return dynamics::shear_map(2, {1, 0}, 0, eps, 1); }

// exact displacement of psi^{-1}: u(x) = -v eps sin(2 pi x1)
double psi_inv_u2(double x1, double eps) { return -eps * std::sin(2 * 3.141592653589793238 * x1); }

}  // namespace

TEST_CASE("spectral split of the cat map") {
  SpectralSplit s = spectral_split(cat_map());
  REQUIRE(s.blocks.size() == 2);
  CHECK(s.blocks[0].modulus == doctest::Approx(0.3819660112501051).epsilon(1e-12));
  CHECK(s.blocks[1].modulus == doctest::Approx(2.618033988749895).epsilon(1e-12));
  CHECK(s.blocks[0].stable);
  CHECK_FALSE(s.blocks[1].stable);
  CHECK(s.block_diag_error < 1e-12);
}

TEST_CASE("spectral split rejects partially hyperbolic linear parts") {
  CHECK_THROWS_AS(spectral_split(ph_quartic()), unsupported_error);
  CHECK_THROWS_AS(spectral_split(algebra::IntMatrix::identity(2)), unsupported_error);
}

TEST_CASE("spectral split of the conformal quartic: two 2x2 blocks") {
  std::vector<big_int> e(16, 0);
  // companion of t^4 - t^3 + 3t^2 - t + 1
  e[0 * 4 + 3] = -1;
  e[1 * 4 + 0] = 1; e[1 * 4 + 3] = 1;
  e[2 * 4 + 1] = 1; e[2 * 4 + 3] = -3;
  e[3 * 4 + 2] = 1; e[3 * 4 + 3] = 1;
  algebra::IntMatrix m(4, std::move(e));
  SpectralSplit s = spectral_split(m);
  REQUIRE(s.blocks.size() == 2);
  CHECK(s.blocks[0].size == 2);
  CHECK(s.blocks[1].size == 2);
  CHECK(s.blocks[0].modulus == doctest::Approx(1.0 / s.blocks[1].modulus).epsilon(1e-12));
  CHECK(s.block_diag_error < 1e-12);
}

TEST_CASE("solve_spectral: f = L gives the zero field") {
  TorusMap L = dynamics::linear_map(cat_map());
  SolveReport r = solve_spectral(L, cat_map(), 32, 1e-9);
  CHECK(r.u.norm_sup() == 0.0);
  CHECK(r.residual == 0.0);
}

TEST_CASE("solve_spectral: conjugated cat recovers psi^{-1}") {
  const double eps = 0.02;
  TorusMap f = dynamics::make_conjugated(cat_map(), psi_shear(eps));
  SolveReport r = solve_spectral(f, cat_map(), 128, 1e-9);
  CHECK(r.residual < 1e-6);
  // uniqueness in the identity homotopy class forces h = psi^{-1}
  double worst = 0;
  const GridIndexer& idx = r.u.indexer();
  for (std::size_t p = 0; p < idx.count(); ++p) {
    TorusPoint x = idx.point_of(p);
    const double* v = r.u.at(p);
    worst = std::max(worst, std::abs(v[0] - 0.0));
    worst = std::max(worst, std::abs(v[1] - psi_inv_u2(x[0], eps)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("solve_spectral: generic sheared cat converges") {
  // f = shear o L
  TorusMap fs = dynamics::shear_map(2, {1, 0}, 0, 0.02, 1)
                    .composed_after(dynamics::linear_map(cat_map()));
  SolveReport r = solve_spectral(fs, cat_map(), 128, 1e-9);
  CHECK(r.residual < 1e-8);
  CHECK(r.u.norm_sup() > 1e-4);  // genuinely nontrivial conjugacy
}

TEST_CASE("solve_spectral: divergence is detected for huge perturbations") {
  TorusMap f = dynamics::shear_map(2, {1, 0}, 0, 0.45, 1)
                   .composed_after(dynamics::linear_map(cat_map()));
  CHECK_THROWS_AS(solve_spectral(f, cat_map(), 32, 1e-9), numeric_error);
}

TEST_CASE("residual: zero field against f != L equals the C0 deviation") {
  TorusMap f = dynamics::shear_map(2, {1, 0}, 0, 0.03, 1)
                   .composed_after(dynamics::linear_map(cat_map()));
  DisplacementField zero(2, 64);
  double r = residual(zero, f, cat_map());
  dynamics::C1Distance c = dynamics::c1_distance(f, cat_map(), 64);
  CHECK(r == doctest::Approx(c.c0_part).epsilon(1e-12));
}

TEST_CASE("residual on a refined grid grows only by the interpolation bound") {
  const double eps = 0.02;
  TorusMap f = dynamics::make_conjugated(cat_map(), psi_shear(eps));
  SolveReport r = solve_spectral(f, cat_map(), 64, 1e-10);
  double r1 = residual(r.u, f, cat_map());
  double r2 = residual(r.u, f, cat_map(), 128);
  // second-difference bound on the interpolation error of u
  double h = r.u.grid_step();
  double second = eps * std::pow(2 * 3.141592653589793238, 2.0);  // |u''| for the sine profile
  double interp_bound = h * h / 8.0 * second;
  CHECK(r2 <= r1 + 4 * interp_bound);
  CHECK(r2 > r1);  // off-node points genuinely probe interpolation
}

TEST_CASE("uniqueness probe: distinct initial fields reach the same fixed point") {
  const double eps = 0.02;
  TorusMap f = dynamics::make_conjugated(cat_map(), psi_shear(eps));
  const int g = 32;
  std::vector<DisplacementField> finals;
  for (int trial = 0; trial < 5; ++trial) {
    GridIndexer idx(2, g);
    std::vector<double> vals(idx.count() * 2, 0.0);
    CounterRng rng(77, std::uint64_t(trial));
    if (trial > 0) {
      for (std::size_t p = 0; p < idx.count(); ++p) {
        TorusPoint x = idx.point_of(p);
        vals[p * 2 + 0] = 0.05 * rng.next_symmetric() * std::sin(2 * 3.14159265 * x[1]);
        vals[p * 2 + 1] = 0.04 * std::cos(2 * 3.14159265 * (x[0] + 0.1 * trial));
      }
    }
    DisplacementField init(2, g, std::move(vals));
    SolveReport r = solve_spectral(f, cat_map(), g, 1e-10, &init);
    finals.push_back(r.u);
  }
  for (std::size_t t = 1; t < finals.size(); ++t) {
    double diff = 0;
    for (std::size_t i = 0; i < finals[0].values().size(); ++i)
      diff = std::max(diff, std::abs(finals[t].values()[i] - finals[0].values()[i]));
    CHECK(diff < 1e-8);
  }
}

TEST_CASE("solve_orbit: identity case and budget errors") {
  TorusMap L = dynamics::linear_map(cat_map());
  OrbitSolveResult r = solve_orbit(L, cat_map(), 10, {TorusPoint{0.3, 0.8}});
  for (double inc : r.samples[0].increments) CHECK(inc < 1e-30);
  CHECK(r.samples[0].h_x[0] == doctest::Approx(0.3).epsilon(1e-12));

  CHECK_THROWS_AS(solve_orbit(L, cat_map(), 121, {TorusPoint{0.1, 0.1}}), capacity_error);
  // cat map: 120 * log2(2.618) + 20 = 187 bits < 201 available, so 120 is fine
  // but a budget violation is exercised through the n_max cap above; a matrix
  // with larger spectral radius trips the bit budget itself
  algebra::IntMatrix big(2, {big_int(8), big_int(3), big_int(5), big_int(2)});
  TorusMap fb = dynamics::linear_map(big);
  CHECK_THROWS_AS(solve_orbit(fb, big, 120, {TorusPoint{0.1, 0.1}}), precision_error);
}

TEST_CASE("solve_orbit: conjugated cat converges to psi^{-1} geometrically") {
  const double eps = 0.02;
  TorusMap f = dynamics::make_conjugated(cat_map(), psi_shear(eps));
  CounterRng rng(4242, 0);
  std::vector<TorusPoint> pts;
  for (int i = 0; i < 20; ++i) pts.push_back({rng.next_unit(), rng.next_unit()});
  OrbitSolveResult r = solve_orbit(f, cat_map(), 30, pts);
  for (const auto& s : r.samples) {
    // limit equals psi^{-1}(x)
    CHECK(std::abs(nearest_lift(s.h_x[0] - s.x[0])) < 1e-9);
    double expect = wrap01(s.x[1] + psi_inv_u2(s.x[0], eps));
    CHECK(std::abs(nearest_lift(s.h_x[1] - expect)) < 1e-9);
    // geometric decay of the increments
    CHECK(s.contraction_ratio < 0.9);
    CHECK(s.contraction_ratio > 0.0);
    CHECK(s.increments[25] < 1e-6 * s.increments[1]);
  }
}

TEST_CASE("cross-solver agreement") {
  const double eps = 0.02;
  TorusMap f = dynamics::make_conjugated(cat_map(), psi_shear(eps));
  SolveReport sr = solve_spectral(f, cat_map(), 128, 1e-9);
  CounterRng rng(515, 0);
  std::vector<TorusPoint> pts;
  for (int i = 0; i < 100; ++i) pts.push_back({rng.next_unit(), rng.next_unit()});
  OrbitSolveResult orb = solve_orbit(f, cat_map(), 30, pts);
  double worst = 0;
  for (const auto& s : orb.samples) {
    TorusPoint hs = sr.u.apply_lift(s.x);
    worst = std::max(worst, torus_dist_inf<double>(hs, s.h_x));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("invert") {
  // constant shift u = c inverts to -c
  GridIndexer idx(2, 32);
  std::vector<double> vals(idx.count() * 2);
  for (std::size_t p = 0; p < idx.count(); ++p) {
    vals[p * 2 + 0] = 0.07;
    vals[p * 2 + 1] = -0.04;
  }
  DisplacementField cfield(2, 32, std::move(vals));
  DisplacementField w = invert(cfield, 1e-12);
  for (std::size_t p = 0; p < idx.count(); ++p) {
    CHECK(w.at(p)[0] == doctest::Approx(-0.07).epsilon(1e-10));
    CHECK(w.at(p)[1] == doctest::Approx(0.04).epsilon(1e-10));
  }

  // h from the conjugated experiment inverts to approximately psi
  const double eps = 0.02;
  TorusMap f = dynamics::make_conjugated(cat_map(), psi_shear(eps));
  SolveReport r = solve_spectral(f, cat_map(), 128, 1e-10);
  DisplacementField winv = invert(r.u, 1e-10);
  double worst = 0;
  for (std::size_t p = 0; p < winv.indexer().count(); ++p) {
    TorusPoint x = winv.indexer().point_of(p);
    // psi displacement: +eps sin(2 pi x1) in coordinate 2
    worst = std::max(worst, std::abs(winv.at(p)[0]));
    worst = std::max(worst,
                     std::abs(winv.at(p)[1] + psi_inv_u2(x[0], eps)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("field io round trips") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "toruslab_fieldtest";
  fs::create_directories(dir);
  GridIndexer idx(2, 16);
  std::vector<double> vals(idx.count() * 2);
  CounterRng rng(999, 0);
  for (auto& v : vals) v = 0.3 * rng.next_symmetric();
  DisplacementField u(2, 16, vals);

  save_field_text((dir / "u.txt").string(), u);
  DisplacementField t = load_field((dir / "u.txt").string());
  CHECK(t.values() == u.values());

  save_field_binary((dir / "u.bin").string(), u);
  DisplacementField b = load_field((dir / "u.bin").string());
  CHECK(b.values() == u.values());

  CHECK_THROWS_AS(load_field((dir / "missing.bin").string()), parse_error);
}

TEST_CASE("norm guard: fields leaving the homotopy class are rejected") {
  GridIndexer idx(2, 8);
  std::vector<double> vals(idx.count() * 2, 0.0);
  vals[3] = 0.51;
  CHECK_THROWS_AS(DisplacementField(2, 8, vals), numeric_error);
}
