#include "toruslab/conjugacy.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace toruslab {
namespace conjugacy {

DisplacementField::DisplacementField(int dim, int grid_n)
    : dim_(dim), grid_(grid_n), idx_(dim, grid_n) {
  if (dim < 1 || grid_n < 2) throw std::invalid_argument("DisplacementField: bad dimensions");
  values_.assign(idx_.count() * std::size_t(dim), 0.0);
}

DisplacementField::DisplacementField(int dim, int grid_n, std::vector<double> values)
    : dim_(dim), grid_(grid_n), idx_(dim, grid_n), values_(std::move(values)) {
  if (values_.size() != idx_.count() * std::size_t(dim))
    throw std::invalid_argument("DisplacementField: value count mismatch");
  recompute_norm();
}

void DisplacementField::recompute_norm() {
  double m = 0;
  for (double v : values_) m = std::max(m, std::abs(v));
  norm_sup_ = m;
  if (m >= 0.5)
    throw numeric_error("DisplacementField: sup |u| = " + std::to_string(m) +
                        " leaves the identity homotopy class (must be < 0.5)");
}

TorusPoint DisplacementField::eval(const TorusPoint& x) const {
  const int d = dim_;
  std::vector<int> base(static_cast<std::size_t>(d));
  std::vector<double> frac(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    double s = wrap01(x[std::size_t(i)]) * grid_;
    int b = int(std::floor(s));
    if (b >= grid_) b = grid_ - 1;
    base[std::size_t(i)] = b;
    frac[std::size_t(i)] = s - b;
  }
  TorusPoint out(static_cast<std::size_t>(d), 0.0);
  const int corners = 1 << d;
  std::vector<int> k(static_cast<std::size_t>(d));
  for (int c = 0; c < corners; ++c) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      if (c & (1 << i)) {
        w *= frac[std::size_t(i)];
        k[std::size_t(i)] = (base[std::size_t(i)] + 1) % grid_;
      } else {
        w *= 1.0 - frac[std::size_t(i)];
        k[std::size_t(i)] = base[std::size_t(i)];
      }
    }
    if (w == 0.0) continue;
    const double* v = at(idx_.node_of(k));
    for (int i = 0; i < d; ++i) out[std::size_t(i)] += w * v[std::size_t(i)];
  }
  return out;
}

TorusPoint DisplacementField::apply_lift(const TorusPoint& x) const {
  TorusPoint u = eval(x);
  TorusPoint y = x;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += u[i];
  return y;
}

// ---------------------------------------------------------------------------
// field files

void save_field_text(const std::string& path, const DisplacementField& u) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot write field file: " + path);
  out << "toruslab-field-text " << u.dim() << " " << u.grid_n() << "\n";
  char buf[64];
  const std::size_t nodes = u.indexer().count();
  for (std::size_t node = 0; node < nodes; ++node) {
    const double* v = u.at(node);
    for (int i = 0; i < u.dim(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", v[std::size_t(i)]);
      out << buf << (i + 1 < u.dim() ? " " : "\n");
    }
  }
}

void save_field_binary(const std::string& path, const DisplacementField& u) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot write field file: " + path);
  // little-endian doubles after magic + int32 dim + int32 grid_n
  const char magic[8] = {'T', 'L', 'F', 'D', '0', '1', 0, 0};
  out.write(magic, 8);
  std::int32_t d = u.dim(), g = u.grid_n();
  out.write(reinterpret_cast<const char*>(&d), 4);
  out.write(reinterpret_cast<const char*>(&g), 4);
  out.write(reinterpret_cast<const char*>(u.values().data()),
            std::streamsize(u.values().size() * sizeof(double)));
}

DisplacementField load_field(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open field file: " + path);
  char head[8] = {};
  in.read(head, 8);
  if (std::memcmp(head, "TLFD01\0\0", 8) == 0) {
    std::int32_t d = 0, g = 0;
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&g), 4);
    if (d < 1 || d > 8 || g < 2) throw parse_error("field file: bad binary header");
    GridIndexer idx(d, g);
    std::vector<double> vals(idx.count() * std::size_t(d));
    in.read(reinterpret_cast<char*>(vals.data()), std::streamsize(vals.size() * sizeof(double)));
    if (!in) throw parse_error("field file: truncated binary payload");
    return DisplacementField(d, g, std::move(vals));
  }
  in.close();
  std::ifstream tin(path);
  std::string tag;
  int d = 0, g = 0;
  if (!(tin >> tag >> d >> g) || tag != "toruslab-field-text")
    throw parse_error("field file: unrecognized header in " + path);
  GridIndexer idx(d, g);
  std::vector<double> vals(idx.count() * std::size_t(d));
  for (auto& v : vals)
    if (!(tin >> v)) throw parse_error("field file: truncated text payload");
  return DisplacementField(d, g, std::move(vals));
}

// ---------------------------------------------------------------------------
// spectral split

Eigen::MatrixXd SpectralSplit::block_onb(int block_index) const {
  const Block& b = blocks[std::size_t(block_index)];
  Eigen::MatrixXd cols = basis.middleCols(b.offset, b.size);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, b.size);
  return q;
}

SpectralSplit spectral_split(const algebra::IntMatrix& L) {
  const int d = L.dim();
  Eigen::MatrixXd ld(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ld(i, j) = double(L.at(i, j));
  Eigen::EigenSolver<Eigen::MatrixXd> es(ld);
  if (es.info() != Eigen::Success) throw numeric_error("spectral_split: eigensolver failed");

  struct Item {
    double modulus;
    int size;
    Eigen::VectorXd c1, c2;
    double a, b;  // block [[a, b], [-b, a]]; b = 0 for a real eigenvalue
  };
  std::vector<Item> items;
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  const double imag_tol = 1e-9;
  for (int i = 0; i < d; ++i) {
    if (used[std::size_t(i)]) continue;
    std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam.imag()) < imag_tol) {
      used[std::size_t(i)] = true;
      Item it;
      it.modulus = std::abs(lam.real());
      it.size = 1;
      Eigen::VectorXcd v = es.eigenvectors().col(i);
      // rotate the complex phase away and take a sign-canonical real vector
      std::complex<double> phase = 1.0;
      double best = 0;
      for (int r = 0; r < d; ++r)
        if (std::abs(v(r)) > best) {
          best = std::abs(v(r));
          phase = std::conj(v(r)) / std::abs(v(r));
        }
      Eigen::VectorXd re = (v * phase).real();
      re.normalize();
      int lead = 0;
      while (lead < d && std::abs(re(lead)) < 1e-12) ++lead;
      if (lead < d && re(lead) < 0) re = -re;
      it.c1 = re;
      it.a = lam.real();
      it.b = 0;
      items.push_back(std::move(it));
    } else {
      if (lam.imag() < 0) continue;  // handled with the partner
      used[std::size_t(i)] = true;
      for (int j = 0; j < d; ++j)
        if (!used[std::size_t(j)] &&
            std::abs(es.eigenvalues()(j) - std::conj(lam)) < 1e-8 * std::abs(lam)) {
          used[std::size_t(j)] = true;
          break;
        }
      Item it;
      it.modulus = std::abs(lam);
      it.size = 2;
      Eigen::VectorXcd v = es.eigenvectors().col(i);
      it.c1 = v.real();
      it.c2 = v.imag();
      it.a = lam.real();
      it.b = lam.imag();
      items.push_back(std::move(it));
    }
  }
  std::sort(items.begin(), items.end(),
            [](const Item& x, const Item& y) { return x.modulus < y.modulus; });

  SpectralSplit s;
  s.dim = d;
  s.basis.resize(d, d);
  int col = 0;
  for (const auto& it : items) {
    if (std::abs(it.modulus - 1.0) < 1e-8)
      throw unsupported_error(
          "spectral_split: eigenvalue of modulus 1 (partially hyperbolic linear part; the "
          "grid solver needs an Anosov one)");
    SpectralSplit::Block b;
    b.offset = col;
    b.size = it.size;
    b.modulus = it.modulus;
    b.stable = it.modulus < 1.0;
    b.action.setZero();
    b.action_inv.setZero();
    if (it.size == 1) {
      s.basis.col(col) = it.c1;
      b.action(0, 0) = it.a;
      b.action_inv(0, 0) = 1.0 / it.a;
    } else {
      s.basis.col(col) = it.c1;
      s.basis.col(col + 1) = it.c2;
      b.action(0, 0) = it.a;
      b.action(0, 1) = it.b;
      b.action(1, 0) = -it.b;
      b.action(1, 1) = it.a;
      double det2 = it.a * it.a + it.b * it.b;
      b.action_inv(0, 0) = it.a / det2;
      b.action_inv(0, 1) = -it.b / det2;
      b.action_inv(1, 0) = it.b / det2;
      b.action_inv(1, 1) = it.a / det2;
    }
    col += it.size;
    s.blocks.push_back(b);
  }
  if (col != d) throw numeric_error("spectral_split: eigenvector pairing failed");
  s.basis_inv = s.basis.inverse();

  Eigen::MatrixXd bd = s.basis_inv * ld * s.basis;
  Eigen::MatrixXd expect = Eigen::MatrixXd::Zero(d, d);
  for (const auto& b : s.blocks)
    for (int i = 0; i < b.size; ++i)
      for (int j = 0; j < b.size; ++j) expect(b.offset + i, b.offset + j) = b.action(i, j);
  s.block_diag_error = (bd - expect).norm() / ld.norm();
  if (s.block_diag_error > 1e-10)
    throw numeric_error("spectral_split: block-diagonalization error " +
                        std::to_string(s.block_diag_error));
  return s;
}

// ---------------------------------------------------------------------------
// spectral solver

SolveReport solve_spectral(const TorusMap& f, const algebra::IntMatrix& L, int grid_n,
                           double tau, const DisplacementField* initial, int max_sweeps,
                           int threads) {
  const int d = f.dim();
  if (L.dim() != d) throw std::invalid_argument("solve_spectral: dim mismatch");
  if (!(f.linear_part() == L))
    throw std::invalid_argument("solve_spectral: f is not homotopic to L");
  SpectralSplit split = spectral_split(L);  // unsupported_error when not Anosov

  GridIndexer idx(d, grid_n);
  const std::size_t nodes = idx.count();
  std::vector<std::size_t> perm_l = idx.matrix_permutation(L);
  std::vector<std::size_t> perm_linv = idx.matrix_permutation(L.inverse());

  // fields live in eigenbasis coordinates
  std::vector<double> cur(nodes * std::size_t(d), 0.0), next(nodes * std::size_t(d));
  if (initial) {
    if (initial->dim() != d || initial->grid_n() != grid_n)
      throw std::invalid_argument("solve_spectral: initial field shape mismatch");
    for (std::size_t p = 0; p < nodes; ++p) {
      Eigen::Map<const Eigen::VectorXd> u(initial->at(p), d);
      Eigen::Map<Eigen::VectorXd>(cur.data() + p * std::size_t(d), d) = split.basis_inv * u;
    }
  }
  std::vector<double> phi(nodes * std::size_t(d));  // B^-1 phi(h(p)) per node

  Eigen::MatrixXd ld(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ld(i, j) = double(L.at(i, j));

  const double bnorm = split.basis.cwiseAbs().rowwise().sum().maxCoeff();

  double prev_delta = std::numeric_limits<double>::infinity();
  int rising = 0;
  SolveReport rep{DisplacementField(d, grid_n), 0, 0.0, 0.0, 1.0 / grid_n};

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    parallel_for(nodes, threads, [&](std::size_t p) {
      TorusPoint x = idx.point_of(p);
      Eigen::Map<const Eigen::VectorXd> c(cur.data() + p * std::size_t(d), d);
      Eigen::VectorXd hx = split.basis * c;
      for (int i = 0; i < d; ++i) hx(i) += x[std::size_t(i)];
      TorusPoint hxv(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) hxv[std::size_t(i)] = hx(i);
      TorusPoint fh = dynamics::apply_lift<double>(f, hxv);
      Eigen::VectorXd ph(d);
      for (int i = 0; i < d; ++i) ph(i) = fh[std::size_t(i)];
      ph -= ld * hx;
      Eigen::Map<Eigen::VectorXd>(phi.data() + p * std::size_t(d), d) = split.basis_inv * ph;
    });

    parallel_for(nodes, threads, [&](std::size_t p) {
      const std::size_t pre = perm_linv[p];  // node of L^{-1} p
      const std::size_t post = perm_l[p];    // node of L p
      double* out = next.data() + p * std::size_t(d);
      const double* c_pre = cur.data() + pre * std::size_t(d);
      const double* c_post = cur.data() + post * std::size_t(d);
      const double* phi_pre = phi.data() + pre * std::size_t(d);
      const double* phi_here = phi.data() + p * std::size_t(d);
      for (const auto& b : split.blocks) {
        if (b.stable) {
          // c_s(p) <- A_s c_s(L^-1 p) + phi_s(L^-1 p)
          for (int i = 0; i < b.size; ++i) {
            double s = phi_pre[b.offset + i];
            for (int j = 0; j < b.size; ++j) s += b.action(i, j) * c_pre[b.offset + j];
            out[b.offset + i] = s;
          }
        } else {
          // c_u(p) <- A_u^{-1} (c_u(L p) - phi_u(p))
          for (int i = 0; i < b.size; ++i) {
            double s = 0;
            for (int j = 0; j < b.size; ++j)
              s += b.action_inv(i, j) * (c_post[b.offset + j] - phi_here[b.offset + j]);
            out[b.offset + i] = s;
          }
        }
      }
    });

    double delta = 0;
    for (std::size_t i = 0; i < cur.size(); ++i)
      delta = std::max(delta, std::abs(next[i] - cur[i]));
    delta *= bnorm;  // bound in standard coordinates
    std::swap(cur, next);
    rep.sweeps = sweep + 1;
    rep.final_delta = delta;
    if (delta < tau) break;
    if (delta > prev_delta) {
      if (++rising >= 5)
        throw divergence_error(
            "solve_spectral: sup-difference increased 5 consecutive sweeps (iteration not "
            "contracting; perturbation too large)");
    } else {
      rising = 0;
    }
    prev_delta = delta;
    if (sweep + 1 == max_sweeps)
      throw divergence_error("solve_spectral: no convergence within the sweep budget");
  }

  std::vector<double> std_vals(nodes * std::size_t(d));
  for (std::size_t p = 0; p < nodes; ++p) {
    Eigen::Map<const Eigen::VectorXd> c(cur.data() + p * std::size_t(d), d);
    Eigen::Map<Eigen::VectorXd>(std_vals.data() + p * std::size_t(d), d) = split.basis * c;
  }
  rep.u = DisplacementField(d, grid_n, std::move(std_vals));
  rep.residual = residual(rep.u, f, L);
  rep.grid_step = 1.0 / grid_n;
  return rep;
}

double residual(const DisplacementField& u, const TorusMap& f, const algebra::IntMatrix& L,
                int eval_grid_n) {
  const int d = u.dim();
  const GridIndexer idx(d, eval_grid_n > 0 ? eval_grid_n : u.grid_n());
  const std::size_t nodes = idx.count();
  Eigen::MatrixXd ld(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ld(i, j) = double(L.at(i, j));
  double worst = 0;
  for (std::size_t p = 0; p < nodes; ++p) {
    TorusPoint x = idx.point_of(p);
    TorusPoint lx(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += ld(i, j) * x[std::size_t(j)];
      lx[std::size_t(i)] = s;
    }
    TorusPoint h_lx = u.apply_lift(lx);       // interpolated h at Lx
    TorusPoint hx = u.apply_lift(x);
    TorusPoint fhx = dynamics::apply_lift<double>(f, hx);
    worst = std::max(worst, torus_dist_inf<double>(h_lx, fhx));
  }
  return worst;
}

DisplacementField invert(const DisplacementField& u, double tau) {
  if (u.norm_sup() >= 0.5) throw std::invalid_argument("invert: norm_sup must be < 0.5");
  const int d = u.dim();
  const GridIndexer& idx = u.indexer();
  const std::size_t nodes = idx.count();
  std::vector<double> w(nodes * std::size_t(d), 0.0);
  for (std::size_t p = 0; p < nodes; ++p) {
    TorusPoint x = idx.point_of(p);
    TorusPoint wp(static_cast<std::size_t>(d), 0.0);
    bool done = false;
    for (int it = 0; it < 200 && !done; ++it) {
      TorusPoint y = x;
      for (int i = 0; i < d; ++i) y[std::size_t(i)] += wp[std::size_t(i)];
      TorusPoint uy = u.eval(y);
      double moved = 0;
      for (int i = 0; i < d; ++i) {
        double nw = -uy[std::size_t(i)];
        moved = std::max(moved, std::abs(nw - wp[std::size_t(i)]));
        wp[std::size_t(i)] = nw;
      }
      if (moved < tau * 0.5) done = true;
    }
    if (!done) throw inversion_error("invert: fixed point did not converge at a grid node");
    TorusPoint y = x;
    for (int i = 0; i < d; ++i) y[std::size_t(i)] += wp[std::size_t(i)];
    TorusPoint hy = u.apply_lift(y);
    if (torus_dist_inf<double>(hy, x) > tau)
      throw inversion_error("invert: residual above tolerance at a grid node");
    for (int i = 0; i < d; ++i) w[p * std::size_t(d) + std::size_t(i)] = wp[std::size_t(i)];
  }
  return DisplacementField(d, u.grid_n(), std::move(w));
}

// ---------------------------------------------------------------------------
// orbit solver

OrbitSolveResult solve_orbit(const TorusMap& f, const algebra::IntMatrix& L, int n_max,
                             const std::vector<TorusPoint>& samples) {
  // Pointwise orbit-window iteration with h_0 = id.  The one-sided sequence
  // f^{-n} o h_0 o L^n diverges for Anosov L (the stable component of
  // id - h is amplified by nu^{-n}), so h_n here is the n-th two-sided
  // sweep of u(Lx) = L u(x) + phi(h(x)) restricted to the L-orbit of x:
  // stable components telescope forward along the orbit, unstable ones
  // backward.  No grid and no interpolation enter; this is the independent
  // counterpart of the spectral solver.
  const int d = f.dim();
  if (L.dim() != d) throw std::invalid_argument("solve_orbit: dim mismatch");
  if (!(f.linear_part() == L))
    throw std::invalid_argument("solve_orbit: f is not homotopic to L");
  if (n_max < 1 || n_max > 120)
    throw capacity_error("solve_orbit: n_max must be in [1, 120] at extended precision");

  // precision budget: n log2(rho_max) + 20 guard bits
  algebra::SpectrumReport spec = algebra::spectrum(L, 106);
  double log2_rho = 0;
  for (const auto& c : spec.classes)
    log2_rho = std::max(log2_rho, std::log2(std::max(1.0, std::abs(to_double(c.modulus)))));
  const int bits_available = std::numeric_limits<ext_real>::digits;
  const double bits_needed = n_max * log2_rho + 20;
  if (bits_needed > bits_available)
    throw precision_error("solve_orbit: needs " + std::to_string(int(bits_needed)) +
                          " bits, extended precision has " + std::to_string(bits_available));

  SpectralSplit split = spectral_split(L);
  const int window = 2 * n_max + 1;  // orbit indices j = -n_max .. n_max
  auto slot = [&](int j) { return std::size_t(j + n_max); };

  // cast the split to extended precision
  std::vector<ext_real> be(std::size_t(d) * d), binve(std::size_t(d) * d), le(std::size_t(d) * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      be[std::size_t(i) * d + j] = ext_real(split.basis(i, j));
      binve[std::size_t(i) * d + j] = ext_real(split.basis_inv(i, j));
      le[std::size_t(i) * d + j] = ext_real(double(L.at(i, j)));
    }

  OrbitSolveResult out;
  out.n_max = n_max;
  out.precision_bits = bits_available;
  for (const auto& x : samples) {
    if (int(x.size()) != d) throw std::invalid_argument("solve_orbit: sample dim mismatch");
    OrbitSample s;
    s.x = x;

    // torus orbit y_j = L^j x, extended precision, wrapped each step
    std::vector<std::vector<ext_real>> orbit(static_cast<std::size_t>(window));
    {
      std::vector<ext_real> cur(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) cur[std::size_t(i)] = ext_real(x[std::size_t(i)]);
      orbit[slot(0)] = cur;
      std::vector<ext_real> fwd = cur;
      const algebra::IntMatrix linv = L.inverse();
      for (int j = 1; j <= n_max; ++j) {
        std::vector<ext_real> nxt(static_cast<std::size_t>(d), ext_real(0));
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < d; ++k)
            nxt[std::size_t(i)] += ext_real(L.at(i, k)) * fwd[std::size_t(k)];
        fwd = wrap01(nxt);
        orbit[slot(j)] = fwd;
      }
      std::vector<ext_real> bwd = cur;
      for (int j = 1; j <= n_max; ++j) {
        std::vector<ext_real> nxt(static_cast<std::size_t>(d), ext_real(0));
        for (int i = 0; i < d; ++i)
          for (int k = 0; k < d; ++k)
            nxt[std::size_t(i)] += ext_real(linv.at(i, k)) * bwd[std::size_t(k)];
        bwd = wrap01(nxt);
        orbit[slot(-j)] = bwd;
      }
    }

    // u in eigen coordinates along the orbit; h_0 = id
    std::vector<std::vector<ext_real>> u(std::size_t(window),
                                         std::vector<ext_real>(static_cast<std::size_t>(d), ext_real(0)));
    std::vector<std::vector<ext_real>> phi(static_cast<std::size_t>(window));
    std::vector<std::vector<ext_real>> unext(static_cast<std::size_t>(window));

    auto phi_hat_at = [&](int j) {
      // B^{-1} (f(h(y_j)) - L h(y_j)) with h(y_j) = y_j + B u[j]
      std::vector<ext_real> h(static_cast<std::size_t>(d), ext_real(0));
      for (int i = 0; i < d; ++i) {
        ext_real acc = orbit[slot(j)][std::size_t(i)];
        for (int k = 0; k < d; ++k) acc += be[std::size_t(i) * d + k] * u[slot(j)][std::size_t(k)];
        h[std::size_t(i)] = acc;
      }
      std::vector<ext_real> fh = dynamics::apply_lift<ext_real>(f, h);
      std::vector<ext_real> ph(static_cast<std::size_t>(d), ext_real(0));
      for (int i = 0; i < d; ++i) {
        ext_real acc = fh[std::size_t(i)];
        for (int k = 0; k < d; ++k) acc -= le[std::size_t(i) * d + k] * h[std::size_t(k)];
        ph[std::size_t(i)] = acc;
      }
      std::vector<ext_real> res(static_cast<std::size_t>(d), ext_real(0));
      for (int i = 0; i < d; ++i) {
        ext_real acc = 0;
        for (int k = 0; k < d; ++k) acc += binve[std::size_t(i) * d + k] * ph[std::size_t(k)];
        res[std::size_t(i)] = acc;
      }
      return res;
    };

    for (int sweep = 1; sweep <= n_max; ++sweep) {
      const int lo = -n_max + sweep - 1, hi = n_max - sweep + 1;  // previous valid range
      for (int j = lo; j <= hi; ++j) phi[slot(j)] = phi_hat_at(j);
      for (int j = lo + 1; j <= hi - 1; ++j) {
        std::vector<ext_real>& o = unext[slot(j)];
        o.assign(static_cast<std::size_t>(d), ext_real(0));
        for (const auto& b : split.blocks) {
          if (b.stable) {
            // c_s(y_j) <- A_s c_s(y_{j-1}) + phi_s(y_{j-1})
            for (int i = 0; i < b.size; ++i) {
              ext_real acc = phi[slot(j - 1)][std::size_t(b.offset + i)];
              for (int k = 0; k < b.size; ++k)
                acc += ext_real(b.action(i, k)) * u[slot(j - 1)][std::size_t(b.offset + k)];
              o[std::size_t(b.offset + i)] = acc;
            }
          } else {
            // c_u(y_j) <- A_u^{-1} (c_u(y_{j+1}) - phi_u(y_j))
            for (int i = 0; i < b.size; ++i) {
              ext_real acc = 0;
              for (int k = 0; k < b.size; ++k)
                acc += ext_real(b.action_inv(i, k)) *
                       (u[slot(j + 1)][std::size_t(b.offset + k)] -
                        phi[slot(j)][std::size_t(b.offset + k)]);
              o[std::size_t(b.offset + i)] = acc;
            }
          }
        }
      }
      // Cauchy increment |h_{sweep} - h_{sweep-1}| at the base point j = 0
      ext_real inc2 = 0;
      for (int i = 0; i < d; ++i) {
        ext_real diff = 0;
        for (int k = 0; k < d; ++k)
          diff += be[std::size_t(i) * d + k] *
                  (unext[slot(0)][std::size_t(k)] - u[slot(0)][std::size_t(k)]);
        inc2 += diff * diff;
      }
      s.increments.push_back(to_double(sqrt(inc2)));
      for (int j = lo + 1; j <= hi - 1; ++j) u[slot(j)] = unext[slot(j)];
    }

    s.h_x.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      ext_real acc = orbit[slot(0)][std::size_t(i)];
      for (int k = 0; k < d; ++k) acc += be[std::size_t(i) * d + k] * u[slot(0)][std::size_t(k)];
      s.h_x[std::size_t(i)] = to_double(wrap01(acc));
    }
    // per-step rate as a 4-step geometric mean; raw step ratios oscillate
    double ratio = 0;
    for (std::size_t n = 5; n + 4 < s.increments.size(); ++n)
      if (s.increments[n] > 1e-13 && s.increments[n + 4] > 0)
        ratio = std::max(ratio, std::pow(s.increments[n + 4] / s.increments[n], 0.25));
    s.contraction_ratio = ratio;
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace conjugacy
}  // namespace toruslab
