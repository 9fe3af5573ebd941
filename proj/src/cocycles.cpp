#include "toruslab/cocycles.hpp"

#include <algorithm>
#include <cmath>

namespace toruslab {
namespace cocycles {

namespace {

// one cocycle step: Z = Df(x) Q, modified Gram-Schmidt, logs += log r_jj,
// x advances to f(x); buffers are caller-owned to keep the hot loop clean
void qr_push_step(const TorusMap& f, TorusPoint& x, std::vector<double>& q, int d,
                  double* logs) {
  SmallMat<double> a = dynamics::differential_lift<double>(f, x);
  std::vector<double> z(std::size_t(d) * d, 0.0);
  // z_col_j = A * q_col_j (columns stored contiguously)
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int k = 0; k < d; ++k) s += a.at(i, k) * q[std::size_t(j) * d + k];
      z[std::size_t(j) * d + i] = s;
    }
  for (int j = 0; j < d; ++j) {
    double* vj = z.data() + std::size_t(j) * d;
    for (int i = 0; i < j; ++i) {
      const double* vi = z.data() + std::size_t(i) * d;
      double dot = 0;
      for (int k = 0; k < d; ++k) dot += vi[k] * vj[k];
      for (int k = 0; k < d; ++k) vj[k] -= dot * vi[k];
    }
    double nrm = 0;
    for (int k = 0; k < d; ++k) nrm += vj[k] * vj[k];
    nrm = std::sqrt(nrm);
    if (nrm == 0) throw numeric_error("lyapunov_qr: frame collapsed");
    for (int k = 0; k < d; ++k) vj[k] /= nrm;
    if (logs) logs[j] += std::log(nrm);
  }
  q.swap(z);
  x = dynamics::apply(f, x);
}

std::vector<double> identity_frame(int d) {
  std::vector<double> q(std::size_t(d) * d, 0.0);
  for (int i = 0; i < d; ++i) q[std::size_t(i) * d + i] = 1.0;
  return q;
}

// fixed generic orthonormal frame, deterministic across runs
std::vector<double> generic_frame(int d) {
  CounterRng rng(0xF1A6DEED, std::uint64_t(d));
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = rng.next_symmetric();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  Eigen::MatrixXd q = qr.householderQ();
  std::vector<double> out(std::size_t(d) * d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) out[std::size_t(j) * d + i] = q(i, j);
  return out;
}

Eigen::MatrixXd frame_to_eigen(const std::vector<double>& q, int d, int cols) {
  Eigen::MatrixXd m(d, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < d; ++i) m(i, j) = q[std::size_t(j) * d + i];
  return m;
}

}  // namespace

std::vector<double> lyapunov_qr(const TorusMap& f, const TorusPoint& x0, int n) {
  if (n < 1) throw std::invalid_argument("lyapunov_qr: n must be >= 1");
  const int d = f.dim();
  TorusPoint x = x0;
  std::vector<double> q = identity_frame(d);
  std::vector<double> logs(static_cast<std::size_t>(d), 0.0);
  // let the frame align with the Oseledets flag before accumulating, else
  // the transient pollutes the average at O(1/n)
  const int burn = std::min(200, std::max(20, n / 10));
  for (int step = 0; step < burn; ++step) qr_push_step(f, x, q, d, nullptr);
  for (int step = 0; step < n; ++step) qr_push_step(f, x, q, d, logs.data());
  for (auto& v : logs) v /= n;
  std::sort(logs.begin(), logs.end(), std::greater<double>());
  return logs;
}

CocycleStats volume_lyapunov(const TorusMap& f, int n_samples, int n, std::uint64_t seed,
                             int threads) {
  if (n_samples < 1) throw std::invalid_argument("volume_lyapunov: n_samples must be >= 1");
  const int d = f.dim();
  std::vector<std::vector<double>> per_sample(static_cast<std::size_t>(n_samples));
  parallel_for(std::size_t(n_samples), threads, [&](std::size_t s) {
    CounterRng rng(seed, s);
    TorusPoint x0(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) x0[std::size_t(i)] = rng.next_unit();
    per_sample[s] = lyapunov_qr(f, x0, n);
  });
  CocycleStats st;
  st.n_iters = n;
  st.n_samples = n_samples;
  st.seed = seed;
  st.exponents.assign(static_cast<std::size_t>(d), 0.0);
  st.stderrs.assign(static_cast<std::size_t>(d), 0.0);
  for (const auto& e : per_sample)
    for (int i = 0; i < d; ++i) st.exponents[std::size_t(i)] += e[std::size_t(i)];
  for (auto& v : st.exponents) v /= n_samples;
  if (n_samples > 1) {
    for (const auto& e : per_sample)
      for (int i = 0; i < d; ++i) {
        double dlt = e[std::size_t(i)] - st.exponents[std::size_t(i)];
        st.stderrs[std::size_t(i)] += dlt * dlt;
      }
    for (auto& v : st.stderrs) v = std::sqrt(v / (n_samples - 1) / n_samples);
  }
  return st;
}

// ---------------------------------------------------------------------------

ClassLayout class_layout(const algebra::IntMatrix& L) {
  algebra::SpectrumReport spec = algebra::spectrum(L, 106);
  ClassLayout lay;
  lay.dim_total = L.dim();
  for (const auto& c : spec.classes) {
    lay.dims.push_back(c.multiplicity);
    lay.moduli.push_back(to_double(c.modulus));
  }
  return lay;
}

int ClassLayout::fast_dim(int k) const {
  int s = 0;
  for (std::size_t i = std::size_t(k); i < dims.size(); ++i) s += dims[i];
  return s;
}

int ClassLayout::slow_dim(int k) const {
  int s = 0;
  for (int i = 0; i <= k; ++i) s += dims[std::size_t(i)];
  return s;
}

namespace {

// push the frame by Df at a fixed point (no orbit advance)
void qr_push_at(const TorusMap& f, const TorusPoint& at, std::vector<double>& q, int d) {
  TorusPoint scratch = at;
  qr_push_step(f, scratch, q, d, nullptr);
}

}  // namespace

Eigen::MatrixXd fast_flag_at(const TorusMap& f, const TorusPoint& x, int m, int n_power) {
  const int d = f.dim();
  // Backward orbit first; the frame is then pushed along the STORED points.
  // Re-running f forward would amplify roundoff by rho^j and evaluate the
  // differentials at garbage points; the stored chain is a 1e-13 pseudo-orbit
  // ending exactly at x.
  std::vector<double> z = x;
  const double tol = 1e-13;
  std::vector<TorusPoint> orbit(static_cast<std::size_t>(n_power));
  for (int i = n_power - 1; i >= 0; --i) {
    z = dynamics::inverse_apply<double>(f, z, tol);
    orbit[std::size_t(i)] = z;  // orbit[0] = f^{-n}(x), ..., orbit[n-1] = f^{-1}(x)
  }
  std::vector<double> q = generic_frame(d);
  for (int s = 0; s < n_power; ++s) qr_push_at(f, orbit[std::size_t(s)], q, d);
  return frame_to_eigen(q, d, m);
}

Eigen::MatrixXd slow_flag_at(const TorusMap& f, const TorusPoint& x, int m, int n_power) {
  const int d = f.dim();
  // forward orbit, then transport a frame back with Df^{-1}
  std::vector<TorusPoint> orbit;
  orbit.reserve(std::size_t(n_power) + 1);
  TorusPoint cur = x;
  orbit.push_back(cur);
  for (int s = 0; s < n_power; ++s) {
    cur = dynamics::apply(f, cur);
    orbit.push_back(cur);
  }
  std::vector<double> q = generic_frame(d);
  for (int s = n_power; s >= 1; --s) {
    SmallMat<double> a = dynamics::differential_lift<double>(f, orbit[std::size_t(s - 1)]);
    // columns <- A^{-1} columns, then orthonormalize
    std::vector<double> z(std::size_t(d) * d);
    for (int j = 0; j < d; ++j) {
      std::vector<double> col(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) col[std::size_t(i)] = q[std::size_t(j) * d + i];
      std::vector<double> sol = solve_linear(a, col);
      for (int i = 0; i < d; ++i) z[std::size_t(j) * d + i] = sol[std::size_t(i)];
    }
    for (int j = 0; j < d; ++j) {
      double* vj = z.data() + std::size_t(j) * d;
      for (int i = 0; i < j; ++i) {
        const double* vi = z.data() + std::size_t(i) * d;
        double dot = 0;
        for (int k = 0; k < d; ++k) dot += vi[k] * vj[k];
        for (int k = 0; k < d; ++k) vj[k] -= dot * vi[k];
      }
      double nrm = 0;
      for (int k = 0; k < d; ++k) nrm += vj[k] * vj[k];
      nrm = std::sqrt(nrm);
      for (int k = 0; k < d; ++k) vj[k] /= nrm;
    }
    q.swap(z);
  }
  return frame_to_eigen(q, d, m);
}

Eigen::MatrixXd intersect_subspaces(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                    int k_out, double angle_floor) {
  const int d = int(a.rows());
  const int total = int(a.cols() + b.cols());
  Eigen::MatrixXd m(d, total);
  m << a, -b;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  // V has `total` columns; singular values beyond min(d, total) are zero
  std::vector<double> sv(static_cast<std::size_t>(total), 0.0);
  for (int i = 0; i < int(svd.singularValues().size()); ++i)
    sv[std::size_t(i)] = svd.singularValues()(i);
  if (total < k_out) throw conditioning_error("intersect_subspaces: not enough directions");
  // smallest k_out values are the intersection; the next one must separate
  double worst = sv[std::size_t(total - k_out)];
  double sep = total > k_out ? sv[std::size_t(total - 1 - k_out)] : 1.0;
  if (sep < angle_floor)
    throw conditioning_error("intersect_subspaces: principal angle below the floor (" +
                             std::to_string(sep) + ")");
  if (worst > 0.1)
    throw conditioning_error("intersect_subspaces: expected intersection is not close (" +
                             std::to_string(worst) + ")");
  Eigen::MatrixXd dirs(d, k_out);
  for (int j = 0; j < k_out; ++j) {
    Eigen::VectorXd v = svd.matrixV().col(total - 1 - j);
    dirs.col(j) = a * v.head(a.cols());
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dirs);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, k_out);
}

Eigen::MatrixXd canonical_basis(const Eigen::MatrixXd& subspace_basis,
                                const Eigen::MatrixXd& reference) {
  // project the reference onto the subspace and re-orthonormalize;
  // deterministic and continuous wherever the subspace stays transversal
  Eigen::MatrixXd p = subspace_basis * (subspace_basis.transpose() * reference);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(p);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(p.rows(), p.cols());
  // fix the sign of each column against the reference
  for (int j = 0; j < q.cols(); ++j)
    if (q.col(j).dot(reference.col(j)) < 0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd flag_at(const TorusMap& f, const algebra::IntMatrix& L, int k,
                        const TorusPoint& x, int n_power) {
  ClassLayout lay = class_layout(L);
  if (k < 0 || k >= int(lay.dims.size()))
    throw std::invalid_argument("flag_at: class index out of range");
  const int kd = lay.dims[std::size_t(k)];
  Eigen::MatrixXd fast = fast_flag_at(f, x, lay.fast_dim(k), n_power);
  if (lay.fast_dim(k) == kd) return fast;  // fastest class needs no intersection
  Eigen::MatrixXd slow = slow_flag_at(f, x, lay.slow_dim(k), n_power);
  if (lay.slow_dim(k) == kd) return slow;
  return intersect_subspaces(fast, slow, kd);
}

SubBundleField flag_estimate(const TorusMap& f, const algebra::IntMatrix& L, int k, int grid_n,
                             int n_power, double defect_bound, int threads) {
  ClassLayout lay = class_layout(L);
  if (k < 0 || k >= int(lay.dims.size()))
    throw std::invalid_argument("flag_estimate: class index out of range");
  const int d = f.dim();
  const int kd = lay.dims[std::size_t(k)];

  // gauge reference: the exact class subspace of L
  conjugacy::SpectralSplit split = conjugacy::spectral_split(L);
  Eigen::MatrixXd ref(d, 0);
  for (std::size_t b = 0; b < split.blocks.size(); ++b)
    if (std::abs(split.blocks[b].modulus - lay.moduli[std::size_t(k)]) <
        1e-9 * lay.moduli[std::size_t(k)]) {
      Eigen::MatrixXd onb = split.block_onb(int(b));
      Eigen::MatrixXd merged(d, ref.cols() + onb.cols());
      merged << ref, onb;
      ref = merged;
    }
  if (ref.cols() != kd) throw numeric_error("flag_estimate: class reference mismatch");

  SubBundleField field;
  field.dim = d;
  field.k = kd;
  field.idx = GridIndexer(d, grid_n);
  const std::size_t nodes = field.idx.count();
  field.bases.assign(nodes * std::size_t(d) * kd, 0.0);

  parallel_for(nodes, threads, [&](std::size_t p) {
    TorusPoint x = field.idx.point_of(p);
    Eigen::MatrixXd e = flag_at(f, L, k, x, n_power);
    e = canonical_basis(e, ref);
    double* out = field.bases.data() + p * std::size_t(d) * kd;
    for (int j = 0; j < kd; ++j)
      for (int i = 0; i < d; ++i) out[std::size_t(j) * d + i] = e(i, j);
  });

  // continuity defect: max subspace distance between axis neighbors
  double defect = 0;
  for (std::size_t p = 0; p < nodes; ++p) {
    std::vector<int> c = field.idx.coords_of(p);
    Eigen::MatrixXd qa = field.basis_at_node(p);
    for (int axis = 0; axis < d; ++axis) {
      std::vector<int> c2 = c;
      c2[std::size_t(axis)] = (c2[std::size_t(axis)] + 1) % grid_n;
      Eigen::MatrixXd qb = field.basis_at_node(field.idx.node_of(c2));
      Eigen::MatrixXd r = qb - qa * (qa.transpose() * qb);
      double dist = r.norm();
      defect = std::max(defect, dist);
    }
  }
  field.continuity_defect = defect;
  if (defect > defect_bound)
    throw numeric_error("flag_estimate: continuity defect " + std::to_string(defect) +
                        " above bound " + std::to_string(defect_bound));
  return field;
}

Eigen::MatrixXd SubBundleField::basis_at_node(std::size_t node) const {
  Eigen::MatrixXd m(dim, k);
  const double* v = bases.data() + node * std::size_t(dim) * k;
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < dim; ++i) m(i, j) = v[std::size_t(j) * dim + i];
  return m;
}

Eigen::MatrixXd SubBundleField::basis_near(const TorusPoint& x) const {
  std::vector<int> c(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    int b = int(std::floor(wrap01(x[std::size_t(i)]) * idx.n + 0.5));
    c[std::size_t(i)] = ((b % idx.n) + idx.n) % idx.n;
  }
  return basis_at_node(idx.node_of(c));
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd class_reference_frame(const algebra::IntMatrix& L, int k) {
  ClassLayout lay = class_layout(L);
  if (k < 0 || k >= int(lay.dims.size()))
    throw std::invalid_argument("class_reference_frame: class index out of range");
  conjugacy::SpectralSplit split = conjugacy::spectral_split(L);
  const int d = L.dim();
  Eigen::MatrixXd ref(d, 0);
  for (const auto& b : split.blocks)
    if (std::abs(b.modulus - lay.moduli[std::size_t(k)]) < 1e-9 * lay.moduli[std::size_t(k)]) {
      Eigen::MatrixXd merged(d, ref.cols() + b.size);
      merged << ref, split.basis.middleCols(b.offset, b.size);
      ref = merged;
    }
  if (ref.cols() != lay.dims[std::size_t(k)])
    throw numeric_error("class_reference_frame: class dimension mismatch");
  return ref;
}

BunchingReport bunching_check(const TorusMap& f, const SubBundleField& E, double beta,
                              double nu, double nu_hat, const Eigen::MatrixXd& reference) {
  if (!(nu < 1.0) || !(nu_hat > 1.0))
    throw std::invalid_argument("bunching_check: need nu < 1 < nu_hat");
  const bool use_ref = reference.cols() == E.k;
  BunchingReport rep;
  rep.nu = nu;
  rep.nu_hat = nu_hat;
  rep.beta = beta;
  rep.margin_nu = std::numeric_limits<double>::infinity();
  rep.margin_nu_hat = std::numeric_limits<double>::infinity();
  const std::size_t nodes = E.idx.count();
  for (std::size_t p = 0; p < nodes; ++p) {
    TorusPoint x = E.idx.point_of(p);
    Eigen::MatrixXd q = E.basis_at_node(p);
    SmallMat<double> a = dynamics::differential_lift<double>(f, x);
    Eigen::MatrixXd ad(E.dim, E.dim);
    for (int i = 0; i < E.dim; ++i)
      for (int j = 0; j < E.dim; ++j) ad(i, j) = a.at(i, j);
    double ratio;
    if (use_ref) {
      // F in reference coordinates: C_{fx}^{-1} (Q_{fx}^T A Q_x) C_x
      TorusPoint fx = dynamics::apply(f, x);
      Eigen::MatrixXd qf = E.basis_near(fx);
      Eigen::MatrixXd cx = q.transpose() * reference;
      Eigen::MatrixXd cf = qf.transpose() * reference;
      Eigen::MatrixXd m = cf.inverse() * (qf.transpose() * ad * q) * cx;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
      ratio = svd.singularValues()(0) / svd.singularValues()(E.k - 1);
    } else {
      Eigen::MatrixXd z = ad * q;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(z);
      ratio = svd.singularValues()(0) / svd.singularValues()(E.k - 1);
    }
    rep.margin_nu = std::min(rep.margin_nu, 1.0 - ratio * std::pow(nu, beta));
    rep.margin_nu_hat = std::min(rep.margin_nu_hat, 1.0 - ratio * std::pow(nu_hat, -beta));
  }
  rep.margin = std::min(rep.margin_nu, rep.margin_nu_hat);
  return rep;
}

std::pair<double, double> default_bunching_rates(const CocycleStats& stats) {
  if (stats.exponents.empty()) throw std::invalid_argument("default_bunching_rates: no data");
  double chi_max = stats.exponents.front();
  double chi_min = stats.exponents.back();
  if (!(chi_min < 0 && chi_max > 0))
    throw std::invalid_argument("default_bunching_rates: spectrum is not hyperbolic");
  double nu = std::exp(chi_min) * 1.1;
  double nu_hat = std::exp(chi_max) / 1.1;
  if (!(nu < 1.0) || !(nu_hat > 1.0))
    throw numeric_error("default_bunching_rates: safety factor crossed 1");
  return {nu, nu_hat};
}

// ---------------------------------------------------------------------------

DistortionSeries distortion(const TorusMap& f, const Eigen::MatrixXd& plane0,
                            const TorusPoint& x, int n, BundleTransport transport,
                            int burn_in, const Eigen::MatrixXd& reference) {
  const int d = f.dim();
  const int k = int(plane0.cols());
  if (k < 1 || k > d) throw std::invalid_argument("distortion: bad plane dimension");
  const bool use_ref = reference.cols() == k;

  Eigen::MatrixXd q = plane0;
  {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
    q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
  }
  TorusPoint cur = x;
  if (transport == BundleTransport::transported && burn_in > 0) {
    // settle the plane onto the bundle along a stored backward pseudo-orbit
    // ending exactly at x (re-running f forward would evaluate differentials
    // at points off the orbit by rho^j times roundoff)
    const double tol = 1e-13;
    std::vector<TorusPoint> back(static_cast<std::size_t>(burn_in));
    std::vector<double> z = x;
    for (int i = burn_in - 1; i >= 0; --i) {
      z = dynamics::inverse_apply<double>(f, z, tol);
      back[std::size_t(i)] = z;
    }
    for (int i = 0; i < burn_in; ++i) {
      SmallMat<double> a = dynamics::differential_lift<double>(f, back[std::size_t(i)]);
      Eigen::MatrixXd ad(d, d);
      for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) ad(r, c) = a.at(r, c);
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(ad * q);
      q = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
    }
  }

  DistortionSeries out;
  Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(k, k);
  const Eigen::MatrixXd q0 = q;
  const Eigen::MatrixXd c_start = use_ref ? Eigen::MatrixXd(q.transpose() * reference)
                                          : Eigen::MatrixXd::Identity(k, k);
  double logdet_acc = 0;   // log |det| of the raw product
  double lognorm_acc = 0;  // accumulated rescaling, so prod stays O(1)
  for (int j = 0; j < n; ++j) {
    SmallMat<double> a = dynamics::differential_lift<double>(f, cur);
    Eigen::MatrixXd ad(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) ad(r, c) = a.at(r, c);
    Eigen::MatrixXd z = ad * q;
    Eigen::MatrixXd qn;
    if (transport == BundleTransport::transported) {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
      qn = qr.householderQ() * Eigen::MatrixXd::Identity(d, k);
    } else {
      qn = q0;
    }
    Eigen::MatrixXd m = qn.transpose() * z;  // k x k compression, onb gauge
    logdet_acc += std::log(std::abs(m.determinant()));
    prod = m * prod;
    double scale = prod.norm();
    if (scale > 0) {
      prod /= scale;
      lognorm_acc += std::log(scale);
    }
    Eigen::MatrixXd measured = prod;
    double logdet_measured = logdet_acc - k * lognorm_acc;
    if (use_ref) {
      // express F^n in reference coordinates; the onb gauge cancels exactly
      Eigen::MatrixXd c_end = qn.transpose() * reference;
      measured = c_end.inverse() * prod * c_start;
      logdet_measured += std::log(std::abs(c_start.determinant())) -
                         std::log(std::abs(c_end.determinant()));
    }
    double log_kappa;
    if (k == 2) {
      // sigma_min can underflow for growing distortion; use
      // sigma_min = |det| / sigma_max and stay in log space
      double s1 = measured.operatorNorm();
      log_kappa = 2 * std::log(s1) - logdet_measured;
    } else {
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(measured);
      log_kappa = std::log(svd.singularValues()(0) / svd.singularValues()(k - 1));
    }
    out.log_distortion.push_back(log_kappa);
    q = qn;
    cur = dynamics::apply(f, cur);
  }
  out.value = std::exp(out.log_distortion.back());
  // least squares slope of log kappa against n
  const int m = int(out.log_distortion.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 0; j < m; ++j) {
    double xx = j + 1;
    sx += xx;
    sy += out.log_distortion[std::size_t(j)];
    sxx += xx * xx;
    sxy += xx * out.log_distortion[std::size_t(j)];
  }
  out.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return out;
}

DistortionSeries distortion_averaged(const TorusMap& f, const algebra::IntMatrix& L, int k,
                                     int n, int n_rep, std::uint64_t seed,
                                     BundleTransport transport, int burn_in) {
  ClassLayout lay = class_layout(L);
  if (k < 0 || k >= int(lay.dims.size()))
    throw std::invalid_argument("distortion_averaged: class index out of range");
  const int d = f.dim();
  const int kd = lay.dims[std::size_t(k)];
  Eigen::MatrixXd plane = frame_to_eigen(generic_frame(d), d, kd);
  Eigen::MatrixXd ref = class_reference_frame(L, k);

  DistortionSeries mean;
  mean.log_distortion.assign(static_cast<std::size_t>(n), 0.0);
  for (int rep = 0; rep < n_rep; ++rep) {
    CounterRng rng(seed, std::uint64_t(rep));
    TorusPoint x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) x[std::size_t(i)] = rng.next_unit();
    DistortionSeries s = distortion(f, plane, x, n, transport, burn_in, ref);
    for (int j = 0; j < n; ++j) mean.log_distortion[std::size_t(j)] += s.log_distortion[std::size_t(j)];
  }
  for (auto& v : mean.log_distortion) v /= n_rep;
  mean.value = std::exp(mean.log_distortion.back());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int j = 0; j < n; ++j) {
    double xx = j + 1;
    sx += xx;
    sy += mean.log_distortion[std::size_t(j)];
    sxx += xx * xx;
    sxy += xx * mean.log_distortion[std::size_t(j)];
  }
  mean.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return mean;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd control_plane(const algebra::IntMatrix& L) {
  const int d = L.dim();
  Eigen::MatrixXd ld(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ld(i, j) = double(L.at(i, j));
  CounterRng rng(0xC0417801, 0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::MatrixXd m(d, 2);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < 2; ++j) m(i, j) = rng.next_symmetric();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, 2);
    Eigen::Matrix2d comp = q.transpose() * ld * q;
    double tr = comp.trace(), det = comp.determinant();
    double disc = tr * tr - 4 * det;
    if (disc <= 0 || std::abs(det) < 1e-6) continue;
    double sq = std::sqrt(disc);
    double m1 = std::abs((tr + sq) / 2), m2 = std::abs((tr - sq) / 2);
    if (m2 == 0) continue;
    if (std::max(m1, m2) / std::min(m1, m2) >= 1.3) return q;
  }
  throw conditioning_error("control_plane: no hyperbolic compression found");
}

const char* projective_class_name(ProjectiveClass c) {
  switch (c) {
    case ProjectiveClass::has_fixed_line: return "has_fixed_line";
    case ProjectiveClass::has_invariant_line_pair: return "has_invariant_line_pair";
    default: return "neither";
  }
}

ProjectiveClass projective_obstruction(const Eigen::Matrix2d& m) {
  double tr = m.trace();
  double det = m.determinant();
  if (det == 0) throw std::invalid_argument("projective_obstruction: singular matrix");
  double disc = tr * tr - 4 * det;
  double scale = std::max(1.0, m.squaredNorm());
  if (std::abs(disc) < 1e-10 * scale)
    throw indeterminate_error("projective_obstruction: near-degenerate discriminant");
  if (disc > 0) return ProjectiveClass::has_fixed_line;
  // complex pair r e^{+-i theta}: theta = pi/2 mod pi means trace = 0
  if (std::abs(tr) < 1e-10 * std::sqrt(scale)) return ProjectiveClass::has_invariant_line_pair;
  return ProjectiveClass::neither;
}

}  // namespace cocycles
}  // namespace toruslab
