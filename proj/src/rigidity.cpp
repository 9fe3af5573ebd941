#include "toruslab/rigidity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace toruslab {
namespace rigidity {

namespace {

Eigen::MatrixXd to_eigen(const SmallMat<double>& a) {
  Eigen::MatrixXd m(a.n, a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) m(i, j) = a.at(i, j);
  return m;
}

// invariant subspace of the return derivative A = Df^n(p) for the eigenvalue
// cluster with log|mu| near target; exact up to the eigensolver
Eigen::MatrixXd return_map_class_subspace(const Eigen::MatrixXd& a, double target_log_mod,
                                          int expect_dim) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(a);
  if (es.info() != Eigen::Success)
    throw numeric_error("livsic: eigensolver failed on the return derivative");
  const int d = int(a.rows());
  std::vector<std::pair<double, int>> order;
  for (int i = 0; i < d; ++i)
    order.push_back({std::abs(std::log(std::abs(es.eigenvalues()(i))) - target_log_mod), i});
  std::sort(order.begin(), order.end());

  Eigen::MatrixXd cols(d, expect_dim);
  int c = 0;
  std::vector<bool> used(static_cast<std::size_t>(d), false);
  for (const auto& [dist, i] : order) {
    if (c == expect_dim) break;
    if (used[std::size_t(i)]) continue;
    used[std::size_t(i)] = true;
    std::complex<double> lam = es.eigenvalues()(i);
    if (std::abs(lam.imag()) < 1e-12 * std::max(1.0, std::abs(lam.real()))) {
      Eigen::VectorXcd v = es.eigenvectors().col(i);
      std::complex<double> phase = 1.0;
      double best = 0;
      for (int r = 0; r < d; ++r)
        if (std::abs(v(r)) > best) {
          best = std::abs(v(r));
          phase = std::conj(v(r)) / std::abs(v(r));
        }
      cols.col(c++) = (v * phase).real();
    } else {
      if (c + 2 > expect_dim) throw numeric_error("livsic: class subspace extraction mismatch");
      Eigen::VectorXcd v = es.eigenvectors().col(i);
      cols.col(c++) = v.real();
      cols.col(c++) = v.imag();
      for (int j = 0; j < d; ++j)
        if (!used[std::size_t(j)] &&
            std::abs(es.eigenvalues()(j) - std::conj(lam)) < 1e-8 * std::abs(lam)) {
          used[std::size_t(j)] = true;
          break;
        }
    }
  }
  if (c != expect_dim) throw numeric_error("livsic: class subspace extraction failed");
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(cols);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, expect_dim);
}

}  // namespace

ObstructionReport livsic_obstruction(const TorusMap& f, const algebra::IntMatrix& L,
                                     int class_k, int max_period, int max_orbits_per_period,
                                     double refine_tol) {
  const int d = f.dim();
  cocycles::ClassLayout lay = cocycles::class_layout(L);
  if (class_k < 0 || class_k >= int(lay.dims.size()))
    throw std::invalid_argument("livsic_obstruction: class index out of range");
  const int kd = lay.dims[std::size_t(class_k)];
  const double log_mod = std::log(lay.moduli[std::size_t(class_k)]);

  ObstructionReport rep;
  rep.logdet_class = kd * log_mod;
  rep.period_counts.assign(static_cast<std::size_t>(max_period), 0);

  for (int n = 1; n <= max_period; ++n) {
    std::vector<std::vector<big_rat>> pts;
    try {
      pts = algebra::periodic_points(L, n, big_int(max_orbits_per_period) * n * 4);
    } catch (const capacity_error&) {
      break;  // inventory cap reached; lower periods are already recorded
    }
    std::set<std::vector<big_rat>> seen;
    int orbits_this_period = 0;
    for (const auto& q : pts) {
      if (seen.count(q)) continue;
      // exact orbit of q under L
      std::vector<std::vector<big_rat>> orbit{q};
      for (int s = 1; s < n; ++s) {
        const auto& prev = orbit.back();
        std::vector<big_rat> next(static_cast<std::size_t>(d), big_rat(0));
        for (int i = 0; i < d; ++i) {
          big_rat acc(0);
          for (int j = 0; j < d; ++j) acc += big_rat(L.at(i, j)) * prev[std::size_t(j)];
          big_int num = numerator(acc), den = denominator(acc);
          big_int fl = num / den;
          if (num < 0 && fl * den != num) --fl;
          next[std::size_t(i)] = acc - big_rat(fl);
        }
        orbit.push_back(std::move(next));
      }
      bool minimal = true;
      for (int s = 1; s < n && minimal; ++s)
        if (orbit[std::size_t(s)] == q) minimal = false;
      for (const auto& o : orbit) seen.insert(o);
      if (!minimal) continue;
      if (orbits_this_period >= max_orbits_per_period) break;
      ++orbits_this_period;

      OrbitObstruction ob;
      ob.period = n;
      TorusPoint seed(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) seed[std::size_t(i)] = double(orbit[0][std::size_t(i)]);
      try {
        // retry ladder with small deterministic jitters; a refined point must
        // stay near its seed so orbits keep their identity
        TorusPoint p;
        bool found = false;
        std::string last_err;
        for (int attempt = 0; attempt < 5 && !found; ++attempt) {
          TorusPoint s = seed;
          if (attempt > 0) {
            CounterRng jrng(0x5eed ^ std::uint64_t(n * 131 + orbits_this_period),
                            std::uint64_t(attempt));
            for (int i = 0; i < d; ++i) s[std::size_t(i)] += 0.02 * jrng.next_symmetric();
          }
          try {
            TorusPoint cand = dynamics::refine_periodic(f, s, n, refine_tol);
            if (torus_dist_inf<double>(cand, seed) < 0.25) {
              p = cand;
              found = true;
            } else {
              last_err = "refined point left the seed neighborhood";
            }
          } catch (const numeric_error& e) {
            last_err = e.what();
          }
        }
        if (!found) throw refinement_error("livsic: " + last_err);
        ob.point = p;
        ob.refined = true;
        TorusPoint cur = p;
        Eigen::MatrixXd ret = Eigen::MatrixXd::Identity(d, d);
        double vol_sum = 0;
        std::vector<Eigen::MatrixXd> diffs;
        for (int s = 0; s < n; ++s) {
          Eigen::MatrixXd df = to_eigen(dynamics::differential_lift<double>(f, cur));
          diffs.push_back(df);
          vol_sum += std::log(std::abs(df.determinant()));
          ret = df * ret;
          cur = dynamics::apply(f, cur);
        }
        ob.volume_defect = std::abs(vol_sum);
        // moving orthonormal basis around the loop, seeded with the invariant
        // subspace of the return derivative; the gauge cancels in |det|
        Eigen::MatrixXd qq = return_map_class_subspace(ret, n * log_mod, kd);
        double jac_sum = 0;
        for (int s = 0; s < n; ++s) {
          Eigen::MatrixXd z = diffs[std::size_t(s)] * qq;
          Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
          Eigen::MatrixXd qn = qr.householderQ() * Eigen::MatrixXd::Identity(d, kd);
          Eigen::MatrixXd m = qn.transpose() * z;
          jac_sum += std::log(std::abs(m.determinant()));
          qq = qn;
        }
        ob.value = std::abs(jac_sum - n * rep.logdet_class);
        rep.max_obstruction = std::max(rep.max_obstruction, ob.value);
        rep.max_volume_defect = std::max(rep.max_volume_defect, ob.volume_defect);
        rep.period_counts[std::size_t(n - 1)] += 1;
        ++rep.n_orbits;
      } catch (const numeric_error& e) {
        ob.refined = false;
        ob.warning = e.what();
        ++rep.n_failed;
      }
      rep.orbits.push_back(std::move(ob));
    }
  }
  return rep;
}

JacobianAverage volume_jacobian_average(const TorusMap& f, const algebra::IntMatrix& L,
                                        int class_k, int n, int n_samples, std::uint64_t seed,
                                        int burn_in) {
  const int d = f.dim();
  cocycles::ClassLayout lay = cocycles::class_layout(L);
  const int kd = lay.dims[std::size_t(class_k)];
  if (lay.fast_dim(class_k) != kd)
    throw unsupported_error(
        "volume_jacobian_average: the transported basis assumes the class is the fastest of "
        "its dimension");
  std::vector<double> per_sample(static_cast<std::size_t>(n_samples), 0.0);
  for (int s = 0; s < n_samples; ++s) {
    CounterRng rng(seed, std::uint64_t(s));
    TorusPoint x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) x[std::size_t(i)] = rng.next_unit();
    const double tol = 1e-13;
    std::vector<TorusPoint> back(static_cast<std::size_t>(burn_in));
    std::vector<double> z = x;
    for (int i = burn_in - 1; i >= 0; --i) {
      z = dynamics::inverse_apply<double>(f, z, tol);
      back[std::size_t(i)] = z;
    }
    Eigen::MatrixXd q = cocycles::class_reference_frame(L, class_k);
    {
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(q);
      q = qr.householderQ() * Eigen::MatrixXd::Identity(d, kd);
    }
    for (int i = 0; i < burn_in; ++i) {
      Eigen::MatrixXd df = to_eigen(dynamics::differential_lift<double>(f, back[std::size_t(i)]));
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(df * q);
      q = qr.householderQ() * Eigen::MatrixXd::Identity(d, kd);
    }
    TorusPoint cur = x;
    double acc = 0;
    for (int j = 0; j < n; ++j) {
      Eigen::MatrixXd df = to_eigen(dynamics::differential_lift<double>(f, cur));
      Eigen::MatrixXd zf = df * q;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(zf);
      Eigen::MatrixXd qn = qr.householderQ() * Eigen::MatrixXd::Identity(d, kd);
      Eigen::MatrixXd m = qn.transpose() * zf;
      acc += std::log(std::abs(m.determinant()));
      q = qn;
      cur = dynamics::apply(f, cur);
    }
    per_sample[std::size_t(s)] = acc / n;
  }
  JacobianAverage out;
  out.n_iters = n;
  out.n_samples = n_samples;
  for (double v : per_sample) out.mean += v;
  out.mean /= n_samples;
  if (n_samples > 1) {
    double var = 0;
    for (double v : per_sample) var += (v - out.mean) * (v - out.mean);
    out.stderr_of_mean = std::sqrt(var / (n_samples - 1) / n_samples);
  }
  return out;
}

// ---------------------------------------------------------------------------

DensityRatio density_ratio(const TorusMap& f, const algebra::IntMatrix& L, int class_k,
                           const TorusPoint& x, const TorusPoint& y, double tau,
                           int max_depth, int burn_in) {
  const int d = f.dim();
  cocycles::ClassLayout lay = cocycles::class_layout(L);
  const int kd = lay.dims[std::size_t(class_k)];
  if (lay.fast_dim(class_k) != kd)
    throw unsupported_error("density_ratio: class must be the fastest of its dimension");

  if (torus_dist_2(x, y) == 0.0) return DensityRatio{1.0, 0, 0.0};

  const double tol = 1e-13;
  const int total = max_depth + burn_in;
  std::vector<TorusPoint> bx(static_cast<std::size_t>(total) + 1),
      by(static_cast<std::size_t>(total) + 1);
  bx[0] = x;
  by[0] = y;
  for (int j = 1; j <= total; ++j) {
    bx[std::size_t(j)] = dynamics::inverse_apply<double>(f, bx[std::size_t(j - 1)], tol);
    by[std::size_t(j)] = dynamics::inverse_apply<double>(f, by[std::size_t(j - 1)], tol);
  }
  // Contraction gate.  The off-leaf part of a double-precision pair is at
  // least machine-size and re-grows backward, so the distance bottoms out
  // near sqrt(delta * eps); the product is truncated at the minimum and the
  // pair must have contracted by two decades to count as a leaf pair.
  int contracted_depth = 1;
  {
    double d0 = torus_dist_2(bx[0], by[0]);
    double best = d0;
    for (int j = 1; j <= max_depth; ++j) {
      double dcur = torus_dist_2(bx[std::size_t(j)], by[std::size_t(j)]);
      if (dcur < best) {
        best = dcur;
        contracted_depth = j;
      }
      if (dcur > 16 * best && dcur > 1e-8) break;  // well past the floor
    }
    if (contracted_depth < 3 || best > 1e-2 * d0)
      throw leaf_pairing_error(
          "density_ratio: backward pair distance grows (y is not on the local leaf of x)");
  }

  auto jacs_along = [&](const std::vector<TorusPoint>& orbit) {
    Eigen::MatrixXd q = cocycles::class_reference_frame(L, class_k);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr0(q);
    q = qr0.householderQ() * Eigen::MatrixXd::Identity(d, kd);
    std::vector<double> logjac(static_cast<std::size_t>(total), 0.0);
    for (int s = total; s >= 1; --s) {
      Eigen::MatrixXd df =
          to_eigen(dynamics::differential_lift<double>(f, orbit[std::size_t(s)]));
      Eigen::MatrixXd z = df * q;
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(z);
      Eigen::MatrixXd qn = qr.householderQ() * Eigen::MatrixXd::Identity(d, kd);
      Eigen::MatrixXd m = qn.transpose() * z;
      logjac[std::size_t(s - 1)] = std::log(std::abs(m.determinant()));
      q = qn;
    }
    return logjac;  // logjac[j-1] = log Jac(f|_E) at f^{-j} of the base point
  };
  std::vector<double> jx = jacs_along(bx), jy = jacs_along(by);

  DensityRatio out;
  double log_ratio = 0;
  double last_diff = 0, prev_diff = 0;
  for (int j = 1; j <= contracted_depth; ++j) {
    double diff = jy[std::size_t(j - 1)] - jx[std::size_t(j - 1)];
    log_ratio += diff;
    prev_diff = last_diff;
    last_diff = std::abs(diff);
    out.depth = j;
    if (std::abs(std::exp(diff) - 1.0) < tau && j >= 5) break;
  }
  out.value = std::exp(log_ratio);
  double q_rate = (prev_diff > 0 && last_diff < prev_diff) ? last_diff / prev_diff : 0.5;
  q_rate = std::min(q_rate, 0.9);
  out.tail_bound = std::abs(out.value) * last_diff * q_rate / (1.0 - q_rate);
  return out;
}

TorusPoint leaf_point(const TorusMap& f, const algebra::IntMatrix& L, int class_k,
                      const TorusPoint& x, double delta, int n_back, std::uint64_t seed) {
  const int d = f.dim();
  cocycles::ClassLayout lay = cocycles::class_layout(L);
  const int kd = lay.dims[std::size_t(class_k)];
  if (lay.fast_dim(class_k) != kd)
    throw unsupported_error("leaf_point: class must be the fastest of its dimension");
  const double tol = 1e-13;
  std::vector<TorusPoint> back(static_cast<std::size_t>(n_back) + 1);
  back[0] = x;
  for (int j = 1; j <= n_back; ++j)
    back[std::size_t(j)] = dynamics::inverse_apply<double>(f, back[std::size_t(j - 1)], tol);

  Eigen::MatrixXd e = cocycles::fast_flag_at(f, back[std::size_t(n_back)], kd, 30);
  Eigen::VectorXd dir;
  if (kd == 1) {
    dir = e.col(0);
  } else {
    CounterRng rng(seed ^ 0x1eaf, 0);
    Eigen::VectorXd combo(kd);
    for (int i = 0; i < kd; ++i) combo(i) = rng.next_symmetric();
    dir = e * combo;
    dir.normalize();
  }
  // forward growth of the displacement fixes the seed amplitude
  double lognorm = 0;
  {
    Eigen::VectorXd v = dir;
    for (int s = n_back; s >= 1; --s) {
      Eigen::MatrixXd df = to_eigen(dynamics::differential_lift<double>(f, back[std::size_t(s)]));
      v = df * v;
      double nv = v.norm();
      lognorm += std::log(nv);
      v /= nv;
    }
  }
  double t = delta * std::exp(-lognorm);
  for (int attempt = 0; attempt < 4; ++attempt) {
    TorusPoint z = back[std::size_t(n_back)];
    for (int i = 0; i < d; ++i) z[std::size_t(i)] += t * dir(i);
    TorusPoint yy = z;
    for (int s = 0; s < n_back; ++s) yy = dynamics::apply(f, yy);
    double got = torus_dist_2(yy, x);
    if (got > 0.5 * delta && got < 2.0 * delta) return yy;
    if (got == 0) throw leaf_pairing_error("leaf_point: displacement vanished");
    t *= delta / got;
  }
  throw leaf_pairing_error("leaf_point: could not hit the requested leaf distance");
}

// ---------------------------------------------------------------------------

RegularityEstimate holder_exponent(const DisplacementField& u, const HolderDirection& dir,
                                   std::vector<double> scales, int n_pairs,
                                   std::uint64_t seed, int bootstrap_rounds) {
  const int d = u.dim();
  const double floor_scale = 4.0 * u.grid_step();
  std::vector<double> usable;
  for (double s : scales)
    if (s >= floor_scale && s <= 0.5) usable.push_back(s);
  if (usable.size() < 4)
    throw insufficient_scale_error("holder_exponent: fewer than 4 usable scales (floor " +
                                   std::to_string(floor_scale) + ")");
  std::sort(usable.begin(), usable.end());

  std::vector<double> lx, ly;
  CounterRng rng(seed, 0x401d);
  for (double delta : usable) {
    for (int p = 0; p < n_pairs; ++p) {
      TorusPoint x(static_cast<std::size_t>(d));
      for (int i = 0; i < d; ++i) x[std::size_t(i)] = rng.next_unit();
      Eigen::VectorXd e(d);
      if (dir.mode == HolderDirection::Mode::global) {
        for (int i = 0; i < d; ++i) e(i) = rng.next_symmetric();
      } else if (dir.mode == HolderDirection::Mode::fixed_vector) {
        e = dir.basis.col(0);
      } else {
        Eigen::VectorXd combo(dir.basis.cols());
        for (int i = 0; i < combo.size(); ++i) combo(i) = rng.next_symmetric();
        e = dir.basis * combo;
      }
      if (e.norm() == 0) continue;
      e.normalize();
      TorusPoint y = x;
      for (int i = 0; i < d; ++i) y[std::size_t(i)] += delta * e(i);
      double dist = torus_dist_2(u.apply_lift(x), u.apply_lift(y));
      if (dist <= 0) continue;
      lx.push_back(std::log(delta));
      ly.push_back(std::log(dist));
    }
  }
  const std::size_t npts = lx.size();
  if (npts < 8) throw insufficient_scale_error("holder_exponent: not enough usable pairs");

  auto fit = [&](const std::vector<double>& ys) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < npts; ++i) {
      sx += lx[i];
      sy += ys[i];
      sxx += lx[i] * lx[i];
      sxy += lx[i] * ys[i];
    }
    double n = double(npts);
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    double icept = (sy - slope * sx) / n;
    return std::pair<double, double>(slope, icept);
  };
  auto [alpha, icept] = fit(ly);
  std::vector<double> resid(npts);
  double rss = 0;
  for (std::size_t i = 0; i < npts; ++i) {
    resid[i] = ly[i] - (alpha * lx[i] + icept);
    rss += resid[i] * resid[i];
  }

  std::vector<double> slopes;
  slopes.reserve(static_cast<std::size_t>(bootstrap_rounds));
  CounterRng brng(seed, 0xb001);
  std::vector<double> ys(npts);
  for (int b = 0; b < bootstrap_rounds; ++b) {
    for (std::size_t i = 0; i < npts; ++i)
      ys[i] = (alpha * lx[i] + icept) + resid[std::size_t(brng.next_below(npts))];
    slopes.push_back(fit(ys).first);
  }
  std::sort(slopes.begin(), slopes.end());
  auto pct = [&](double q) {
    double pos = q * double(slopes.size() - 1);
    std::size_t lo = std::size_t(pos);
    double fr = pos - double(lo);
    return slopes[lo] * (1 - fr) + slopes[std::min(lo + 1, slopes.size() - 1)] * fr;
  };

  RegularityEstimate est;
  est.direction_tag = dir.tag;
  est.scales = usable;
  est.alpha = alpha;
  est.band_lo = pct(0.025);
  est.band_hi = pct(0.975);
  est.lipschitz = est.band_lo <= 1.0 && 1.0 <= est.band_hi;
  est.fit_residual_rms = std::sqrt(rss / double(npts));
  est.span_decades = std::log10(usable.back() / usable.front());
  est.meets_span_target = est.span_decades >= 2.0;
  est.n_pairs = int(npts);
  return est;
}

// ---------------------------------------------------------------------------

TransferReport transfer_check(const DisplacementField& u, const TorusMap& f,
                              const algebra::IntMatrix& L, int class_k, int n_pts,
                              double fd_scale, std::uint64_t seed, int n_power) {
  const int d = u.dim();
  cocycles::ClassLayout lay = cocycles::class_layout(L);
  const int kd = lay.dims[std::size_t(class_k)];
  if (fd_scale < 4.0 * u.grid_step())
    throw insufficient_scale_error("transfer_check: fd scale below the interpolation floor");

  Eigen::MatrixXd ref = cocycles::class_reference_frame(L, class_k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr0(ref);
  Eigen::MatrixXd bl = qr0.householderQ() * Eigen::MatrixXd::Identity(d, kd);
  Eigen::MatrixXd ld(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) ld(i, j) = double(L.at(i, j));
  Eigen::MatrixXd l_hat = bl.transpose() * ld * bl;  // exact restriction (invariant span)

  // Richardson finite differences of h along the columns of bl
  auto leaf_derivative = [&](const TorusPoint& x, const Eigen::MatrixXd& q_out) {
    auto fd_at = [&](double delta) {
      Eigen::MatrixXd m(d, kd);
      for (int c = 0; c < kd; ++c) {
        TorusPoint xp = x, xm = x;
        for (int i = 0; i < d; ++i) {
          xp[std::size_t(i)] += delta * bl(i, c);
          xm[std::size_t(i)] -= delta * bl(i, c);
        }
        TorusPoint hp = u.apply_lift(xp), hm = u.apply_lift(xm);
        for (int i = 0; i < d; ++i)
          m(i, c) = nearest_lift(hp[std::size_t(i)] - hm[std::size_t(i)]) / (2 * delta);
      }
      return m;
    };
    Eigen::MatrixXd d1 = fd_at(fd_scale);
    Eigen::MatrixXd d2 = fd_at(fd_scale / 2);
    if ((d2 - d1).norm() > 0.5 * std::max(1e-12, d1.norm()))
      throw numeric_error("transfer_check: difference quotients not converging under refinement");
    Eigen::MatrixXd rich = (4.0 * d2 - d1) / 3.0;
    return Eigen::MatrixXd(q_out.transpose() * rich);  // kd x kd in the moving gauge
  };

  CounterRng rng(seed, 0x7a5f);
  std::vector<double> defects;
  for (int t = 0; t < n_pts; ++t) {
    TorusPoint x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) x[std::size_t(i)] = rng.next_unit();
    TorusPoint hx = u.apply_lift(x);
    TorusPoint lx(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int j = 0; j < d; ++j) s += ld(i, j) * x[std::size_t(j)];
      lx[std::size_t(i)] = wrap01(s);
    }
    TorusPoint hlx = u.apply_lift(lx);

    Eigen::MatrixXd q_hx =
        cocycles::canonical_basis(cocycles::flag_at(f, L, class_k, wrap01(hx), n_power), bl);
    Eigen::MatrixXd q_hlx =
        cocycles::canonical_basis(cocycles::flag_at(f, L, class_k, wrap01(hlx), n_power), bl);

    Eigen::MatrixXd dx = leaf_derivative(x, q_hx);
    Eigen::MatrixXd dlx = leaf_derivative(lx, q_hlx);

    Eigen::MatrixXd df = to_eigen(dynamics::differential_lift<double>(f, wrap01(hx)));
    Eigen::MatrixXd f_hat = q_hlx.transpose() * df * q_hx;

    double denom = dx.norm();
    if (denom < 1e-12) continue;
    defects.push_back((f_hat * dx - dlx * l_hat).norm() / denom);
  }
  if (defects.empty()) throw numeric_error("transfer_check: no usable sample points");
  TransferReport rep;
  rep.n_pts = int(defects.size());
  rep.fd_scale = fd_scale;
  rep.max_defect = *std::max_element(defects.begin(), defects.end());
  std::nth_element(defects.begin(), defects.begin() + defects.size() / 2, defects.end());
  rep.median_defect = defects[defects.size() / 2];
  return rep;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd slow_unstable_flag_of_linear(const algebra::IntMatrix& L, int k_slow_unstable) {
  conjugacy::SpectralSplit split = conjugacy::spectral_split(L);
  const int d = L.dim();
  std::vector<const conjugacy::SpectralSplit::Block*> unstable;
  for (const auto& b : split.blocks)
    if (!b.stable) unstable.push_back(&b);
  if (k_slow_unstable < 1 || k_slow_unstable > int(unstable.size()))
    throw std::invalid_argument("slow_unstable_flag_of_linear: k out of range");
  int cols = 0;
  for (int i = 0; i < k_slow_unstable; ++i) cols += unstable[std::size_t(i)]->size;
  Eigen::MatrixXd m(d, cols);
  int c = 0;
  for (int i = 0; i < k_slow_unstable; ++i) {
    const auto* b = unstable[std::size_t(i)];
    m.middleCols(c, b->size) = split.basis.middleCols(b->offset, b->size);
    c += b->size;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
  return qr.householderQ() * Eigen::MatrixXd::Identity(d, cols);
}

FlagTransportReport flag_transport_check(const DisplacementField& u,
                                         const algebra::IntMatrix& L, int k_slow_unstable,
                                         const SubBundleField& f_flag, int n_pts, double delta,
                                         std::uint64_t seed) {
  const int d = u.dim();
  if (delta < 4.0 * u.grid_step())
    throw insufficient_scale_error("flag_transport_check: delta below the interpolation floor");
  Eigen::MatrixXd el = slow_unstable_flag_of_linear(L, k_slow_unstable);

  CounterRng rng(seed, 0xf1a6);
  FlagTransportReport rep;
  rep.delta = delta;
  double sum = 0;
  int used = 0;
  for (int t = 0; t < n_pts; ++t) {
    TorusPoint x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) x[std::size_t(i)] = rng.next_unit();
    Eigen::VectorXd combo(el.cols());
    for (int i = 0; i < combo.size(); ++i) combo(i) = rng.next_symmetric();
    Eigen::VectorXd e = el * combo;
    if (e.norm() == 0) continue;
    e.normalize();
    TorusPoint y = x;
    for (int i = 0; i < d; ++i) y[std::size_t(i)] += delta * e(i);
    TorusPoint hx = u.apply_lift(x), hy = u.apply_lift(y);
    Eigen::VectorXd disp(d);
    for (int i = 0; i < d; ++i) disp(i) = nearest_lift(hy[std::size_t(i)] - hx[std::size_t(i)]);
    double dn = disp.norm();
    if (dn == 0) continue;
    Eigen::MatrixXd q = f_flag.basis_near(wrap01(hx));
    Eigen::VectorXd ortho = disp - q * (q.transpose() * disp);
    rep.max_defect = std::max(rep.max_defect, ortho.norm() / dn);
    sum += ortho.norm() / dn;
    ++used;
  }
  if (used == 0) throw numeric_error("flag_transport_check: no usable sample points");
  rep.mean_defect = sum / used;
  rep.n_pts = used;
  return rep;
}

}  // namespace rigidity
}  // namespace toruslab
