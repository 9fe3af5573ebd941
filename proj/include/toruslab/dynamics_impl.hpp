#pragma once

// template bodies for dynamics.hpp

namespace toruslab {
namespace dynamics {

namespace detail {

template <class Real>
void apply_linear_into(const std::vector<Real>& m, const std::vector<Real>& x,
                       std::vector<Real>* out) {
  const int d = int(x.size());
  out->assign(std::size_t(d), Real(0));
  for (int i = 0; i < d; ++i) {
    Real s = 0;
    for (int j = 0; j < d; ++j) s += m[std::size_t(i) * d + j] * x[std::size_t(j)];
    (*out)[std::size_t(i)] = s;
  }
}

template <class Real>
Real dot_int(const std::vector<long long>& w, const std::vector<Real>& x) {
  Real s = 0;
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0) s += Real(w[i]) * x[i];
  return s;
}

template <class Real>
std::vector<Real> node_apply(const MapNode& node, const std::vector<Real>& x) {
  if (const auto* lin = std::get_if<LinearNode>(&node)) {
    std::vector<Real> y;
    apply_linear_into(lin->template cast<Real>(false), x, &y);
    return y;
  }
  if (const auto* sh = std::get_if<ShearNode>(&node)) {
    Real s = dot_int(sh->w, x);
    Real g = sh->g.value(s);
    std::vector<Real> y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (sh->v[i] != 0) y[i] += Real(sh->v[i]) * g;
    return y;
  }
  const auto& fo = std::get<FourierNode>(node);
  using std::cos;
  using std::sin;
  const Real two_pi = 2 * pi_of<Real>();
  std::vector<Real> y = x;
  for (const auto& mode : fo.modes) {
    Real arg = 0;
    for (std::size_t i = 0; i < mode.k.size(); ++i)
      if (mode.k[i] != 0) arg += Real(mode.k[i]) * x[i];
    arg *= two_pi;
    Real c = cos(arg), s = sin(arg);
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] += Real(mode.cos_coef[i]) * c + Real(mode.sin_coef[i]) * s;
  }
  return y;
}

template <class Real>
SmallMat<Real> node_differential(const MapNode& node, const std::vector<Real>& x) {
  const int d = int(x.size());
  if (const auto* lin = std::get_if<LinearNode>(&node)) {
    SmallMat<Real> m(d);
    const auto& c = lin->template cast<Real>(false);
    for (std::size_t i = 0; i < c.size(); ++i) m.a[i] = c[i];
    return m;
  }
  if (const auto* sh = std::get_if<ShearNode>(&node)) {
    // I + g'(w.x) v w^T
    SmallMat<Real> m = SmallMat<Real>::identity(d);
    Real gp = sh->g.slope(dot_int(sh->w, x));
    for (int i = 0; i < d; ++i) {
      if (sh->v[std::size_t(i)] == 0) continue;
      for (int j = 0; j < d; ++j)
        if (sh->w[std::size_t(j)] != 0)
          m.at(i, j) += Real(sh->v[std::size_t(i)]) * gp * Real(sh->w[std::size_t(j)]);
    }
    return m;
  }
  const auto& fo = std::get<FourierNode>(node);
  using std::cos;
  using std::sin;
  const Real two_pi = 2 * pi_of<Real>();
  SmallMat<Real> m = SmallMat<Real>::identity(d);
  for (const auto& mode : fo.modes) {
    Real arg = 0;
    for (std::size_t i = 0; i < mode.k.size(); ++i)
      if (mode.k[i] != 0) arg += Real(mode.k[i]) * x[i];
    arg *= two_pi;
    Real c = cos(arg), s = sin(arg);
    for (int i = 0; i < d; ++i) {
      Real coef = two_pi * (-Real(mode.cos_coef[std::size_t(i)]) * s +
                            Real(mode.sin_coef[std::size_t(i)]) * c);
      if (coef == 0) continue;
      for (int j = 0; j < d; ++j)
        if (mode.k[std::size_t(j)] != 0) m.at(i, j) += coef * Real(mode.k[std::size_t(j)]);
    }
  }
  return m;
}

// solve node_apply(z) = y for a trigonometric node by damped Newton
template <class Real>
std::vector<Real> fourier_node_invert(const MapNode& node, const std::vector<Real>& y,
                                      const Real& tol) {
  using std::abs;
  std::vector<Real> z = y;
  // initial guess z = y - u(y)
  {
    std::vector<Real> fy = node_apply(node, y);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = 2 * y[i] - fy[i];
  }
  for (int it = 0; it < 50; ++it) {
    std::vector<Real> r = node_apply(node, z);
    Real rn = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      r[i] -= y[i];
      if (abs(r[i]) > rn) rn = abs(r[i]);
    }
    if (rn < tol) return z;
    SmallMat<Real> j = node_differential(node, z);
    std::vector<Real> step = solve_linear(j, r);
    Real sn = 0;
    for (std::size_t i = 0; i < step.size(); ++i)
      if (abs(step[i]) > sn) sn = abs(step[i]);
    Real damp = sn > Real(0.25) ? Real(0.25) / sn : Real(1);
    for (std::size_t i = 0; i < z.size(); ++i) z[i] -= damp * step[i];
  }
  throw inversion_error("inverse_apply: Newton did not reach tolerance in 50 steps "
                        "(perturbation too large)");
}

template <class Real>
std::vector<Real> node_inverse_apply(const MapNode& node, const std::vector<Real>& y,
                                     const Real& tol) {
  if (const auto* lin = std::get_if<LinearNode>(&node)) {
    std::vector<Real> x;
    apply_linear_into(lin->template cast<Real>(true), y, &x);
    return x;
  }
  if (const auto* sh = std::get_if<ShearNode>(&node)) {
    // exact: w.(x + v g) = w.x since w.v = 0
    Real s = dot_int(sh->w, y);
    Real g = sh->g.value(s);
    std::vector<Real> x = y;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (sh->v[i] != 0) x[i] -= Real(sh->v[i]) * g;
    return x;
  }
  return fourier_node_invert(node, y, tol);
}

}  // namespace detail

template <class Real>
std::vector<Real> apply_lift(const TorusMap& f, std::vector<Real> x) {
  for (const auto& node : f.nodes()) x = detail::node_apply(node, x);
  return x;
}

template <class Real>
SmallMat<Real> differential_lift(const TorusMap& f, const std::vector<Real>& x) {
  std::vector<Real> cur = x;
  SmallMat<Real> acc = SmallMat<Real>::identity(f.dim());
  for (const auto& node : f.nodes()) {
    acc = detail::node_differential(node, cur).mul(acc);
    cur = detail::node_apply(node, cur);
  }
  return acc;
}

template <class Real>
std::vector<Real> inverse_lift(const TorusMap& f, std::vector<Real> y, const Real& tol) {
  for (auto it = f.nodes().rbegin(); it != f.nodes().rend(); ++it)
    y = detail::node_inverse_apply(*it, y, tol);
  return y;
}

}  // namespace dynamics
}  // namespace toruslab
