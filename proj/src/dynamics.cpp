#include "toruslab/dynamics.hpp"

#include <fstream>
#include <numeric>
#include <sstream>

namespace toruslab {
namespace dynamics {

LinearNode::LinearNode(algebra::IntMatrix m) : mat(std::move(m)), inv(mat.inverse()) {
  const int d = mat.dim();
  fmat.resize(std::size_t(d) * d);
  finv.resize(std::size_t(d) * d);
  emat.resize(std::size_t(d) * d);
  einv.resize(std::size_t(d) * d);
  for (int i = 0; i < d * d; ++i) {
    fmat[std::size_t(i)] = double(mat.entries()[std::size_t(i)]);
    finv[std::size_t(i)] = double(inv.entries()[std::size_t(i)]);
    emat[std::size_t(i)] = ext_real(mat.entries()[std::size_t(i)]);
    einv[std::size_t(i)] = ext_real(inv.entries()[std::size_t(i)]);
  }
}

namespace {

algebra::IntMatrix product_of_linear_parts(int dim, const std::vector<MapNode>& nodes) {
  algebra::IntMatrix acc = algebra::IntMatrix::identity(dim);
  for (const auto& node : nodes)
    if (const auto* lin = std::get_if<LinearNode>(&node)) acc = lin->mat.mul(acc);
  return acc;
}

void validate_node(int dim, const MapNode& node) {
  if (const auto* lin = std::get_if<LinearNode>(&node)) {
    if (lin->mat.dim() != dim) throw std::invalid_argument("TorusMap: linear node dim mismatch");
    return;
  }
  if (const auto* sh = std::get_if<ShearNode>(&node)) {
    if (int(sh->w.size()) != dim || int(sh->v.size()) != dim)
      throw std::invalid_argument("TorusMap: shear node dim mismatch");
    long long dot = 0;
    for (std::size_t i = 0; i < sh->w.size(); ++i) dot += sh->w[i] * sh->v[i];
    if (dot != 0) throw std::invalid_argument("TorusMap: shear requires w.v = 0");
    return;
  }
  const auto& fo = std::get<FourierNode>(node);
  for (const auto& mode : fo.modes)
    if (int(mode.k.size()) != dim || int(mode.cos_coef.size()) != dim ||
        int(mode.sin_coef.size()) != dim)
      throw std::invalid_argument("TorusMap: fourier node dim mismatch");
}

}  // namespace

TorusMap::TorusMap(int dim, std::vector<MapNode> nodes)
    : dim_(dim),
      nodes_(std::move(nodes)),
      volume_exact_(true),
      linear_part_(product_of_linear_parts(dim, nodes_)) {
  if (dim < 1) throw std::invalid_argument("TorusMap: dim must be positive");
  for (const auto& n : nodes_) {
    validate_node(dim, n);
    if (std::holds_alternative<FourierNode>(n)) volume_exact_ = false;
  }
}

TorusMap TorusMap::composed_after(const TorusMap& inner) const {
  if (inner.dim_ != dim_) throw std::invalid_argument("composed_after: dim mismatch");
  std::vector<MapNode> all = inner.nodes_;
  all.insert(all.end(), nodes_.begin(), nodes_.end());
  return TorusMap(dim_, std::move(all));
}

std::vector<long long> kernel_basis_element(const std::vector<long long>& w, int v_index) {
  const int d = int(w.size());
  int pivot = -1;
  for (int i = 0; i < d; ++i)
    if (w[std::size_t(i)] != 0) {
      pivot = i;
      break;
    }
  if (pivot < 0) throw std::invalid_argument("kernel_basis_element: w must be nonzero");
  // basis: for each j != pivot, b_j = (w_pivot e_j - w_j e_pivot) / gcd
  std::vector<std::vector<long long>> basis;
  for (int j = 0; j < d; ++j) {
    if (j == pivot) continue;
    long long g = std::gcd(std::abs(w[std::size_t(pivot)]), std::abs(w[std::size_t(j)]));
    if (g == 0) g = 1;
    std::vector<long long> b(std::size_t(d), 0);
    b[std::size_t(j)] = w[std::size_t(pivot)] / g;
    b[std::size_t(pivot)] = -w[std::size_t(j)] / g;
    basis.push_back(std::move(b));
  }
  if (v_index < 0 || v_index >= int(basis.size()))
    throw std::invalid_argument("kernel_basis_element: v_index out of range");
  return basis[std::size_t(v_index)];
}

TorusMap shear_map(int dim, const std::vector<long long>& w, int v_index, double amp, int freq) {
  ShearNode sh;
  sh.w = w;
  sh.v = kernel_basis_element(w, v_index);
  sh.g.terms.push_back({amp, freq, false});
  sh.file_v_index = v_index;
  std::vector<MapNode> nodes;
  nodes.emplace_back(std::move(sh));
  return TorusMap(dim, std::move(nodes));
}

TorusMap linear_map(const algebra::IntMatrix& m) {
  std::vector<MapNode> nodes;
  nodes.emplace_back(LinearNode(m));
  return TorusMap(m.dim(), std::move(nodes));
}

namespace {

MapNode node_closed_inverse(const MapNode& node) {
  if (const auto* lin = std::get_if<LinearNode>(&node)) return LinearNode(lin->inv);
  if (const auto* sh = std::get_if<ShearNode>(&node)) {
    ShearNode r = *sh;
    for (auto& t : r.g.terms) t.amp = -t.amp;
    r.file_v_index = -1;
    return r;
  }
  throw unsupported_error("closed_form_inverse: trigonometric nodes have no closed-form inverse");
}

}  // namespace

TorusMap closed_form_inverse(const TorusMap& f) {
  std::vector<MapNode> nodes;
  for (auto it = f.nodes().rbegin(); it != f.nodes().rend(); ++it)
    nodes.push_back(node_closed_inverse(*it));
  return TorusMap(f.dim(), std::move(nodes));
}

TorusMap make_conjugated(const algebra::IntMatrix& L, const TorusMap& psi) {
  if (psi.dim() != L.dim()) throw std::invalid_argument("make_conjugated: dim mismatch");
  if (!psi.volume_exact())
    throw unsupported_error("make_conjugated: psi must be built from linear/shear nodes");
  if (!(psi.linear_part() == algebra::IntMatrix::identity(psi.dim())))
    throw std::invalid_argument("make_conjugated: psi must be homotopic to the identity");
  TorusMap psi_inv = closed_form_inverse(psi);
  // application order: psi, then L, then psi^{-1}
  std::vector<MapNode> nodes = psi.nodes();
  nodes.emplace_back(LinearNode(L));
  nodes.insert(nodes.end(), psi_inv.nodes().begin(), psi_inv.nodes().end());
  return TorusMap(L.dim(), std::move(nodes));
}

Differential differential(const TorusMap& f, const TorusPoint& x) {
  Differential d;
  d.matrix = differential_lift<double>(f, x);
  d.exact_formula = true;
  return d;
}

C1Distance c1_distance(const TorusMap& f, const algebra::IntMatrix& L, int grid_n) {
  if (grid_n < 16) throw std::invalid_argument("c1_distance: grid_n must be >= 16");
  const int d = f.dim();
  if (L.dim() != d) throw std::invalid_argument("c1_distance: dim mismatch");
  std::vector<double> ld(std::size_t(d) * d);
  for (int i = 0; i < d * d; ++i) ld[std::size_t(i)] = double(L.entries()[std::size_t(i)]);

  double c0 = 0, c1 = 0;
  std::vector<int> idx(std::size_t(d), 0);
  TorusPoint x(std::size_t(d), 0.0);
  const double h = 1.0 / grid_n;
  for (;;) {
    for (int i = 0; i < d; ++i) x[std::size_t(i)] = idx[std::size_t(i)] * h;
    TorusPoint fx = apply_lift<double>(f, x);
    double dev = 0;
    for (int i = 0; i < d; ++i) {
      double lx = 0;
      for (int j = 0; j < d; ++j) lx += ld[std::size_t(i) * d + j] * x[std::size_t(j)];
      dev = std::max(dev, std::abs(nearest_lift(fx[std::size_t(i)] - lx)));
    }
    c0 = std::max(c0, dev);
    SmallMat<double> df = differential_lift<double>(f, x);
    double rowmax = 0;
    for (int i = 0; i < d; ++i) {
      double row = 0;
      for (int j = 0; j < d; ++j) row += std::abs(df.at(i, j) - ld[std::size_t(i) * d + j]);
      rowmax = std::max(rowmax, row);
    }
    c1 = std::max(c1, rowmax);

    int pos = 0;
    while (pos < d && ++idx[std::size_t(pos)] == grid_n) idx[std::size_t(pos++)] = 0;
    if (pos == d) break;
  }
  C1Distance r;
  r.c0_part = c0;
  r.c1_part = c1;
  r.value = c0 + c1;
  r.grid_step = h;
  return r;
}

TorusPoint refine_periodic(const TorusMap& f, const TorusPoint& seed, int n, double tol) {
  const int d = f.dim();
  if (int(seed.size()) != d) throw std::invalid_argument("refine_periodic: dim mismatch");
  // Newton on G(X) = lift(f^n)(X) - X against its nearby integer vector
  auto orbit_value_and_diff = [&](const TorusPoint& x0, std::vector<double>* val) {
    std::vector<double> cur = x0;
    SmallMat<double> acc = SmallMat<double>::identity(d);
    for (int k = 0; k < n; ++k) {
      acc = differential_lift<double>(f, cur).mul(acc);
      cur = apply_lift<double>(f, cur);
    }
    *val = cur;
    return acc;
  };
  std::vector<double> x = seed;
  std::vector<double> target(static_cast<std::size_t>(d));
  bool have_target = false;
  for (int it = 0; it < 50; ++it) {
    std::vector<double> fx;
    SmallMat<double> dfn = orbit_value_and_diff(x, &fx);
    std::vector<double> g(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) g[std::size_t(i)] = fx[std::size_t(i)] - x[std::size_t(i)];
    if (!have_target) {
      for (int i = 0; i < d; ++i) target[std::size_t(i)] = std::round(g[std::size_t(i)]);
      have_target = true;
    }
    double res = 0;
    for (int i = 0; i < d; ++i)
      res = std::max(res, std::abs(g[std::size_t(i)] - target[std::size_t(i)]));
    if (res < tol) return wrap01(x);
    for (int i = 0; i < d; ++i) dfn.at(i, i) -= 1.0;  // D(f^n) - I
    std::vector<double> rhs(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) rhs[std::size_t(i)] = g[std::size_t(i)] - target[std::size_t(i)];
    std::vector<double> step;
    try {
      step = solve_linear(dfn, rhs);
    } catch (const numeric_error&) {
      throw refinement_error("refine_periodic: Jacobian of (Df^n - I) is singular");
    }
    double sn = 0;
    for (int i = 0; i < d; ++i) sn = std::max(sn, std::abs(step[std::size_t(i)]));
    double damp = sn > 0.2 ? 0.2 / sn : 1.0;  // long steps are shortened, not fatal
    double total = 0;
    for (int i = 0; i < d; ++i) {
      x[std::size_t(i)] -= damp * step[std::size_t(i)];
      total = std::max(total, std::abs(x[std::size_t(i)] - seed[std::size_t(i)]));
    }
    if (total > 0.45) throw refinement_error("refine_periodic: Newton left the seed basin");
  }
  throw refinement_error("refine_periodic: no convergence in 50 Newton steps");
}

// ---------------------------------------------------------------------------
// Map description files

namespace {

std::vector<long long> parse_int_list(const std::string& s) {
  std::vector<long long> out;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ',')) {
    try {
      out.push_back(std::stoll(tok));
    } catch (...) {
      throw parse_error("map file: bad integer list '" + s + "'");
    }
  }
  if (out.empty()) throw parse_error("map file: empty integer list");
  return out;
}

std::string expect_kv(const std::string& tok, const std::string& key) {
  std::string prefix = key + "=";
  if (tok.rfind(prefix, 0) != 0)
    throw parse_error("map file: expected '" + key + "=...', got '" + tok + "'");
  return tok.substr(prefix.size());
}

FourierNode load_fourier_file(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open fourier coefficient file: " + path);
  int d = 0, n_modes = 0;
  if (!(in >> d >> n_modes) || d != dim)
    throw parse_error("fourier file: bad header in " + path);
  FourierNode node;
  for (int m = 0; m < n_modes; ++m) {
    FourierNode::Mode mode;
    mode.k.resize(static_cast<std::size_t>(d));
    mode.cos_coef.resize(static_cast<std::size_t>(d));
    mode.sin_coef.resize(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i)
      if (!(in >> mode.k[std::size_t(i)])) throw parse_error("fourier file: truncated mode");
    for (int i = 0; i < d; ++i)
      if (!(in >> mode.cos_coef[std::size_t(i)])) throw parse_error("fourier file: truncated mode");
    for (int i = 0; i < d; ++i)
      if (!(in >> mode.sin_coef[std::size_t(i)])) throw parse_error("fourier file: truncated mode");
    node.modes.push_back(std::move(mode));
  }
  return node;
}

}  // namespace

TorusMap load_map_file(const std::string& path, int dim) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open map file: " + path);
  std::vector<MapNode> nodes;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind.empty() || kind[0] == '#') continue;
    if (kind == "linear") {
      std::string mpath;
      if (!(ls >> mpath)) throw parse_error("map file: linear node needs a matrix file");
      nodes.emplace_back(LinearNode(algebra::load_matrix_file(mpath)));
    } else if (kind == "shear") {
      std::string tw, tv, ta, tf;
      if (!(ls >> tw >> tv >> ta >> tf)) throw parse_error("map file: malformed shear node");
      std::vector<long long> w = parse_int_list(expect_kv(tw, "w"));
      int v_index = 0;
      double amp = 0;
      int freq = 1;
      try {
        v_index = std::stoi(expect_kv(tv, "v_index"));
        amp = std::stod(expect_kv(ta, "amp"));
        freq = std::stoi(expect_kv(tf, "freq"));
      } catch (const parse_error&) {
        throw;
      } catch (...) {
        throw parse_error("map file: malformed shear parameters in '" + line + "'");
      }
      if (int(w.size()) != dim) throw parse_error("map file: shear w has wrong dimension");
      ShearNode sh;
      sh.w = w;
      sh.v = kernel_basis_element(w, v_index);
      sh.g.terms.push_back({amp, freq, false});
      sh.file_v_index = v_index;
      nodes.emplace_back(std::move(sh));
    } else if (kind == "fourier") {
      std::string fpath;
      if (!(ls >> fpath)) throw parse_error("map file: fourier node needs a coefficient file");
      nodes.emplace_back(load_fourier_file(fpath, dim));
    } else {
      throw parse_error("map file: unknown node kind '" + kind + "'");
    }
  }
  if (nodes.empty()) throw parse_error("map file: no nodes in " + path);
  return TorusMap(dim, std::move(nodes));
}

void write_map_file(const std::string& path, const TorusMap& f, const std::string& aux_prefix) {
  std::ofstream out(path);
  if (!out) throw parse_error("cannot write map file: " + path);
  int aux = 0;
  char buf[64];
  for (const auto& node : f.nodes()) {
    if (const auto* lin = std::get_if<LinearNode>(&node)) {
      std::string mpath = aux_prefix + ".matrix" + std::to_string(aux++) + ".txt";
      std::ofstream mo(mpath);
      mo << lin->mat.to_text();
      out << "linear " << mpath << "\n";
    } else if (const auto* sh = std::get_if<ShearNode>(&node)) {
      if (sh->file_v_index < 0 || sh->g.terms.size() != 1 || sh->g.terms[0].cosine)
        throw unsupported_error("write_map_file: shear node not representable in file format");
      out << "shear w=";
      for (std::size_t i = 0; i < sh->w.size(); ++i) out << (i ? "," : "") << sh->w[i];
      std::snprintf(buf, sizeof buf, "%.17g", sh->g.terms[0].amp);
      out << " v_index=" << sh->file_v_index << " amp=" << buf
          << " freq=" << sh->g.terms[0].freq << "\n";
    } else {
      const auto& fo = std::get<FourierNode>(node);
      std::string fpath = aux_prefix + ".fourier" + std::to_string(aux++) + ".txt";
      std::ofstream fout(fpath);
      fout << f.dim() << " " << fo.modes.size() << "\n";
      for (const auto& mode : fo.modes) {
        for (int i = 0; i < f.dim(); ++i) fout << mode.k[std::size_t(i)] << " ";
        for (int i = 0; i < f.dim(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", mode.cos_coef[std::size_t(i)]);
          fout << buf << " ";
        }
        for (int i = 0; i < f.dim(); ++i) {
          std::snprintf(buf, sizeof buf, "%.17g", mode.sin_coef[std::size_t(i)]);
          fout << buf << (i + 1 < f.dim() ? " " : "\n");
        }
      }
      out << "fourier " << fpath << "\n";
    }
  }
}

}  // namespace dynamics
}  // namespace toruslab
