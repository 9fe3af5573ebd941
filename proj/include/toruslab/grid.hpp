#pragma once

// Uniform periodic grid indexing shared by the conjugacy solver and the
// sub-bundle fields.  A unimodular integer matrix maps the grid to itself,
// which the solver exploits through precomputed index permutations.

#include <vector>

#include "toruslab/intmatrix.hpp"

namespace toruslab {

struct GridIndexer {
  int dim = 0;
  int n = 0;

  GridIndexer() = default;
  GridIndexer(int dim_, int n_) : dim(dim_), n(n_) {}

  std::size_t count() const {
    std::size_t c = 1;
    for (int i = 0; i < dim; ++i) c *= std::size_t(n);
    return c;
  }

  std::size_t node_of(const std::vector<int>& k) const {
    std::size_t idx = 0;
    for (int i = 0; i < dim; ++i) idx = idx * std::size_t(n) + std::size_t(k[std::size_t(i)]);
    return idx;
  }

  std::vector<int> coords_of(std::size_t node) const {
    std::vector<int> k(static_cast<std::size_t>(dim));
    for (int i = dim - 1; i >= 0; --i) {
      k[std::size_t(i)] = int(node % std::size_t(n));
      node /= std::size_t(n);
    }
    return k;
  }

  std::vector<double> point_of(std::size_t node) const {
    std::vector<int> k = coords_of(node);
    std::vector<double> x(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) x[std::size_t(i)] = double(k[std::size_t(i)]) / n;
    return x;
  }

  // node index of (M k mod n) for integer M; M unimodular makes it a bijection
  std::vector<std::size_t> matrix_permutation(const algebra::IntMatrix& m) const {
    std::vector<std::size_t> perm(count());
    std::vector<int> k(static_cast<std::size_t>(dim), 0);
    std::vector<int> mk(static_cast<std::size_t>(dim));
    for (std::size_t node = 0; node < perm.size(); ++node) {
      for (int i = 0; i < dim; ++i) {
        long long s = 0;
        for (int j = 0; j < dim; ++j)
          s += static_cast<long long>(m.at(i, j)) * k[std::size_t(j)];
        long long r = s % n;
        if (r < 0) r += n;
        mk[std::size_t(i)] = int(r);
      }
      perm[node] = node_of(mk);
      int pos = dim - 1;
      while (pos >= 0 && ++k[std::size_t(pos)] == n) k[std::size_t(pos--)] = 0;
    }
    return perm;
  }
};

}  // namespace toruslab
