#pragma once

// Shared basics: error taxonomy, extended-precision scalar types, the
// counter-based RNG used for all reproducible sampling, and small torus
// helpers (mod-1 wrapping, nearest-integer lifts).

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace toruslab {

namespace mp = boost::multiprecision;

// Extended-precision real: ~201 mantissa bits, enough for 120-iteration
// orbit formulas at desk-scale expansion rates.
using ext_real = mp::number<mp::cpp_bin_float<60>>;

inline double to_double(const ext_real& x) { return static_cast<double>(x); }

// ---------------------------------------------------------------------------
// Errors

struct numeric_error : std::runtime_error {
  explicit numeric_error(const std::string& m) : std::runtime_error(m) {}
};

struct capacity_error : numeric_error {
  explicit capacity_error(const std::string& m) : numeric_error(m) {}
};
struct precision_error : numeric_error {
  explicit precision_error(const std::string& m) : numeric_error(m) {}
};
struct degenerate_error : numeric_error {
  explicit degenerate_error(const std::string& m) : numeric_error(m) {}
};
struct divergence_error : numeric_error {
  explicit divergence_error(const std::string& m) : numeric_error(m) {}
};
struct unsupported_error : numeric_error {
  explicit unsupported_error(const std::string& m) : numeric_error(m) {}
};
struct inversion_error : numeric_error {
  explicit inversion_error(const std::string& m) : numeric_error(m) {}
};
struct refinement_error : numeric_error {
  explicit refinement_error(const std::string& m) : numeric_error(m) {}
};
struct leaf_pairing_error : numeric_error {
  explicit leaf_pairing_error(const std::string& m) : numeric_error(m) {}
};
struct conditioning_error : numeric_error {
  explicit conditioning_error(const std::string& m) : numeric_error(m) {}
};
struct indeterminate_error : numeric_error {
  explicit indeterminate_error(const std::string& m) : numeric_error(m) {}
};
struct insufficient_scale_error : numeric_error {
  explicit insufficient_scale_error(const std::string& m) : numeric_error(m) {}
};
struct parse_error : std::runtime_error {
  explicit parse_error(const std::string& m) : std::runtime_error(m) {}
};

// ---------------------------------------------------------------------------
// Counter-based RNG.  Stateless: value = mix(seed, stream, index), so any
// sample can be regenerated independently of scheduling; statistics are
// reproducible from (seed, n_samples, n) alone.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct CounterRng {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;  // e.g. sample index
  std::uint64_t counter = 0;

  CounterRng(std::uint64_t seed_, std::uint64_t stream_ = 0)
      : seed(seed_), stream(stream_) {}

  std::uint64_t next_u64() {
    std::uint64_t k = splitmix64(seed ^ splitmix64(stream ^ 0x5851f42d4c957f2dULL));
    return splitmix64(k ^ (0xda942042e4dd58b5ULL * ++counter));
  }

  // uniform in [0,1)
  double next_unit() { return double(next_u64() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

  double next_symmetric() { return 2.0 * next_unit() - 1.0; }
};

// ---------------------------------------------------------------------------
// Torus helpers

inline double wrap01(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r = 0.0;  // guards x = -1e-18 rounding to 1.0
  return r;
}

inline ext_real wrap01(const ext_real& x) {
  ext_real r = x - floor(x);
  if (r >= 1) r = 0;
  return r;
}

// representative of x in [-1/2, 1/2): the nearest lift of a torus difference
inline double nearest_lift(double x) { return x - std::round(x); }

inline ext_real nearest_lift(const ext_real& x) { return x - round(x); }

template <class Real>
std::vector<Real> wrap01(std::vector<Real> v) {
  for (auto& c : v) c = wrap01(c);
  return v;
}

// torus sup-distance between two point vectors
template <class Real>
Real torus_dist_inf(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Real d = nearest_lift(a[i] - b[i]);
    if (d < 0) d = -d;
    if (d > m) m = d;
  }
  return m;
}

template <class Real>
Real torus_dist_2(const std::vector<Real>& a, const std::vector<Real>& b) {
  Real s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    Real d = nearest_lift(a[i] - b[i]);
    s += d * d;
  }
  return sqrt(s);
}

inline double torus_dist_2(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = nearest_lift(a[i] - b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Deterministic parallel loop: each index writes only its own slot, results
// aggregate in index order regardless of thread count.

inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  int nt = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(nt);
  std::exception_ptr first_error = nullptr;
  std::mutex err_mutex;
  for (int t = 0; t < nt; ++t) {
    pool.emplace_back([&, t]() {
      try {
        for (std::size_t i = t; i < n; i += nt) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace toruslab
