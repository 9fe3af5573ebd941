#include "toruslab/survey.hpp"

#include <cmath>

namespace toruslab {
namespace survey {

const char* failure_reason_name(FailureReason r) {
  switch (r) {
    case FailureReason::none: return "none";
    case FailureReason::non_hyperbolic: return "non-hyperbolic";
    case FailureReason::reducible: return "reducible";
    case FailureReason::l4_reducible: return "L4-reducible";
    default: return "three-same-modulus";
  }
}

FailureReason classify(const algebra::IntMatrix& m) {
  algebra::CharPoly chi = algebra::charpoly(m);
  if (algebra::unit_circle_root_count(chi.coeffs) > 0) return FailureReason::non_hyperbolic;
  if (!algebra::is_irreducible_poly(chi.coeffs)) return FailureReason::reducible;
  if (!algebra::is_irreducible_poly(algebra::power_charpoly(m, 4).coeffs))
    return FailureReason::l4_reducible;
  if (m.dim() >= 3) {
    algebra::SpectrumReport spec = algebra::spectrum(m, 106);
    for (const auto& c : spec.classes)
      if (c.multiplicity > 2) return FailureReason::three_same_modulus;
  }
  return FailureReason::none;
}

void enumerate_sl(int d, long long T,
                  const std::function<void(const algebra::IntMatrix&)>& sink) {
  if (d != 2)
    throw capacity_error("enumerate_sl: full enumeration is d = 2 only; use sample mode");
  if (T < 1) throw std::invalid_argument("enumerate_sl: T must be >= 1");
  for (long long a = -T; a <= T; ++a)
    for (long long b = -T; b <= T; ++b)
      for (long long c = -T; c <= T; ++c)
        for (long long e = -T; e <= T; ++e) {
          long long det = a * e - b * c;
          if (det != 1 && det != -1) continue;
          sink(algebra::IntMatrix(2, {big_int(a), big_int(b), big_int(c), big_int(e)}));
        }
}

void sample_sl(int d, long long T, int n, std::uint64_t seed,
               const std::function<void(const algebra::IntMatrix&)>& sink, int mix_steps) {
  if (n < 1) throw std::invalid_argument("sample_sl: n must be >= 1");
  if (d < 2) throw std::invalid_argument("sample_sl: d must be >= 2");
  long long produced = 0, attempts = 0;
  const long long max_attempts = std::max<long long>(2000, 1000LL * n);
  while (produced < n) {
    if (attempts >= max_attempts)
      throw capacity_error("sample_sl: rejection rate above 0.999 (T too small for the mix)");
    CounterRng rng(seed, std::uint64_t(attempts));
    ++attempts;
    std::vector<long long> m(std::size_t(d) * d, 0);
    for (int i = 0; i < d; ++i) m[std::size_t(i) * d + i] = 1;
    bool overflow = false;
    for (int s = 0; s < mix_steps && !overflow; ++s) {
      int i = int(rng.next_below(std::uint64_t(d)));
      int j = int(rng.next_below(std::uint64_t(d - 1)));
      if (j >= i) ++j;
      long long c = 1 + (long long)rng.next_below(3);
      if (rng.next_unit() < 0.5) c = -c;
      for (int k = 0; k < d; ++k) {
        m[std::size_t(i) * d + k] += c * m[std::size_t(j) * d + k];
        if (std::llabs(m[std::size_t(i) * d + k]) > (1LL << 56)) overflow = true;
      }
    }
    if (overflow) continue;
    long long mx = 0;
    for (long long v : m) mx = std::max(mx, std::llabs(v));
    if (mx > T) continue;
    std::vector<big_int> e(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) e[i] = big_int(m[i]);
    auto mat = algebra::IntMatrix::try_make(d, std::move(e));
    if (!mat) continue;  // cannot happen for elementary products; guard anyway
    sink(*mat);
    ++produced;
  }
}

namespace {

SurveyRow tally(int d, long long T, const std::string& mode,
                const std::function<void(const std::function<void(const algebra::IntMatrix&)>&)>& run) {
  SurveyRow row;
  row.T = T;
  row.dim = d;
  row.mode = mode;
  run([&](const algebra::IntMatrix& m) {
    ++row.n_total;
    switch (classify(m)) {
      case FailureReason::none: break;
      case FailureReason::non_hyperbolic: ++row.n_non_hyperbolic; break;
      case FailureReason::reducible: ++row.n_reducible; break;
      case FailureReason::l4_reducible: ++row.n_l4_reducible; break;
      case FailureReason::three_same_modulus: ++row.n_three_same_modulus; break;
    }
  });
  row.n_fail =
      row.n_non_hyperbolic + row.n_reducible + row.n_l4_reducible + row.n_three_same_modulus;
  if (row.n_total > 0) {
    row.fail_fraction = double(row.n_fail) / double(row.n_total);
    if (mode == "sample")
      row.fail_stderr =
          std::sqrt(row.fail_fraction * (1.0 - row.fail_fraction) / double(row.n_total));
  }
  return row;
}

}  // namespace

SurveyRow survey_enumerate(int d, long long T) {
  return tally(d, T, "enumerate",
               [&](const std::function<void(const algebra::IntMatrix&)>& sink) {
                 enumerate_sl(d, T, sink);
               });
}

SurveyRow survey_sample(int d, long long T, int n, std::uint64_t seed, int mix_steps) {
  SurveyRow row = tally(d, T, "sample",
                        [&](const std::function<void(const algebra::IntMatrix&)>& sink) {
                          sample_sl(d, T, n, seed, sink, mix_steps);
                        });
  row.seed = seed;
  row.sampling_caveat =
      "random elementary product law, not the uniform measure on the norm ball";
  return row;
}

DecayFit decay_fit(const std::vector<SurveyRow>& rows) {
  DecayFit fit;
  std::vector<double> lt, lf;
  for (const auto& r : rows) {
    if (r.fail_fraction <= 0) {
      fit.warnings.push_back("row T=" + std::to_string(r.T) +
                             " excluded from the fit (zero fail fraction)");
      continue;
    }
    lt.push_back(std::log(double(r.T)));
    lf.push_back(std::log(r.fail_fraction));
  }
  fit.n_used = int(lt.size());
  if (fit.n_used < 3) throw numeric_error("decay_fit: need at least 3 rows with positive fraction");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lt.size(); ++i) {
    sx += lt[i];
    sy += lf[i];
    sxx += lt[i] * lt[i];
    sxy += lt[i] * lf[i];
  }
  double n = double(fit.n_used);
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double icept = (sy - slope * sx) / n;
  fit.delta = -slope;
  fit.c = std::exp(icept);
  double rss = 0;
  for (std::size_t i = 0; i < lt.size(); ++i) {
    double e = lf[i] - (slope * lt[i] + icept);
    rss += e * e;
  }
  fit.residual_rms = std::sqrt(rss / n);
  fit.decaying = fit.delta > 0;
  if (!fit.decaying) fit.warnings.push_back("fitted delta <= 0: fractions are not decaying");
  return fit;
}

}  // namespace survey
}  // namespace toruslab
