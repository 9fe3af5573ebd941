#pragma once

// Genericity study: the fraction of norm-bounded unimodular matrices failing
// the rigidity hypotheses, and the c T^{-delta} decay fit.

#include <functional>
#include <string>

#include "toruslab/algebra.hpp"

namespace toruslab {
namespace survey {

enum class FailureReason { none, non_hyperbolic, reducible, l4_reducible, three_same_modulus };

const char* failure_reason_name(FailureReason r);

// first failed check, in the documented order: non-hyperbolic, reducible,
// L^4-reducible given irreducible, three-same-modulus; all exact
FailureReason classify(const algebra::IntMatrix& m);

// every matrix with max-entry norm <= T and det +-1, exactly once, in
// lexicographic entry order; d = 2 only (capacity_error otherwise, use
// sample mode for d >= 3)
void enumerate_sl(int d, long long T, const std::function<void(const algebra::IntMatrix&)>& sink);

// n random products of elementary shear matrices with det +1, max entry <= T,
// seeded and reproducible; the sampling law is "random elementary product",
// NOT uniform (every report carries this caveat)
void sample_sl(int d, long long T, int n, std::uint64_t seed,
               const std::function<void(const algebra::IntMatrix&)>& sink, int mix_steps = 20);

struct SurveyRow {
  long long T = 0;
  int dim = 0;
  std::string mode;           // "enumerate" or "sample"
  std::string sampling_caveat;  // non-uniformity note in sample mode
  long long n_total = 0;
  long long n_non_hyperbolic = 0;
  long long n_reducible = 0;
  long long n_l4_reducible = 0;
  long long n_three_same_modulus = 0;
  long long n_fail = 0;
  double fail_fraction = 0;
  double fail_stderr = 0;  // binomial, sample mode
  std::uint64_t seed = 0;
};

SurveyRow survey_enumerate(int d, long long T);
SurveyRow survey_sample(int d, long long T, int n, std::uint64_t seed, int mix_steps = 20);

struct DecayFit {
  double c = 0;
  double delta = 0;
  double residual_rms = 0;
  int n_used = 0;
  bool decaying = false;  // delta > 0
  std::vector<std::string> warnings;
};

// least squares of log fail_fraction against log T; zero-fraction rows are
// excluded with a warning; fewer than 3 usable rows raises numeric_error
DecayFit decay_fit(const std::vector<SurveyRow>& rows);

}  // namespace survey
}  // namespace toruslab
