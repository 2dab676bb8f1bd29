#pragma once
// Unbiased factorial-effect estimation with conservative (Neymanian)
// standard errors, confidence intervals, one/two-sided p-values and
// multiplicity handling. Randomness comes from treatment assignment alone;
// the variance estimator is conservative unless unit effects are constant.

#include <string>
#include <vector>

#include "factex/design.hpp"
#include "factex/rational.hpp"
#include "factex/summary.hpp"

namespace factex {

enum class Alternative { two_sided, greater, less };
enum class Correction { ier, bonferroni };

const char* to_string(Alternative a);
const char* to_string(Correction c);

// tau-hat = 2^{-(K-1)} L^T p without the mean entry: effects 1..J-1.
// Exact rational arithmetic on counts; the double view may round (5/48 has
// no finite binary expansion) but the rationals never do.
std::vector<Rat> estimate_effects_exact(const GroupSummary& summary,
                                        const ContrastMatrix& L);
std::vector<double> estimate_effects(const GroupSummary& summary,
                                     const ContrastMatrix& L);

// grand mean estimate p-bar = 2^{-K} sum_j p_j
Rat estimate_mean_exact(const GroupSummary& summary);

// sqrt(2^{-2(K-1)} sum_j s_j^2 / N_j); identical for every effect.
// Throws DegeneracyError when any arm has fewer than 2 units.
double neyman_se(const GroupSummary& summary);
Rat neyman_se_squared_exact(const GroupSummary& summary);

struct EffectRow {
  int ell = 0;             // effect index 1..J-1
  std::string label;
  double estimate = 0;
  Rat estimate_exact;
  double se = 0;
  double statistic = 0;
  double lower = 0, upper = 0;  // +-infinity on the open side of one-sided intervals
  double p_raw = 1;
  double p_adjusted = 1;
  bool reject = false;     // p_adjusted <= alpha
};

struct InferenceTable {
  std::vector<EffectRow> rows;  // effects 1..J-1 in contrast-column order
  double alpha = 0.05;
  Alternative alternative = Alternative::two_sided;
  Correction correction = Correction::ier;
  int family_size = 0;  // Bonferroni divisor G; J-1 unless overridden
  double se = 0;        // the common standard error
  double mean = 0;      // grand mean estimate
};

// Full inference at level alpha. family_size 0 means J-1 (all factorial
// effects tested). Throws DegeneracyError when the standard error is zero;
// exact enumeration is the fallback for such data.
InferenceTable infer(const GroupSummary& summary, double alpha,
                     Alternative alternative, Correction correction,
                     int family_size = 0);

}  // namespace factex
