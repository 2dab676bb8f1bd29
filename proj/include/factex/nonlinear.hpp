#pragma once
// Non-linear factorial estimands for binary outcomes: contrasts of log
// proportions (log factorial effects, the geometric-mean risk-ratio
// generalization) and of log odds (logit factorial effects), with plug-in
// estimators and delta-method variance estimates.

#include <string>
#include <vector>

#include "factex/estimation.hpp"
#include "factex/summary.hpp"

namespace factex {

enum class NonlinearKind { log_fe, logit_fe };

const char* to_string(NonlinearKind k);

// Proportions feeding the non-linear estimators. The optional continuity
// correction replaces each arm's counts by n1 + 0.5 and n0 + 0.5, so
// p_j = (n1 + 0.5)/(N_j + 1); group sizes elsewhere stay as observed. The
// variance plug-in then recomputes s_j^2 = N_j/(N_j-1) p_j (1-p_j) from the
// corrected proportion.
std::vector<double> nonlinear_proportions(const GroupSummary& summary,
                                          bool continuity_correction);

// eta_ell = 2^{-(K-1)} sum_j lambda_{ell j} log p_j, effects 1..J-1.
// Throws DegeneracyError when some p_j = 0 (log_fe) or p_j in {0,1}
// (logit_fe) and the correction is off, naming the offending arm.
std::vector<double> estimate_logfe(const GroupSummary& summary, const ContrastMatrix& L,
                                   bool continuity_correction = false);
std::vector<double> estimate_logitfe(const GroupSummary& summary, const ContrastMatrix& L,
                                     bool continuity_correction = false);

// Delta-method plug-in variance per effect: sample variances for the true
// ones, observed proportions for the true ones, and the non-estimable
// cross-arm difference variances set to zero (their contrast-weighted cross
// terms are retained). A negative plug-in value is clamped to zero and
// flagged.
struct NonlinearVariance {
  std::vector<double> variance;  // effects 1..J-1
  std::vector<bool> clamped;     // true where a negative value was clamped
};
NonlinearVariance nonlinear_variance_estimate(const GroupSummary& summary,
                                              const ContrastMatrix& L, NonlinearKind kind,
                                              bool continuity_correction = false);

struct NonlinearRow {
  int ell = 0;
  std::string label;
  double estimate = 0;
  double variance = 0;
  double se = 0;
  double statistic = 0;
  double lower = 0, upper = 0;
  double p_raw = 1;
  double p_adjusted = 1;
  bool reject = false;
  bool variance_clamped = false;
};

struct NonlinearTable {
  NonlinearKind kind = NonlinearKind::log_fe;
  std::vector<NonlinearRow> rows;
  double alpha = 0.05;
  Alternative alternative = Alternative::two_sided;
  Correction correction = Correction::ier;
  int family_size = 0;
  bool continuity_correction = false;
};

// Normal-approximation inference using the plug-in variances. Unlike the
// linear table, the standard error differs per effect. A zero plug-in
// variance (including a clamped one) admits no test, so inference refuses
// with DegeneracyError rather than emit a fabricated certainty.
NonlinearTable nonlinear_infer(const GroupSummary& summary, const ContrastMatrix& L,
                               NonlinearKind kind, double alpha, Alternative alternative,
                               Correction correction = Correction::ier,
                               int family_size = 0, bool continuity_correction = false);

}  // namespace factex
