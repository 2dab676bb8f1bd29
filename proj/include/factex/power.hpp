#pragma once

#include <string>
#include <vector>

#include "factex/design.hpp"
#include "factex/estimation.hpp"
#include "factex/summary.hpp"

namespace factex {

// A priori variance information for planning. Three modes:
//   variances   - the values are the S2_j guesses themselves, used as-is.
//   proportions - the values are guessed arm proportions P_j; the implied
//                 variance N/(N-1) * P(1-P) depends on the planning N.
//   pilot       - the values are pilot proportions with a common pilot arm
//                 size r0; the guess r0/(r0-1) * p(1-p) does not move with N.
struct VarianceGuess {
  enum class Mode { variances, proportions, pilot };

  Mode mode = Mode::variances;
  std::vector<double> values;  // one per treatment, treatment order
  int pilot_arm_size = 0;      // required for Mode::pilot

  // Per-arm variance guesses at planning size N (N only matters for
  // Mode::proportions). Throws InputError on malformed input: wrong length,
  // variances negative, proportions outside [0,1], pilot arm size < 2.
  std::vector<double> resolve_s2(long long total_n) const;

  // Pilot-mode guess built from observed data: arm proportions plus the
  // common arm size, which must actually be common across arms.
  static VarianceGuess from_summary(const GroupSummary& summary);
};

std::string to_string(VarianceGuess::Mode mode);

// Arm sizes chosen before randomization.
struct AllocationPlan {
  long long total = 0;
  std::vector<long long> arm_sizes;  // treatment order, every entry >= 2
  std::string rule;                  // "balanced", "A", "E"

  // Arm shares N_j / N.
  std::vector<double> deltas() const;
};

// Equal split. Throws InfeasibilityError when J does not divide N, naming
// the nearest feasible sizes on both sides.
AllocationPlan allocate_balanced(const FactorialDesign& design, long long total_n);

// criterion: 'D' (balanced), 'A' (arm sizes proportional to the guessed
// standard deviations), or 'E' (proportional to the guessed variances).
// Real-valued targets are integerized by largest remainder with a floor of
// two units per arm. Requires N >= 2J. 'D' with J | N falls through to
// allocate_balanced; 'D' otherwise throws like allocate_balanced does.
AllocationPlan allocate_optimal(const FactorialDesign& design, char criterion,
                                const VarianceGuess& guess, long long total_n);

// Conservative standard error sqrt(2^-2(K-1) sum_j S2~_j / N_j) implied by a
// guess and a plan.
double se_tilde(const FactorialDesign& design, const VarianceGuess& guess,
                const AllocationPlan& plan);

// Conservative power of the level-alpha two-sided test when the true effect
// is tau_star and the conservative SE is se:
//   2 - Phi(z_{alpha/2} - tau*/se) - Phi(z_{alpha/2} + tau*/se).
double power_two_sided(double tau_star, double se, double alpha);

// One-sided counterpart. greater: 1 - Phi(z_alpha - tau*/se);
// less: Phi(z_{1-alpha} - tau*/se). Alternative::two_sided delegates.
double power_one_sided(double tau_star, double se, double alpha, Alternative alt);

// One effect's planning inputs. tau_star is the absolute effect size to
// detect; family_size = 0 means J - 1 when the correction needs it.
struct PowerSpec {
  int ell = 1;  // 1-based effect index in contrast-column order
  std::string label;
  double tau_star = 0.0;
  double alpha = 0.05;
  Alternative alternative = Alternative::two_sided;
  Correction correction = Correction::ier;
  int family_size = 0;
};

struct PowerPoint {
  long long total_n = 0;
  bool feasible = true;             // J | N when the rule is balanced
  std::vector<double> marginal;     // one per spec
  double joint = 1.0;               // product of the marginals
};

struct PowerCurve {
  std::vector<PowerSpec> specs;
  std::vector<PowerPoint> points;
  double target = 0.0;              // 0 disables the search
  long long smallest_n = -1;        // first feasible grid N with joint >= target
};

// Evaluate conservative power along a grid of total sizes. rule picks the
// allocation ('D', 'A', 'E'); infeasible balanced sizes are carried in the
// curve with feasible = false and skipped by the target search.
PowerCurve power_curve(const FactorialDesign& design,
                       const std::vector<PowerSpec>& specs,
                       const VarianceGuess& guess, char rule,
                       const std::vector<long long>& n_grid,
                       double target_joint = 0.0);

struct SampleSizeResult {
  double raw = 0.0;        // the closed-form real-valued size
  long long rounded = 0;   // ceil(raw)
  long long feasible = 0;  // rounded pushed up to the rule's feasibility
};

// Closed-form total size for a one-sided level-alpha test to reach power
// beta_target against tau_star, given arm shares deltas and a variance
// guess. Mode::proportions includes the finite-population +1 correction;
// Mode::variances and Mode::pilot do not. Requires beta_target > max(alpha,
// 0.5) so z_alpha - z_beta > 0. feasible rounds up to a multiple of J for
// rule 'D' and to at least 2J otherwise.
SampleSizeResult sample_size(const FactorialDesign& design, double tau_star,
                             double alpha, double beta_target,
                             const std::vector<double>& deltas,
                             const VarianceGuess& guess, char rule = 'D');

}  // namespace factex
