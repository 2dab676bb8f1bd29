#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factex/design.hpp"
#include "factex/power.hpp"
#include "factex/rational.hpp"

namespace factex {

// A complete table of binary potential outcomes: N units by J treatments.
// Everything downstream of it (finite-population effects, the randomization
// covariance, exact power) is a deterministic function of this table, so the
// accessors return exact rationals with double views layered on top.
class PotentialOutcomesTable {
 public:
  // Explicit table. Each row holds J entries in {0, 1}.
  PotentialOutcomesTable(FactorialDesign design,
                         std::vector<std::vector<std::uint8_t>> outcomes);

  // Comonotone table matching marginal proportions: column j gets its ones
  // in units 0..round(N * P_j) - 1. Every N * P_j must be within 1e-6 of an
  // integer; otherwise throws InfeasibilityError naming the offending column
  // and the nearest N that makes all columns integral.
  static PotentialOutcomesTable from_proportions(const FactorialDesign& design,
                                                 long long num_units,
                                                 const std::vector<double>& p);

  // Copy of this table with each column independently permuted. Marginal
  // counts are invariant; the unit-level association structure is not.
  PotentialOutcomesTable permuted(std::uint64_t seed, std::uint64_t index) const;

  const FactorialDesign& design() const { return design_; }
  long long num_units() const { return static_cast<long long>(outcomes_.size()); }
  int num_treatments() const { return design_.num_treatments(); }
  int outcome(long long unit, int treatment) const {
    return outcomes_[static_cast<std::size_t>(unit)][static_cast<std::size_t>(treatment - 1)];
  }

  // Column mean P_j, exact.
  Rat proportion_exact(int treatment) const;
  double proportion(int treatment) const;

  // Finite-population column variance S2_j = sum_i (y - P)^2 / (N - 1);
  // for binary outcomes this is o(N - o) / (N (N - 1)) with o the count of
  // ones.
  Rat column_variance_exact(int treatment) const;
  double column_variance(int treatment) const;

  // Variance of the difference column y_j - y_j', same 1/(N-1) scaling.
  Rat difference_variance_exact(int treatment_a, int treatment_b) const;

  // Covariance of columns j and j', S_jj' = sum_i (y_j - P_j)(y_j' - P_j')
  // / (N - 1).
  Rat column_covariance_exact(int treatment_a, int treatment_b) const;

  // Unit-level effect tau_i,ell = 2^-(K-1) sum_j lambda_ell,j y_i(j).
  Rat unit_effect_exact(long long unit, int ell, const ContrastMatrix& contrasts) const;

  // Finite-population effects tau_ell = 2^-(K-1) sum_j lambda_ell,j P_j,
  // ell = 1..J-1.
  std::vector<Rat> effects_exact(const ContrastMatrix& contrasts) const;
  std::vector<double> effects(const ContrastMatrix& contrasts) const;

  // Between-unit effect variance S2_tau,ell = sum_i (tau_i - tau)^2 / (N - 1).
  Rat effect_variance_exact(int ell, const ContrastMatrix& contrasts) const;

  // True randomization covariance of the effect estimator under complete
  // randomization with the given arm sizes:
  //   2^-2(K-1) sum_j S2_j / N_j lam~_j lam~_j' - (1/N) S2_tau
  // as a (J-1) x (J-1) matrix of exact rationals, lam~_j being the rows of
  // the contrast matrix without the mean column.
  std::vector<std::vector<Rat>> covariance_exact(const ContrastMatrix& contrasts,
                                                 const AllocationPlan& plan) const;
  std::vector<std::vector<double>> covariance(const ContrastMatrix& contrasts,
                                              const AllocationPlan& plan) const;

  // E(SE^2) for the conservative estimator: 2^-2(K-1) sum_j S2_j / N_j.
  Rat expected_se_squared_exact(const AllocationPlan& plan) const;

 private:
  FactorialDesign design_;
  std::vector<std::vector<std::uint8_t>> outcomes_;  // rows: units
};

// Regularity diagnostics for the normal approximation: arm shares, column
// variances and covariances, the largest squared standardized deviation
// (which must vanish as N grows for the CLT to hold), and flags for
// zero-variance columns where the approximation degenerates.
struct CltConditionReport {
  std::vector<double> arm_share;                       // N_j / N
  std::vector<double> column_variance;                 // S2_j
  std::vector<std::vector<double>> column_covariance;  // S_jj', J x J
  double max_deviation = 0.0;  // max_ij (y_i(j) - P_j)^2 / N
  std::vector<bool> zero_variance;
};

CltConditionReport clt_condition_report(const PotentialOutcomesTable& table,
                                        const AllocationPlan& plan);

// Power of the level-alpha two-sided test for effect ell when the full table
// is known: with r = sqrt(E(SE^2)) / sd(tau^_ell),
//   2 - Phi(r z_{alpha/2} - tau/sd) - Phi(r z_{alpha/2} + tau/sd).
// Throws DegeneracyError when the true variance is zero.
double power_exact(const PotentialOutcomesTable& table, const ContrastMatrix& contrasts,
                   const AllocationPlan& plan, int ell, double alpha);

}  // namespace factex
