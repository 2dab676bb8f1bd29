#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factex/estimation.hpp"
#include "factex/population.hpp"

namespace factex {

// One complete randomization: a treatment label (1..J) per unit, drawn
// uniformly from the arrangements with the plan's arm sizes. Deterministic in
// (seed, draw_index) so draws are reproducible independent of scheduling.
std::vector<int> draw_assignment(const AllocationPlan& plan, std::uint64_t seed,
                                 std::uint64_t draw_index);

struct SimulateOptions {
  long long draws = 1000;
  double alpha = 0.05;
  Alternative alternative = Alternative::two_sided;
  Correction correction = Correction::ier;  // which joint rate is the headline
  int family_size = 0;                 // 0 means J - 1
  std::vector<int> joint_effects;     // 1-based; empty means all J - 1
  std::uint64_t seed = 0;
  bool parallel = true;
};

// Monte Carlo summary of the estimator and test over repeated randomization
// of one fixed table. Both multiplicity policies are tallied in one pass.
// Draws where some arm is constant (SE = 0) cannot be tested; they are
// counted in degenerate_draws and excluded from rejection and coverage
// denominators, while estimates still average over all draws.
struct SimulationReport {
  long long draws = 0;
  long long degenerate_draws = 0;
  std::vector<double> mean_estimate;   // per effect, all draws
  std::vector<double> empirical_var;   // per effect, all draws
  std::vector<double> reject_ier;      // per effect, tested draws, raw p <= alpha
  std::vector<double> reject_eer;      // same with Bonferroni-adjusted p
  std::vector<double> coverage;        // per effect, unadjusted interval covers tau_fp
  double joint_reject_ier = 0.0;       // all joint_effects rejected at once
  double joint_reject_eer = 0.0;
  std::uint64_t seed = 0;

  // the joint rate the options' correction selects
  double joint_rate(Correction c) const {
    return c == Correction::bonferroni ? joint_reject_eer : joint_reject_ier;
  }
};

SimulationReport simulate(const PotentialOutcomesTable& table,
                          const ContrastMatrix& contrasts, const AllocationPlan& plan,
                          const SimulateOptions& options);

// Single-threaded reference with identical output, kept for testing the
// parallel path against.
SimulationReport simulate_serial(const PotentialOutcomesTable& table,
                                 const ContrastMatrix& contrasts,
                                 const AllocationPlan& plan,
                                 const SimulateOptions& options);

// Robustness protocol: permute the table's columns `populations` times and
// simulate each permuted table with a substream-derived seed. The population
// at index p uses column permutations (seed, p) and simulation seed derived
// from (seed, p) in a separate domain, so the whole protocol is reproducible
// from one seed.
struct ProtocolResult {
  std::vector<SimulationReport> reports;  // one per population
  std::vector<double> joint_power;        // convenience copy per population
  double mean_joint_power = 0.0;
  double min_joint_power = 0.0;
};

ProtocolResult run_protocol(const PotentialOutcomesTable& table,
                            const ContrastMatrix& contrasts, const AllocationPlan& plan,
                            int populations, const SimulateOptions& options);

}  // namespace factex
