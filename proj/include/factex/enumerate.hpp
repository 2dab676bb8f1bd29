#pragma once

#include <cstdint>
#include <vector>

#include "factex/population.hpp"
#include "factex/rational.hpp"

namespace factex {

// Exact moments of the estimator over every complete-randomization
// assignment, computed in integer arithmetic and reduced to rationals at the
// end. Used to verify the distribution theory on small tables.
struct EnumerationResult {
  Rat assignment_count;                    // multinomial N! / prod N_j!
  std::vector<Rat> mean_tau;               // E(tau^), length J - 1
  std::vector<std::vector<Rat>> cov_tau;   // Cov(tau^), (J-1) x (J-1)
  std::vector<Rat> mean_p;                 // E(p_j), length J
  std::vector<std::vector<Rat>> cov_p;     // Cov(p_j, p_j'), J x J
  bool variances_defined = false;          // all arms have at least 2 units
  std::vector<Rat> mean_s2;                // E(s2_j), length J; needs 2 per arm
  Rat mean_se2;                            // E(SE^2); likewise
};

// Walks all assignments. Throws InfeasibilityError when the assignment count
// exceeds `cap` (the count is reported in the message) and InputError when
// the plan does not match the table. Serial and parallel paths accumulate in
// exact integers, so their results are identical, not merely close.
EnumerationResult enumerate_randomizations(const PotentialOutcomesTable& table,
                                           const ContrastMatrix& contrasts,
                                           const AllocationPlan& plan,
                                           std::uint64_t cap = 1000000,
                                           bool parallel = true);

EnumerationResult enumerate_randomizations_serial(const PotentialOutcomesTable& table,
                                                  const ContrastMatrix& contrasts,
                                                  const AllocationPlan& plan,
                                                  std::uint64_t cap = 1000000);

}  // namespace factex
