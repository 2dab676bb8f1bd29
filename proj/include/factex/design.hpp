#pragma once
// 2^K factorial designs: treatment-combination indexing, the J x J contrast
// matrix (mean column, main effects, interactions of increasing order), and
// unit-level effect algebra shared by every other component.

#include <cstdint>
#include <string>
#include <vector>

#include "factex/errors.hpp"

namespace factex {

struct FactorialDesign {
  int K = 0;
  std::vector<std::string> factor_names;

  // names default to f1..fK when not supplied
  explicit FactorialDesign(int k, std::vector<std::string> names = {});

  int num_treatments() const { return 1 << K; }  // J = 2^K

  // levels: one 0/1 entry per factor, first factor most significant.
  // Returns the 1-based treatment index: (0,...,0) -> 1, (1,...,1) -> J.
  int treatment_index(const std::vector<int>& levels) const;

  // inverse of treatment_index; index is 1-based
  std::vector<int> levels_of(int treatment) const;
};

// J x J matrix over {-1,+1}. Column 0 is the all-ones mean column; effect
// columns follow in the canonical order: main effects in declared factor
// order, then interactions grouped by order and lexicographic within order
// (for K=3: mean, 1, 2, 3, 12, 13, 23, 123). Interaction columns are
// element-wise products of their constituent main-effect columns.
class ContrastMatrix {
 public:
  static ContrastMatrix build(const FactorialDesign& design);

  int J() const { return J_; }
  int K() const { return K_; }

  // row is the 1-based treatment index, col in 0..J-1 (0 = mean)
  int entry(int row, int col) const {
    return entries_[static_cast<std::size_t>(row - 1) * J_ + col];
  }

  // effect labels, e.g. "race", "race:gender"; label(0) == "mean"
  const std::string& label(int col) const { return labels_[col]; }
  const std::vector<std::string>& labels() const { return labels_; }

  // 0 if no such label; effect columns are 1..J-1
  int column_of_label(const std::string& label) const;

  // bitmask of factor indices (bit k = factor k+1) making up column col
  unsigned factor_mask(int col) const { return masks_[col]; }

 private:
  int J_ = 0;
  int K_ = 0;
  std::vector<std::int8_t> entries_;  // row-major J x J
  std::vector<std::string> labels_;
  std::vector<unsigned> masks_;
};

// Unit-level effect vector 2^{-(K-1)} L^T Y_i for one row of potential
// outcomes. Entry 0 is twice the unit's mean outcome; entries 1..J-1 are the
// unit-level factorial effects. All values are integers divided by 2^{K-1},
// so the doubles returned are exact.
std::vector<double> unit_effects(const std::vector<int>& row, const ContrastMatrix& L);

// same contraction with integer numerators: returns L^T Y_i (caller divides
// by 2^{K-1}); used where exact arithmetic is required
std::vector<long long> unit_effect_numerators(const std::vector<int>& row,
                                              const ContrastMatrix& L);

}  // namespace factex
