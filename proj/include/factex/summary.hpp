#pragma once
// Observed data and its per-treatment reduction: counts, proportions and
// sample variances. The summary is the sufficient statistic every analysis
// consumes; unit-level and summary-level ingestion meet here.

#include <vector>

#include "factex/design.hpp"
#include "factex/errors.hpp"
#include "factex/rational.hpp"

namespace factex {

struct ObservedDataset {
  FactorialDesign design;
  // (treatment index 1..J, outcome 0/1) per unit
  std::vector<std::pair<int, int>> records;
};

class GroupSummary {
 public:
  // counts per treatment, outer index 0..J-1 for treatments 1..J;
  // n1[j] <= n[j] is validated, n[j] >= 2 is not (variance users check)
  GroupSummary(FactorialDesign design, std::vector<long long> n,
               std::vector<long long> n1);

  const FactorialDesign& design() const { return design_; }
  int J() const { return static_cast<int>(n_.size()); }
  long long total() const;

  long long n(int j) const { return n_[j]; }    // j is 0-based
  long long n1(int j) const { return n1_[j]; }
  long long n0(int j) const { return n_[j] - n1_[j]; }

  double p(int j) const { return static_cast<double>(n1_[j]) / n_[j]; }
  Rat p_exact(int j) const { return Rat(n1_[j], n_[j]); }

  bool variances_defined() const;  // all arms have n >= 2

  // s_j^2 = n_j/(n_j - 1) p_j (1 - p_j); throws DegeneracyError when n_j < 2
  double sample_variance(int j) const;
  Rat sample_variance_exact(int j) const;

  std::vector<double> proportions() const;

 private:
  FactorialDesign design_;
  std::vector<long long> n_, n1_;
};

// Reduce unit records to counts. Throws InputError when a treatment group is
// empty (naming the treatment) and DegeneracyError when any group has a
// single unit, since its sample variance is undefined.
GroupSummary summarize(const ObservedDataset& data);

// counts-only reduction, no group-size validation; used by ingestion paths
// that defer the checks to analysis time
GroupSummary tabulate(const ObservedDataset& data);

}  // namespace factex
