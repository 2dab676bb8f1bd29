#include "factex/summary.hpp"

#include <numeric>

namespace factex {

GroupSummary::GroupSummary(FactorialDesign design, std::vector<long long> n,
                           std::vector<long long> n1)
    : design_(std::move(design)), n_(std::move(n)), n1_(std::move(n1)) {
  const std::size_t J = static_cast<std::size_t>(design_.num_treatments());
  if (n_.size() != J || n1_.size() != J)
    throw InputError("summary: expected counts for " + std::to_string(J) + " treatments");
  for (std::size_t j = 0; j < J; ++j) {
    if (n_[j] < 1)
      throw InputError("summary: treatment " + std::to_string(j + 1) + " has no units");
    if (n1_[j] < 0 || n1_[j] > n_[j])
      throw InputError("summary: treatment " + std::to_string(j + 1) +
                       " has n1 outside 0..n");
  }
}

long long GroupSummary::total() const {
  return std::accumulate(n_.begin(), n_.end(), 0LL);
}

bool GroupSummary::variances_defined() const {
  for (long long nj : n_)
    if (nj < 2) return false;
  return true;
}

double GroupSummary::sample_variance(int j) const {
  return sample_variance_exact(j).to_double();
}

Rat GroupSummary::sample_variance_exact(int j) const {
  const long long nj = n_[static_cast<std::size_t>(j)];
  if (nj < 2)
    throw DegeneracyError("summary: treatment " + std::to_string(j + 1) +
                          " has a single unit, sample variance undefined");
  // n/(n-1) p (1-p) = n1 (n - n1) / (n (n-1))
  const long long ones = n1_[static_cast<std::size_t>(j)];
  return Rat(checked_mul(ones, nj - ones), checked_mul(nj, nj - 1));
}

std::vector<double> GroupSummary::proportions() const {
  std::vector<double> out(n_.size());
  for (std::size_t j = 0; j < n_.size(); ++j) out[j] = p(static_cast<int>(j));
  return out;
}

GroupSummary tabulate(const ObservedDataset& data) {
  const int J = data.design.num_treatments();
  std::vector<long long> n(static_cast<std::size_t>(J), 0);
  std::vector<long long> n1(static_cast<std::size_t>(J), 0);
  for (const auto& [treatment, outcome] : data.records) {
    if (treatment < 1 || treatment > J)
      throw InputError("dataset: treatment index " + std::to_string(treatment) +
                       " outside 1.." + std::to_string(J));
    if (outcome != 0 && outcome != 1)
      throw InputError("dataset: outcomes must be 0 or 1, got " + std::to_string(outcome));
    ++n[static_cast<std::size_t>(treatment - 1)];
    n1[static_cast<std::size_t>(treatment - 1)] += outcome;
  }
  for (int j = 0; j < J; ++j)
    if (n[static_cast<std::size_t>(j)] == 0)
      throw InputError("dataset: treatment " + std::to_string(j + 1) + " has no units");
  return GroupSummary(data.design, std::move(n), std::move(n1));
}

GroupSummary summarize(const ObservedDataset& data) {
  GroupSummary summary = tabulate(data);
  for (int j = 0; j < summary.J(); ++j)
    if (summary.n(j) < 2)
      throw DegeneracyError("dataset: treatment " + std::to_string(j + 1) +
                            " has a single unit, sample variance undefined");
  return summary;
}

}  // namespace factex
