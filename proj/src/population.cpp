#include "factex/population.hpp"

#include <algorithm>
#include <cmath>

#include "factex/errors.hpp"
#include "factex/normal.hpp"
#include "factex/rng.hpp"

namespace factex {

namespace {

bool integral_targets(long long n, const std::vector<double>& p) {
  for (double pj : p) {
    const double scaled = static_cast<double>(n) * pj;
    if (std::fabs(scaled - std::llround(scaled)) > 1e-6) return false;
  }
  return true;
}

}  // namespace

PotentialOutcomesTable::PotentialOutcomesTable(
    FactorialDesign design, std::vector<std::vector<std::uint8_t>> outcomes)
    : design_(std::move(design)), outcomes_(std::move(outcomes)) {
  if (outcomes_.empty()) throw InputError("population: table has no units");
  const std::size_t J = static_cast<std::size_t>(design_.num_treatments());
  for (std::size_t i = 0; i < outcomes_.size(); ++i) {
    if (outcomes_[i].size() != J)
      throw InputError("population: unit " + std::to_string(i + 1) + " has " +
                       std::to_string(outcomes_[i].size()) + " outcomes, expected " +
                       std::to_string(J));
    for (std::uint8_t y : outcomes_[i])
      if (y > 1)
        throw InputError("population: unit " + std::to_string(i + 1) +
                         " has a non-binary outcome");
  }
}

PotentialOutcomesTable PotentialOutcomesTable::from_proportions(
    const FactorialDesign& design, long long num_units, const std::vector<double>& p) {
  const int J = design.num_treatments();
  if (static_cast<int>(p.size()) != J)
    throw InputError("population: expected " + std::to_string(J) +
                     " target proportions, got " + std::to_string(p.size()));
  if (num_units < 1) throw InputError("population: need at least one unit");
  for (int j = 0; j < J; ++j)
    if (!(p[static_cast<std::size_t>(j)] >= 0.0 && p[static_cast<std::size_t>(j)] <= 1.0))
      throw InputError("population: target proportion for treatment " +
                       std::to_string(j + 1) + " must lie in [0,1]");

  for (int j = 0; j < J; ++j) {
    const double scaled = static_cast<double>(num_units) * p[static_cast<std::size_t>(j)];
    if (std::fabs(scaled - std::llround(scaled)) > 1e-6) {
      // look for the closest sizes that make every target an integer count
      long long above = 0, below = 0;
      for (long long n = num_units + 1; n <= num_units + 1000000; ++n)
        if (integral_targets(n, p)) { above = n; break; }
      for (long long n = num_units - 1; n >= 1; --n)
        if (integral_targets(n, p)) { below = n; break; }
      std::string hint;
      if (below > 0) hint += " " + std::to_string(below);
      if (above > 0) hint += (hint.empty() ? " " : " and ") + std::to_string(above);
      throw InfeasibilityError(
          "population: N*P = " + std::to_string(num_units) + "*" +
          std::to_string(p[static_cast<std::size_t>(j)]) + " for treatment " +
          std::to_string(j + 1) + " is not an integer count" +
          (hint.empty() ? "" : "; nearest feasible N:" + hint));
    }
  }

  // comonotone baseline: every column puts its ones on the lowest unit
  // indices, so columns are maximally aligned before any permutation
  std::vector<std::vector<std::uint8_t>> outcomes(
      static_cast<std::size_t>(num_units),
      std::vector<std::uint8_t>(static_cast<std::size_t>(J), 0));
  for (int j = 0; j < J; ++j) {
    const long long ones =
        std::llround(static_cast<double>(num_units) * p[static_cast<std::size_t>(j)]);
    for (long long i = 0; i < ones; ++i)
      outcomes[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1;
  }
  return PotentialOutcomesTable(design, std::move(outcomes));
}

PotentialOutcomesTable PotentialOutcomesTable::permuted(std::uint64_t seed,
                                                        std::uint64_t index) const {
  const std::size_t N = outcomes_.size();
  const int J = num_treatments();
  // per-population key, then one independent stream per column
  const std::uint64_t population_key = derive_stream_key(seed, kRngDomainPermute, index);
  std::vector<std::vector<std::uint8_t>> permuted_outcomes = outcomes_;
  std::vector<std::uint8_t> column(N);
  for (int j = 0; j < J; ++j) {
    for (std::size_t i = 0; i < N; ++i) column[i] = outcomes_[i][static_cast<std::size_t>(j)];
    CounterRng rng(population_key, kRngDomainPermute, static_cast<std::uint64_t>(j));
    rng.shuffle(column);
    for (std::size_t i = 0; i < N; ++i) permuted_outcomes[i][static_cast<std::size_t>(j)] = column[i];
  }
  return PotentialOutcomesTable(design_, std::move(permuted_outcomes));
}

Rat PotentialOutcomesTable::proportion_exact(int treatment) const {
  long long ones = 0;
  for (const auto& row : outcomes_) ones += row[static_cast<std::size_t>(treatment - 1)];
  return Rat(ones, num_units());
}

double PotentialOutcomesTable::proportion(int treatment) const {
  return proportion_exact(treatment).to_double();
}

Rat PotentialOutcomesTable::column_variance_exact(int treatment) const {
  const long long N = num_units();
  if (N < 2) throw DegeneracyError("population: variance needs at least two units");
  long long ones = 0;
  for (const auto& row : outcomes_) ones += row[static_cast<std::size_t>(treatment - 1)];
  return Rat(checked_mul(ones, N - ones), checked_mul(N, N - 1));
}

double PotentialOutcomesTable::column_variance(int treatment) const {
  return column_variance_exact(treatment).to_double();
}

Rat PotentialOutcomesTable::difference_variance_exact(int treatment_a,
                                                      int treatment_b) const {
  const long long N = num_units();
  if (N < 2) throw DegeneracyError("population: variance needs at least two units");
  long long sum = 0, sum_sq = 0;
  for (const auto& row : outcomes_) {
    const int d = static_cast<int>(row[static_cast<std::size_t>(treatment_a - 1)]) -
                  static_cast<int>(row[static_cast<std::size_t>(treatment_b - 1)]);
    sum += d;
    sum_sq += d * d;
  }
  // sum_i (d_i - mean)^2 = sum d^2 - (sum d)^2 / N
  return Rat(checked_mul(N, sum_sq) - checked_mul(sum, sum), checked_mul(N, N - 1));
}

Rat PotentialOutcomesTable::column_covariance_exact(int treatment_a, int treatment_b) const {
  const long long N = num_units();
  if (N < 2) throw DegeneracyError("population: covariance needs at least two units");
  long long ones_a = 0, ones_b = 0, both = 0;
  for (const auto& row : outcomes_) {
    const std::uint8_t a = row[static_cast<std::size_t>(treatment_a - 1)];
    const std::uint8_t b = row[static_cast<std::size_t>(treatment_b - 1)];
    ones_a += a;
    ones_b += b;
    both += a & b;
  }
  return Rat(checked_mul(N, both) - checked_mul(ones_a, ones_b), checked_mul(N, N - 1));
}

namespace {

// integer contrast contraction u_ell = sum_j lambda_ell,j y(j); tau_i,ell is
// u_ell / 2^{K-1}
std::vector<long long> row_numerators(const std::vector<std::uint8_t>& row,
                                      const ContrastMatrix& L) {
  std::vector<long long> u(static_cast<std::size_t>(L.J()), 0);
  for (int j = 1; j <= L.J(); ++j) {
    if (row[static_cast<std::size_t>(j - 1)] == 0) continue;
    for (int col = 0; col < L.J(); ++col) u[static_cast<std::size_t>(col)] += L.entry(j, col);
  }
  return u;
}

}  // namespace

Rat PotentialOutcomesTable::unit_effect_exact(long long unit, int ell,
                                              const ContrastMatrix& contrasts) const {
  const std::vector<long long> u =
      row_numerators(outcomes_[static_cast<std::size_t>(unit)], contrasts);
  return Rat(u[static_cast<std::size_t>(ell)], int128(1) << (contrasts.K() - 1));
}

std::vector<Rat> PotentialOutcomesTable::effects_exact(const ContrastMatrix& contrasts) const {
  const int J = contrasts.J();
  const Rat scale(1, int128(1) << (contrasts.K() - 1));
  std::vector<Rat> out;
  out.reserve(static_cast<std::size_t>(J - 1));
  for (int ell = 1; ell < J; ++ell) {
    Rat acc;
    for (int j = 1; j <= J; ++j) {
      const Rat pj = proportion_exact(j);
      if (contrasts.entry(j, ell) > 0)
        acc += pj;
      else
        acc -= pj;
    }
    out.push_back(acc * scale);
  }
  return out;
}

std::vector<double> PotentialOutcomesTable::effects(const ContrastMatrix& contrasts) const {
  std::vector<Rat> exact = effects_exact(contrasts);
  std::vector<double> out(exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) out[i] = exact[i].to_double();
  return out;
}

Rat PotentialOutcomesTable::effect_variance_exact(int ell,
                                                  const ContrastMatrix& contrasts) const {
  const long long N = num_units();
  if (N < 2) throw DegeneracyError("population: variance needs at least two units");
  int128 sum = 0, sum_sq = 0;
  for (const auto& row : outcomes_) {
    const long long u = row_numerators(row, contrasts)[static_cast<std::size_t>(ell)];
    sum = checked_add(sum, u);
    sum_sq = checked_add(sum_sq, checked_mul(u, u));
  }
  const int128 scale2 = int128(1) << (2 * (contrasts.K() - 1));
  // (sum u^2 - (sum u)^2 / N) / ((N-1) 4^{K-1}), kept over a common denominator
  const int128 numerator = checked_mul(N, sum_sq) - checked_mul(sum, sum);
  return Rat(numerator, checked_mul(checked_mul(int128(N), N - 1), scale2));
}

std::vector<std::vector<Rat>> PotentialOutcomesTable::covariance_exact(
    const ContrastMatrix& contrasts, const AllocationPlan& plan) const {
  const long long N = num_units();
  const int J = contrasts.J();
  if (static_cast<int>(plan.arm_sizes.size()) != J || plan.total != N)
    throw InputError("population: allocation plan does not match the table (" +
                     std::to_string(plan.total) + " planned vs " + std::to_string(N) +
                     " units)");
  if (N < 2) throw DegeneracyError("population: covariance needs at least two units");

  const std::size_t E = static_cast<std::size_t>(J - 1);
  std::vector<int128> sum(E, 0);
  std::vector<std::vector<int128>> sum_sq(E, std::vector<int128>(E, 0));
  for (const auto& row : outcomes_) {
    const std::vector<long long> u = row_numerators(row, contrasts);
    for (std::size_t a = 0; a < E; ++a) {
      sum[a] = checked_add(sum[a], u[a + 1]);
      for (std::size_t b = a; b < E; ++b)
        sum_sq[a][b] = checked_add(sum_sq[a][b], checked_mul(u[a + 1], u[b + 1]));
    }
  }

  const int128 scale2 = int128(1) << (2 * (contrasts.K() - 1));
  std::vector<std::vector<Rat>> cov(E, std::vector<Rat>(E));
  for (std::size_t a = 0; a < E; ++a) {
    for (std::size_t b = a; b < E; ++b) {
      // first term: 2^{-2(K-1)} sum_j S2_j / N_j * lambda_aj lambda_bj
      Rat first;
      for (int j = 1; j <= J; ++j) {
        const int sign = contrasts.entry(j, static_cast<int>(a) + 1) *
                         contrasts.entry(j, static_cast<int>(b) + 1);
        const Rat term = column_variance_exact(j) /
                         Rat(plan.arm_sizes[static_cast<std::size_t>(j - 1)]);
        if (sign > 0)
          first += term;
        else
          first -= term;
      }
      first = first / Rat(scale2, 1);
      // second term: the between-unit effect covariance over N(N-1)
      const int128 centered = checked_mul(N, sum_sq[a][b]) - checked_mul(sum[a], sum[b]);
      const Rat second(centered,
                       checked_mul(checked_mul(checked_mul(int128(N), N), N - 1), scale2));
      cov[a][b] = first - second;
      cov[b][a] = cov[a][b];
    }
  }
  return cov;
}

std::vector<std::vector<double>> PotentialOutcomesTable::covariance(
    const ContrastMatrix& contrasts, const AllocationPlan& plan) const {
  const std::vector<std::vector<Rat>> exact = covariance_exact(contrasts, plan);
  std::vector<std::vector<double>> out(exact.size(), std::vector<double>(exact.size()));
  for (std::size_t a = 0; a < exact.size(); ++a)
    for (std::size_t b = 0; b < exact.size(); ++b) out[a][b] = exact[a][b].to_double();
  return out;
}

Rat PotentialOutcomesTable::expected_se_squared_exact(const AllocationPlan& plan) const {
  const int J = num_treatments();
  if (static_cast<int>(plan.arm_sizes.size()) != J || plan.total != num_units())
    throw InputError("population: allocation plan does not match the table");
  Rat acc;
  for (int j = 1; j <= J; ++j)
    acc += column_variance_exact(j) / Rat(plan.arm_sizes[static_cast<std::size_t>(j - 1)]);
  const int128 scale2 = int128(1) << (2 * (design_.K - 1));
  return acc / Rat(scale2, 1);
}

CltConditionReport clt_condition_report(const PotentialOutcomesTable& table,
                                        const AllocationPlan& plan) {
  const int J = table.num_treatments();
  const long long N = table.num_units();
  if (static_cast<int>(plan.arm_sizes.size()) != J || plan.total != N)
    throw InputError("population: allocation plan does not match the table");

  CltConditionReport report;
  report.arm_share.resize(static_cast<std::size_t>(J));
  report.column_variance.resize(static_cast<std::size_t>(J));
  report.zero_variance.resize(static_cast<std::size_t>(J));
  report.column_covariance.assign(static_cast<std::size_t>(J),
                                  std::vector<double>(static_cast<std::size_t>(J)));
  for (int j = 1; j <= J; ++j) {
    report.arm_share[static_cast<std::size_t>(j - 1)] =
        static_cast<double>(plan.arm_sizes[static_cast<std::size_t>(j - 1)]) /
        static_cast<double>(N);
    const Rat s2 = table.column_variance_exact(j);
    report.column_variance[static_cast<std::size_t>(j - 1)] = s2.to_double();
    report.zero_variance[static_cast<std::size_t>(j - 1)] = s2.is_zero();
    for (int jp = 1; jp <= J; ++jp)
      report.column_covariance[static_cast<std::size_t>(j - 1)][static_cast<std::size_t>(jp - 1)] =
          table.column_covariance_exact(j, jp).to_double();
  }

  double max_dev = 0.0;
  for (int j = 1; j <= J; ++j) {
    const double pj = table.proportion(j);
    // y is 0 or 1, so the deviation is pj or 1-pj; a constant column only
    // realizes the zero deviation
    double dev = 0.0;
    if (pj > 0.0) dev = std::max(dev, (1.0 - pj) * (1.0 - pj));  // some y = 1
    if (pj < 1.0) dev = std::max(dev, pj * pj);                  // some y = 0
    max_dev = std::max(max_dev, dev / static_cast<double>(N));
  }
  report.max_deviation = max_dev;
  return report;
}

double power_exact(const PotentialOutcomesTable& table, const ContrastMatrix& contrasts,
                   const AllocationPlan& plan, int ell, double alpha) {
  if (ell < 1 || ell >= contrasts.J())
    throw InputError("power: effect index " + std::to_string(ell) + " outside 1.." +
                     std::to_string(contrasts.J() - 1));
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("power: alpha must lie in (0,1), got " + std::to_string(alpha));

  const std::vector<std::vector<Rat>> cov = table.covariance_exact(contrasts, plan);
  const double var = cov[static_cast<std::size_t>(ell - 1)][static_cast<std::size_t>(ell - 1)]
                         .to_double();
  if (!(var > 0.0))
    throw DegeneracyError("power: effect " + contrasts.label(ell) +
                          " has zero randomization variance in this table");
  const double sd = std::sqrt(var);
  const double expected_se = std::sqrt(table.expected_se_squared_exact(plan).to_double());
  const double r = expected_se / sd;
  const double tau = table.effects_exact(contrasts)[static_cast<std::size_t>(ell - 1)]
                         .to_double();
  const double z = normal_upper(alpha / 2.0);
  return 2.0 - normal_cdf(r * z - tau / sd) - normal_cdf(r * z + tau / sd);
}

}  // namespace factex
