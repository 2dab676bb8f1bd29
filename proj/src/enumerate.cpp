#include "factex/enumerate.hpp"

#include <algorithm>

#include "factex/errors.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace factex {

namespace {

int128 multinomial_count(long long total, const std::vector<long long>& arm_sizes) {
  // N! / prod N_j!, built up as a product of binomials to stay integral
  int128 count = 1;
  long long remaining = total;
  for (long long arm : arm_sizes) {
    // multiply by C(remaining, arm)
    int128 binom = 1;
    for (long long i = 1; i <= arm; ++i) {
      binom = checked_mul(binom, remaining - arm + i);
      binom /= i;  // divides exactly: prefix products of C are integers
    }
    count = checked_mul(count, binom);
    remaining -= arm;
  }
  return count;
}

long long binomial_ll(long long n, long long k) {
  if (k < 0 || k > n) return 0;
  int128 b = 1;
  if (k > n - k) k = n - k;
  for (long long i = 1; i <= k; ++i) {
    b = checked_mul(b, n - k + i);
    b /= i;
  }
  return static_cast<long long>(b);
}

// exact integer accumulators over visited assignments; merging two of these
// is exact addition, so any partition of the work yields identical totals
struct Accumulator {
  std::vector<int128> u1;                // sum of contrast numerators
  std::vector<std::vector<int128>> u2;   // sum of their pairwise products
  std::vector<int128> s1;                // sum of per-arm one-counts
  std::vector<std::vector<int128>> s2;   // sum of their pairwise products
  std::vector<int128> a;                 // sum of n_j1 (N_j - n_j1)

  Accumulator(std::size_t effects, std::size_t arms)
      : u1(effects, 0),
        u2(effects, std::vector<int128>(effects, 0)),
        s1(arms, 0),
        s2(arms, std::vector<int128>(arms, 0)),
        a(arms, 0) {}

  void merge(const Accumulator& o) {
    for (std::size_t i = 0; i < u1.size(); ++i) {
      u1[i] = checked_add(u1[i], o.u1[i]);
      for (std::size_t j = 0; j < u1.size(); ++j)
        u2[i][j] = checked_add(u2[i][j], o.u2[i][j]);
    }
    for (std::size_t i = 0; i < s1.size(); ++i) {
      s1[i] = checked_add(s1[i], o.s1[i]);
      a[i] = checked_add(a[i], o.a[i]);
      for (std::size_t j = 0; j < s1.size(); ++j)
        s2[i][j] = checked_add(s2[i][j], o.s2[i][j]);
    }
  }
};

struct Context {
  const PotentialOutcomesTable* table = nullptr;
  const ContrastMatrix* contrasts = nullptr;
  const AllocationPlan* plan = nullptr;
  std::vector<long long> weight;  // lcm(N_j) / N_j per arm
  long long lcm = 1;
};

// tally one assignment: labels[i] is the treatment of unit i
void visit(const Context& ctx, const std::vector<int>& labels, Accumulator& acc) {
  const int J = ctx.contrasts->J();
  const long long N = ctx.table->num_units();
  std::vector<long long> ones(static_cast<std::size_t>(J), 0);
  for (long long i = 0; i < N; ++i) {
    const int arm = labels[static_cast<std::size_t>(i)];
    ones[static_cast<std::size_t>(arm - 1)] += ctx.table->outcome(i, arm);
  }

  const std::size_t E = static_cast<std::size_t>(J - 1);
  std::vector<long long> u(E, 0);
  for (int j = 1; j <= J; ++j) {
    const long long scaled =
        ones[static_cast<std::size_t>(j - 1)] * ctx.weight[static_cast<std::size_t>(j - 1)];
    for (std::size_t ell = 0; ell < E; ++ell) {
      if (ctx.contrasts->entry(j, static_cast<int>(ell) + 1) > 0)
        u[ell] += scaled;
      else
        u[ell] -= scaled;
    }
  }

  for (std::size_t ell = 0; ell < E; ++ell) {
    acc.u1[ell] = checked_add(acc.u1[ell], u[ell]);
    for (std::size_t m = 0; m < E; ++m)
      acc.u2[ell][m] = checked_add(acc.u2[ell][m], checked_mul(u[ell], u[m]));
  }
  for (int j = 0; j < J; ++j) {
    const long long nj1 = ones[static_cast<std::size_t>(j)];
    const long long nj = ctx.plan->arm_sizes[static_cast<std::size_t>(j)];
    acc.s1[static_cast<std::size_t>(j)] =
        checked_add(acc.s1[static_cast<std::size_t>(j)], nj1);
    acc.a[static_cast<std::size_t>(j)] =
        checked_add(acc.a[static_cast<std::size_t>(j)], nj1 * (nj - nj1));
    for (int jp = 0; jp < J; ++jp)
      acc.s2[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] = checked_add(
          acc.s2[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)],
          nj1 * ones[static_cast<std::size_t>(jp)]);
  }
}

// positions (ascending) of the rank-th lexicographic N-choose-k combination
std::vector<long long> unrank_combination(long long n, long long k, long long rank) {
  std::vector<long long> positions;
  positions.reserve(static_cast<std::size_t>(k));
  long long value = 0;
  for (long long slot = 0; slot < k; ++slot) {
    while (true) {
      const long long tail = binomial_ll(n - value - 1, k - slot - 1);
      if (rank < tail) break;
      rank -= tail;
      ++value;
    }
    positions.push_back(value);
    ++value;
  }
  return positions;
}

EnumerationResult finalize(const Context& ctx, const Accumulator& acc, int128 count) {
  const int J = ctx.contrasts->J();
  const std::size_t E = static_cast<std::size_t>(J - 1);
  const int128 half_pow = int128(1) << (ctx.contrasts->K() - 1);
  const int128 tau_den = checked_mul(half_pow, int128(ctx.lcm));

  EnumerationResult result;
  result.assignment_count = Rat(count, 1);

  result.mean_tau.resize(E);
  for (std::size_t ell = 0; ell < E; ++ell)
    result.mean_tau[ell] = Rat(acc.u1[ell], checked_mul(count, tau_den));

  result.cov_tau.assign(E, std::vector<Rat>(E));
  for (std::size_t ell = 0; ell < E; ++ell)
    for (std::size_t m = 0; m < E; ++m) {
      const Rat second_moment(acc.u2[ell][m],
                              checked_mul(count, checked_mul(tau_den, tau_den)));
      result.cov_tau[ell][m] = second_moment - result.mean_tau[ell] * result.mean_tau[m];
    }

  result.mean_p.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j)
    result.mean_p[static_cast<std::size_t>(j)] =
        Rat(acc.s1[static_cast<std::size_t>(j)],
            checked_mul(count, int128(ctx.plan->arm_sizes[static_cast<std::size_t>(j)])));

  result.cov_p.assign(static_cast<std::size_t>(J), std::vector<Rat>(static_cast<std::size_t>(J)));
  for (int j = 0; j < J; ++j)
    for (int jp = 0; jp < J; ++jp) {
      const int128 den = checked_mul(
          count, checked_mul(int128(ctx.plan->arm_sizes[static_cast<std::size_t>(j)]),
                             int128(ctx.plan->arm_sizes[static_cast<std::size_t>(jp)])));
      const Rat second_moment(acc.s2[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)],
                              den);
      result.cov_p[static_cast<std::size_t>(j)][static_cast<std::size_t>(jp)] =
          second_moment - result.mean_p[static_cast<std::size_t>(j)] *
                              result.mean_p[static_cast<std::size_t>(jp)];
    }

  result.variances_defined = true;
  for (long long arm : ctx.plan->arm_sizes)
    if (arm < 2) result.variances_defined = false;
  if (result.variances_defined) {
    result.mean_s2.resize(static_cast<std::size_t>(J));
    Rat se2;
    for (int j = 0; j < J; ++j) {
      const long long nj = ctx.plan->arm_sizes[static_cast<std::size_t>(j)];
      result.mean_s2[static_cast<std::size_t>(j)] =
          Rat(acc.a[static_cast<std::size_t>(j)],
              checked_mul(count, checked_mul(int128(nj), int128(nj - 1))));
      se2 += result.mean_s2[static_cast<std::size_t>(j)] / Rat(nj);
    }
    result.mean_se2 = se2 / Rat(checked_mul(half_pow, half_pow), 1);
  }
  return result;
}

Context make_context(const PotentialOutcomesTable& table, const ContrastMatrix& contrasts,
                     const AllocationPlan& plan) {
  const int J = table.num_treatments();
  if (static_cast<int>(plan.arm_sizes.size()) != J || plan.total != table.num_units())
    throw InputError("enumerate: allocation plan does not match the table (" +
                     std::to_string(plan.total) + " planned vs " +
                     std::to_string(table.num_units()) + " units)");
  for (long long arm : plan.arm_sizes)
    if (arm < 1) throw InputError("enumerate: every arm needs at least one unit");

  Context ctx;
  ctx.table = &table;
  ctx.contrasts = &contrasts;
  ctx.plan = &plan;
  int128 lcm = 1;
  for (long long arm : plan.arm_sizes) {
    const int128 g = gcd128(lcm, arm);
    lcm = checked_mul(lcm / g, int128(arm));
  }
  ctx.lcm = static_cast<long long>(lcm);
  ctx.weight.resize(static_cast<std::size_t>(J));
  for (int j = 0; j < J; ++j)
    ctx.weight[static_cast<std::size_t>(j)] =
        ctx.lcm / plan.arm_sizes[static_cast<std::size_t>(j)];
  return ctx;
}

int128 checked_count(const Context& ctx, std::uint64_t cap) {
  const int128 count = multinomial_count(ctx.table->num_units(), ctx.plan->arm_sizes);
  if (count > int128(cap))
    throw InfeasibilityError(
        "enumerate: " + Rat(count, 1).str() + " assignments exceed the cap of " +
        std::to_string(cap) + "; use simulate for populations of this size");
  return count;
}

}  // namespace

EnumerationResult enumerate_randomizations_serial(const PotentialOutcomesTable& table,
                                                  const ContrastMatrix& contrasts,
                                                  const AllocationPlan& plan,
                                                  std::uint64_t cap) {
  const Context ctx = make_context(table, contrasts, plan);
  const int128 count = checked_count(ctx, cap);

  std::vector<int> labels;
  for (std::size_t j = 0; j < plan.arm_sizes.size(); ++j)
    labels.insert(labels.end(), static_cast<std::size_t>(plan.arm_sizes[j]),
                  static_cast<int>(j) + 1);
  std::sort(labels.begin(), labels.end());

  Accumulator acc(static_cast<std::size_t>(contrasts.J() - 1),
                  static_cast<std::size_t>(contrasts.J()));
  do {
    visit(ctx, labels, acc);
  } while (std::next_permutation(labels.begin(), labels.end()));
  return finalize(ctx, acc, count);
}

EnumerationResult enumerate_randomizations(const PotentialOutcomesTable& table,
                                           const ContrastMatrix& contrasts,
                                           const AllocationPlan& plan, std::uint64_t cap,
                                           bool parallel) {
  if (!parallel) return enumerate_randomizations_serial(table, contrasts, plan, cap);

  const Context ctx = make_context(table, contrasts, plan);
  const int128 count = checked_count(ctx, cap);
  const long long N = table.num_units();
  const long long first_arm = plan.arm_sizes[0];
  const long long tasks = binomial_ll(N, first_arm);

  // the tail labels every task permutes over the positions arm 1 leaves free
  std::vector<int> tail_template;
  for (std::size_t j = 1; j < plan.arm_sizes.size(); ++j)
    tail_template.insert(tail_template.end(), static_cast<std::size_t>(plan.arm_sizes[j]),
                         static_cast<int>(j) + 1);
  std::sort(tail_template.begin(), tail_template.end());

  int slots = 1;
#ifdef _OPENMP
  slots = omp_get_max_threads();
#endif
  std::vector<Accumulator> partial(
      static_cast<std::size_t>(slots),
      Accumulator(static_cast<std::size_t>(contrasts.J() - 1),
                  static_cast<std::size_t>(contrasts.J())));

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (long long task = 0; task < tasks; ++task) {
    int slot = 0;
#ifdef _OPENMP
    slot = omp_get_thread_num();
#endif
    // positions assigned to arm 1 in this task
    const std::vector<long long> arm_one = unrank_combination(N, first_arm, task);
    std::vector<int> labels(static_cast<std::size_t>(N), 1);
    std::vector<long long> free_positions;
    free_positions.reserve(static_cast<std::size_t>(N - first_arm));
    {
      std::size_t at = 0;
      for (long long i = 0; i < N; ++i) {
        if (at < arm_one.size() && arm_one[at] == i)
          ++at;
        else
          free_positions.push_back(i);
      }
    }
    std::vector<int> tail = tail_template;
    do {
      for (std::size_t t = 0; t < tail.size(); ++t)
        labels[static_cast<std::size_t>(free_positions[t])] = tail[t];
      visit(ctx, labels, partial[static_cast<std::size_t>(slot)]);
    } while (std::next_permutation(tail.begin(), tail.end()));
  }

  Accumulator acc(static_cast<std::size_t>(contrasts.J() - 1),
                  static_cast<std::size_t>(contrasts.J()));
  for (const Accumulator& p : partial) acc.merge(p);
  return finalize(ctx, acc, count);
}

}  // namespace factex
