#include "factex/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "factex/errors.hpp"
#include "factex/normal.hpp"
#include "factex/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace factex {

std::vector<int> draw_assignment(const AllocationPlan& plan, std::uint64_t seed,
                                 std::uint64_t draw_index) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(plan.total));
  for (std::size_t j = 0; j < plan.arm_sizes.size(); ++j)
    labels.insert(labels.end(), static_cast<std::size_t>(plan.arm_sizes[j]),
                  static_cast<int>(j) + 1);
  if (static_cast<long long>(labels.size()) != plan.total)
    throw InputError("assignment: plan arm sizes do not sum to its total");
  CounterRng rng(seed, kRngDomainAssign, draw_index);
  rng.shuffle(labels);
  return labels;
}

namespace {

// integer tallies one thread accumulates; summed in thread order at the end
struct Tally {
  std::vector<long long> reject_ier, reject_eer, cover;
  long long joint_ier = 0, joint_eer = 0, degenerate = 0;

  explicit Tally(std::size_t effects)
      : reject_ier(effects, 0), reject_eer(effects, 0), cover(effects, 0) {}
};

SimulationReport run_simulation(const PotentialOutcomesTable& table,
                                const ContrastMatrix& contrasts,
                                const AllocationPlan& plan, const SimulateOptions& options,
                                bool parallel) {
  const long long N = table.num_units();
  const int J = table.num_treatments();
  if (static_cast<int>(plan.arm_sizes.size()) != J || plan.total != N)
    throw InputError("simulate: allocation plan does not match the table (" +
                     std::to_string(plan.total) + " planned vs " + std::to_string(N) +
                     " units)");
  if (options.draws < 1) throw InputError("simulate: need at least one draw");
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw InputError("simulate: alpha must lie in (0,1)");

  const std::size_t E = static_cast<std::size_t>(J - 1);
  std::vector<int> joint = options.joint_effects;
  if (joint.empty())
    for (int ell = 1; ell < J; ++ell) joint.push_back(ell);
  for (int ell : joint)
    if (ell < 1 || ell >= J)
      throw InputError("simulate: joint effect index " + std::to_string(ell) +
                       " outside 1.." + std::to_string(J - 1));

  const int family = options.family_size > 0 ? options.family_size : J - 1;
  const double z_two = normal_upper(options.alpha / 2.0);
  const double z_one = normal_upper(options.alpha);
  const std::vector<double> tau_fp = table.effects(contrasts);
  const double effect_scale = 1.0 / static_cast<double>(1LL << (contrasts.K() - 1));

  // per-draw estimates, reduced sequentially afterwards so the result does
  // not depend on how draws were scheduled across threads
  std::vector<double> estimates(static_cast<std::size_t>(options.draws) * E);

  int slots = 1;
#ifdef _OPENMP
  if (parallel) slots = omp_get_max_threads();
#else
  (void)parallel;
#endif
  std::vector<Tally> tallies(static_cast<std::size_t>(slots), Tally(E));

  const auto simulate_draw = [&](long long d, Tally& tally) {
    const std::vector<int> assignment = draw_assignment(plan, options.seed,
                                                        static_cast<std::uint64_t>(d));
    std::vector<long long> ones(static_cast<std::size_t>(J), 0);
    for (long long i = 0; i < N; ++i) {
      const int arm = assignment[static_cast<std::size_t>(i)];
      ones[static_cast<std::size_t>(arm - 1)] += table.outcome(i, arm);
    }

    // proportions, their contrasts, and the pooled conservative variance
    double se2 = 0.0;
    bool degenerate = false;
    std::vector<double> p(static_cast<std::size_t>(J));
    for (int j = 0; j < J; ++j) {
      const double nj = static_cast<double>(plan.arm_sizes[static_cast<std::size_t>(j)]);
      const double n1 = static_cast<double>(ones[static_cast<std::size_t>(j)]);
      p[static_cast<std::size_t>(j)] = n1 / nj;
      if (nj < 2) {
        degenerate = true;
        continue;
      }
      se2 += n1 * (nj - n1) / (nj * (nj - 1.0)) / nj;
    }
    se2 *= effect_scale * effect_scale;
    const double se = std::sqrt(se2);
    if (se == 0.0) degenerate = true;

    double* est = &estimates[static_cast<std::size_t>(d) * E];
    for (std::size_t ell = 0; ell < E; ++ell) {
      double acc = 0.0;
      for (int j = 1; j <= J; ++j) {
        const double pj = p[static_cast<std::size_t>(j - 1)];
        if (contrasts.entry(j, static_cast<int>(ell) + 1) > 0)
          acc += pj;
        else
          acc -= pj;
      }
      est[ell] = acc * effect_scale;
    }

    if (degenerate) {
      ++tally.degenerate;
      return;
    }

    bool joint_ier = true, joint_eer = true;
    std::vector<bool> rejected_ier(E), rejected_eer(E);
    for (std::size_t ell = 0; ell < E; ++ell) {
      const double t = est[ell] / se;
      double p_raw = 1.0;
      bool covered = false;
      switch (options.alternative) {
        case Alternative::two_sided:
          p_raw = 2.0 * (1.0 - normal_cdf(std::fabs(t)));
          covered = std::fabs(est[ell] - tau_fp[ell]) <= z_two * se;
          break;
        case Alternative::greater:
          p_raw = 1.0 - normal_cdf(t);
          covered = tau_fp[ell] >= est[ell] - z_one * se;
          break;
        case Alternative::less:
          p_raw = normal_cdf(t);
          covered = tau_fp[ell] <= est[ell] + z_one * se;
          break;
      }
      rejected_ier[ell] = p_raw <= options.alpha;
      rejected_eer[ell] = std::min(family * p_raw, 1.0) <= options.alpha;
      if (rejected_ier[ell]) ++tally.reject_ier[ell];
      if (rejected_eer[ell]) ++tally.reject_eer[ell];
      if (covered) ++tally.cover[ell];
    }
    for (int ell : joint) {
      joint_ier = joint_ier && rejected_ier[static_cast<std::size_t>(ell - 1)];
      joint_eer = joint_eer && rejected_eer[static_cast<std::size_t>(ell - 1)];
    }
    if (joint_ier) ++tally.joint_ier;
    if (joint_eer) ++tally.joint_eer;
  };

#ifdef _OPENMP
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long long d = 0; d < options.draws; ++d)
      simulate_draw(d, tallies[static_cast<std::size_t>(omp_get_thread_num())]);
  } else {
    for (long long d = 0; d < options.draws; ++d) simulate_draw(d, tallies[0]);
  }
#else
  for (long long d = 0; d < options.draws; ++d) simulate_draw(d, tallies[0]);
#endif

  Tally total(E);
  for (const Tally& t : tallies) {
    for (std::size_t ell = 0; ell < E; ++ell) {
      total.reject_ier[ell] += t.reject_ier[ell];
      total.reject_eer[ell] += t.reject_eer[ell];
      total.cover[ell] += t.cover[ell];
    }
    total.joint_ier += t.joint_ier;
    total.joint_eer += t.joint_eer;
    total.degenerate += t.degenerate;
  }

  SimulationReport report;
  report.draws = options.draws;
  report.degenerate_draws = total.degenerate;
  report.seed = options.seed;
  report.mean_estimate.assign(E, 0.0);
  report.empirical_var.assign(E, 0.0);

  // sequential reduction in draw order: identical for every thread count
  for (long long d = 0; d < options.draws; ++d)
    for (std::size_t ell = 0; ell < E; ++ell)
      report.mean_estimate[ell] += estimates[static_cast<std::size_t>(d) * E + ell];
  for (std::size_t ell = 0; ell < E; ++ell)
    report.mean_estimate[ell] /= static_cast<double>(options.draws);
  if (options.draws > 1) {
    for (long long d = 0; d < options.draws; ++d)
      for (std::size_t ell = 0; ell < E; ++ell) {
        const double dev =
            estimates[static_cast<std::size_t>(d) * E + ell] - report.mean_estimate[ell];
        report.empirical_var[ell] += dev * dev;
      }
    for (std::size_t ell = 0; ell < E; ++ell)
      report.empirical_var[ell] /= static_cast<double>(options.draws - 1);
  }

  const long long tested = options.draws - total.degenerate;
  const double denom = tested > 0 ? static_cast<double>(tested) : 1.0;
  report.reject_ier.assign(E, 0.0);
  report.reject_eer.assign(E, 0.0);
  report.coverage.assign(E, 0.0);
  for (std::size_t ell = 0; ell < E; ++ell) {
    report.reject_ier[ell] = static_cast<double>(total.reject_ier[ell]) / denom;
    report.reject_eer[ell] = static_cast<double>(total.reject_eer[ell]) / denom;
    report.coverage[ell] = static_cast<double>(total.cover[ell]) / denom;
  }
  report.joint_reject_ier = static_cast<double>(total.joint_ier) / denom;
  report.joint_reject_eer = static_cast<double>(total.joint_eer) / denom;
  return report;
}

}  // namespace

SimulationReport simulate(const PotentialOutcomesTable& table,
                          const ContrastMatrix& contrasts, const AllocationPlan& plan,
                          const SimulateOptions& options) {
  return run_simulation(table, contrasts, plan, options, options.parallel);
}

SimulationReport simulate_serial(const PotentialOutcomesTable& table,
                                 const ContrastMatrix& contrasts,
                                 const AllocationPlan& plan,
                                 const SimulateOptions& options) {
  return run_simulation(table, contrasts, plan, options, false);
}

ProtocolResult run_protocol(const PotentialOutcomesTable& table,
                            const ContrastMatrix& contrasts, const AllocationPlan& plan,
                            int populations, const SimulateOptions& options) {
  if (populations < 1) throw InputError("protocol: need at least one population");
  ProtocolResult result;
  result.reports.reserve(static_cast<std::size_t>(populations));
  result.joint_power.reserve(static_cast<std::size_t>(populations));
  for (int p = 0; p < populations; ++p) {
    const PotentialOutcomesTable permuted =
        table.permuted(options.seed, static_cast<std::uint64_t>(p));
    SimulateOptions per_population = options;
    per_population.seed =
        derive_stream_key(options.seed, kRngDomainProtocol, static_cast<std::uint64_t>(p));
    SimulationReport report = simulate(permuted, contrasts, plan, per_population);
    result.joint_power.push_back(report.joint_rate(options.correction));
    result.reports.push_back(std::move(report));
  }
  double sum = 0.0, least = result.joint_power.front();
  for (double v : result.joint_power) {
    sum += v;
    least = std::min(least, v);
  }
  result.mean_joint_power = sum / static_cast<double>(populations);
  result.min_joint_power = least;
  return result;
}

}  // namespace factex
