#include "factex/power.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "factex/errors.hpp"
#include "factex/normal.hpp"

namespace factex {

std::string to_string(VarianceGuess::Mode mode) {
  switch (mode) {
    case VarianceGuess::Mode::variances: return "variances";
    case VarianceGuess::Mode::proportions: return "proportions";
    case VarianceGuess::Mode::pilot: return "pilot";
  }
  return "?";
}

std::vector<double> VarianceGuess::resolve_s2(long long total_n) const {
  if (values.empty()) throw InputError("variance guess: no values supplied");
  std::vector<double> s2(values.size());
  switch (mode) {
    case Mode::variances:
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (!(values[j] >= 0.0) || !std::isfinite(values[j]))
          throw InputError("variance guess: variance for treatment " +
                           std::to_string(j + 1) + " must be finite and nonnegative");
        s2[j] = values[j];
      }
      break;
    case Mode::proportions: {
      if (total_n < 2)
        throw InputError("variance guess: proportion mode needs a planning size of at least 2");
      const double factor = static_cast<double>(total_n) / (static_cast<double>(total_n) - 1.0);
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (!(values[j] >= 0.0 && values[j] <= 1.0))
          throw InputError("variance guess: proportion for treatment " +
                           std::to_string(j + 1) + " must lie in [0,1]");
        s2[j] = factor * values[j] * (1.0 - values[j]);
      }
      break;
    }
    case Mode::pilot: {
      if (pilot_arm_size < 2)
        throw InputError("variance guess: pilot arm size must be at least 2");
      const double factor = static_cast<double>(pilot_arm_size) /
                            (static_cast<double>(pilot_arm_size) - 1.0);
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (!(values[j] >= 0.0 && values[j] <= 1.0))
          throw InputError("variance guess: pilot proportion for treatment " +
                           std::to_string(j + 1) + " must lie in [0,1]");
        s2[j] = factor * values[j] * (1.0 - values[j]);
      }
      break;
    }
  }
  return s2;
}

VarianceGuess VarianceGuess::from_summary(const GroupSummary& summary) {
  VarianceGuess guess;
  guess.mode = Mode::pilot;
  guess.values = summary.proportions();
  const long long arm = summary.n(0);
  for (int j = 1; j < summary.J(); ++j)
    if (summary.n(j) != arm)
      throw InputError("variance guess: pilot arms are unequal (" + std::to_string(arm) +
                       " vs " + std::to_string(summary.n(j)) +
                       "); a common pilot arm size is required");
  if (arm < 2) throw InputError("variance guess: pilot arm size must be at least 2");
  guess.pilot_arm_size = static_cast<int>(arm);
  return guess;
}

std::vector<double> AllocationPlan::deltas() const {
  std::vector<double> d(arm_sizes.size());
  for (std::size_t j = 0; j < arm_sizes.size(); ++j)
    d[j] = static_cast<double>(arm_sizes[j]) / static_cast<double>(total);
  return d;
}

AllocationPlan allocate_balanced(const FactorialDesign& design, long long total_n) {
  const long long J = design.num_treatments();
  if (total_n % J != 0) {
    const long long below = (total_n / J) * J;
    const long long above = below + J;
    throw InfeasibilityError("allocation: " + std::to_string(J) +
                             " arms cannot split " + std::to_string(total_n) +
                             " units evenly; nearest feasible sizes are " +
                             std::to_string(below) + " and " + std::to_string(above));
  }
  if (total_n < 2 * J)
    throw InfeasibilityError("allocation: need at least 2 units per arm, so N >= " +
                             std::to_string(2 * J) + "; got " + std::to_string(total_n));
  AllocationPlan plan;
  plan.total = total_n;
  plan.arm_sizes.assign(static_cast<std::size_t>(J), total_n / J);
  plan.rule = "balanced";
  return plan;
}

namespace {

// Largest-remainder integerization of real targets q_j summing to N, with a
// hard floor of 2 per arm. Surplus goes to the largest fractional remainders
// (ties to the lower treatment index); any deficit created by the floor comes
// out of the smallest remainders still above the floor (ties to the higher
// index).
std::vector<long long> integerize(const std::vector<double>& q, long long total_n) {
  const std::size_t J = q.size();
  std::vector<long long> n(J);
  std::vector<double> frac(J);
  long long assigned = 0;
  for (std::size_t j = 0; j < J; ++j) {
    const double fl = std::floor(q[j]);
    n[j] = std::max<long long>(2, static_cast<long long>(fl));
    frac[j] = q[j] - fl;
    assigned += n[j];
  }
  std::vector<std::size_t> order(J);
  std::iota(order.begin(), order.end(), 0u);
  if (assigned < total_n) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (frac[a] != frac[b]) return frac[a] > frac[b];
      return a < b;
    });
    std::size_t at = 0;
    while (assigned < total_n) {
      ++n[order[at]];
      ++assigned;
      at = (at + 1) % J;
    }
  } else if (assigned > total_n) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (frac[a] != frac[b]) return frac[a] < frac[b];
      return a > b;
    });
    std::size_t at = 0;
    while (assigned > total_n) {
      if (n[order[at]] > 2) {
        --n[order[at]];
        --assigned;
      }
      at = (at + 1) % J;
    }
  }
  return n;
}

}  // namespace

AllocationPlan allocate_optimal(const FactorialDesign& design, char criterion,
                                const VarianceGuess& guess, long long total_n) {
  const long long J = design.num_treatments();
  if (criterion == 'D' || criterion == 'd') return allocate_balanced(design, total_n);
  if (criterion != 'A' && criterion != 'a' && criterion != 'E' && criterion != 'e')
    throw InputError(std::string("allocation: unknown criterion '") + criterion +
                     "', expected D, A or E");
  if (total_n < 2 * J)
    throw InfeasibilityError("allocation: need at least 2 units per arm, so N >= " +
                             std::to_string(2 * J) + "; got " + std::to_string(total_n));

  std::vector<double> s2 = guess.resolve_s2(total_n);
  if (static_cast<long long>(s2.size()) != J)
    throw InputError("allocation: guess covers " + std::to_string(s2.size()) +
                     " treatments, design has " + std::to_string(J));

  // A: arm sizes proportional to the guessed standard deviations;
  // E: proportional to the guessed variances
  std::vector<double> weight(s2.size());
  const bool a_rule = (criterion == 'A' || criterion == 'a');
  double total_weight = 0.0;
  for (std::size_t j = 0; j < s2.size(); ++j) {
    weight[j] = a_rule ? std::sqrt(s2[j]) : s2[j];
    total_weight += weight[j];
  }
  if (total_weight <= 0.0)
    throw InputError("allocation: all variance guesses are zero, no " +
                     std::string(1, a_rule ? 'A' : 'E') + "-optimal plan exists");

  std::vector<double> target(weight.size());
  for (std::size_t j = 0; j < weight.size(); ++j)
    target[j] = static_cast<double>(total_n) * weight[j] / total_weight;

  AllocationPlan plan;
  plan.total = total_n;
  plan.arm_sizes = integerize(target, total_n);
  plan.rule = a_rule ? "A" : "E";
  return plan;
}

double se_tilde(const FactorialDesign& design, const VarianceGuess& guess,
                const AllocationPlan& plan) {
  const int J = design.num_treatments();
  if (static_cast<int>(plan.arm_sizes.size()) != J)
    throw InputError("se: plan covers " + std::to_string(plan.arm_sizes.size()) +
                     " treatments, design has " + std::to_string(J));
  std::vector<double> s2 = guess.resolve_s2(plan.total);
  if (static_cast<int>(s2.size()) != J)
    throw InputError("se: guess covers " + std::to_string(s2.size()) +
                     " treatments, design has " + std::to_string(J));
  double sum = 0.0;
  for (int j = 0; j < J; ++j) {
    if (plan.arm_sizes[static_cast<std::size_t>(j)] <= 0)
      throw InputError("se: arm " + std::to_string(j + 1) + " has no units");
    sum += s2[static_cast<std::size_t>(j)] /
           static_cast<double>(plan.arm_sizes[static_cast<std::size_t>(j)]);
  }
  const double scale2 = static_cast<double>(1LL << (2 * (design.K - 1)));
  return std::sqrt(sum / scale2);
}

double power_two_sided(double tau_star, double se, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("power: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (!(se > 0.0))
    throw DegeneracyError("power: standard error must be positive, got " +
                          std::to_string(se));
  const double z = normal_upper(alpha / 2.0);
  // the two-sided test detects |tau*|; canonicalizing the sign keeps the
  // result bit-identical for +-tau* despite the asymmetric subtraction order
  const double shift = std::fabs(tau_star) / se;
  return 2.0 - normal_cdf(z - shift) - normal_cdf(z + shift);
}

double power_one_sided(double tau_star, double se, double alpha, Alternative alt) {
  if (alt == Alternative::two_sided) return power_two_sided(tau_star, se, alpha);
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("power: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (!(se > 0.0))
    throw DegeneracyError("power: standard error must be positive, got " +
                          std::to_string(se));
  const double shift = tau_star / se;
  if (alt == Alternative::greater) return 1.0 - normal_cdf(normal_upper(alpha) - shift);
  return normal_cdf(-normal_upper(alpha) - shift);
}

namespace {

double marginal_power(const PowerSpec& spec, double se, int default_family) {
  const int family = spec.family_size > 0 ? spec.family_size : default_family;
  const double alpha = spec.correction == Correction::bonferroni
                           ? spec.alpha / static_cast<double>(family)
                           : spec.alpha;
  return spec.alternative == Alternative::two_sided
             ? power_two_sided(spec.tau_star, se, alpha)
             : power_one_sided(spec.tau_star, se, alpha, spec.alternative);
}

}  // namespace

PowerCurve power_curve(const FactorialDesign& design, const std::vector<PowerSpec>& specs,
                       const VarianceGuess& guess, char rule,
                       const std::vector<long long>& n_grid, double target_joint) {
  if (specs.empty()) throw InputError("power curve: no effects specified");
  if (n_grid.empty()) throw InputError("power curve: empty size grid");
  const int default_family = design.num_treatments() - 1;

  PowerCurve curve;
  curve.specs = specs;
  curve.target = target_joint;

  for (long long n : n_grid) {
    PowerPoint point;
    point.total_n = n;
    AllocationPlan plan;
    try {
      plan = allocate_optimal(design, rule, guess, n);
    } catch (const InfeasibilityError&) {
      point.feasible = false;
      point.joint = 0.0;
      curve.points.push_back(std::move(point));
      continue;
    }
    const double se = se_tilde(design, guess, plan);
    point.marginal.reserve(specs.size());
    for (const PowerSpec& spec : specs) {
      const double beta = marginal_power(spec, se, default_family);
      point.marginal.push_back(beta);
      point.joint *= beta;
    }
    if (curve.smallest_n < 0 && target_joint > 0.0 && point.joint >= target_joint)
      curve.smallest_n = n;
    curve.points.push_back(std::move(point));
  }
  return curve;
}

SampleSizeResult sample_size(const FactorialDesign& design, double tau_star, double alpha,
                             double beta_target, const std::vector<double>& deltas,
                             const VarianceGuess& guess, char rule) {
  const int J = design.num_treatments();
  if (tau_star == 0.0) throw InputError("sample size: effect size must be nonzero");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("sample size: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (!(beta_target > std::max(alpha, 0.5)))
    throw InputError("sample size: target power must exceed max(alpha, 0.5) = " +
                     std::to_string(std::max(alpha, 0.5)) +
                     "; the closed form is valid only there");
  if (static_cast<int>(deltas.size()) != J)
    throw InputError("sample size: expected " + std::to_string(J) + " arm shares, got " +
                     std::to_string(deltas.size()));
  double delta_sum = 0.0;
  for (double d : deltas) {
    if (!(d > 0.0)) throw InputError("sample size: arm shares must be positive");
    delta_sum += d;
  }
  if (std::fabs(delta_sum - 1.0) > 1e-9)
    throw InputError("sample size: arm shares must sum to 1, got " +
                     std::to_string(delta_sum));

  // In proportion mode the variance factor N/(N-1) folds into the closed
  // form as the trailing +1; variance and pilot guesses are size-free.
  std::vector<double> base(static_cast<std::size_t>(J));
  bool plus_one = false;
  switch (guess.mode) {
    case VarianceGuess::Mode::proportions: {
      plus_one = true;
      for (int j = 0; j < J; ++j) {
        const double p = guess.values.at(static_cast<std::size_t>(j));
        if (!(p >= 0.0 && p <= 1.0))
          throw InputError("sample size: proportion for treatment " + std::to_string(j + 1) +
                           " must lie in [0,1]");
        base[static_cast<std::size_t>(j)] = p * (1.0 - p);
      }
      break;
    }
    case VarianceGuess::Mode::variances:
    case VarianceGuess::Mode::pilot:
      base = guess.resolve_s2(0);
      break;
  }
  if (static_cast<int>(base.size()) != J)
    throw InputError("sample size: guess covers " + std::to_string(base.size()) +
                     " treatments, design has " + std::to_string(J));

  double weighted = 0.0;
  for (int j = 0; j < J; ++j)
    weighted += base[static_cast<std::size_t>(j)] / deltas[static_cast<std::size_t>(j)];
  const double scale2 = static_cast<double>(1LL << (2 * (design.K - 1)));
  const double z_gap = normal_upper(alpha) - normal_upper(beta_target);
  const double ratio = z_gap / tau_star;

  SampleSizeResult result;
  result.raw = weighted / scale2 * ratio * ratio + (plus_one ? 1.0 : 0.0);
  result.rounded = static_cast<long long>(std::ceil(result.raw));
  long long feasible = std::max<long long>(result.rounded, 2LL * J);
  if (rule == 'D' || rule == 'd') {
    if (feasible % J != 0) feasible += J - feasible % J;
  }
  result.feasible = feasible;
  return result;
}

}  // namespace factex
