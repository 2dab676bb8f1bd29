#include "factex/estimation.hpp"

#include <cmath>
#include <limits>

#include "factex/normal.hpp"

namespace factex {

const char* to_string(Alternative a) {
  switch (a) {
    case Alternative::two_sided: return "two-sided";
    case Alternative::greater: return "greater";
    case Alternative::less: return "less";
  }
  return "?";
}

const char* to_string(Correction c) {
  return c == Correction::ier ? "ier" : "bonferroni";
}

std::vector<Rat> estimate_effects_exact(const GroupSummary& summary,
                                        const ContrastMatrix& L) {
  const int J = L.J();
  const Rat scale(1, int128(1) << (L.K() - 1));
  std::vector<Rat> out;
  out.reserve(static_cast<std::size_t>(J - 1));
  for (int ell = 1; ell < J; ++ell) {
    Rat acc;
    for (int j = 1; j <= J; ++j) {
      Rat term = summary.p_exact(j - 1);
      if (L.entry(j, ell) > 0)
        acc += term;
      else
        acc -= term;
    }
    out.push_back(acc * scale);
  }
  return out;
}

std::vector<double> estimate_effects(const GroupSummary& summary, const ContrastMatrix& L) {
  std::vector<Rat> exact = estimate_effects_exact(summary, L);
  std::vector<double> out(exact.size());
  for (std::size_t i = 0; i < exact.size(); ++i) out[i] = exact[i].to_double();
  return out;
}

Rat estimate_mean_exact(const GroupSummary& summary) {
  Rat acc;
  for (int j = 0; j < summary.J(); ++j) acc += summary.p_exact(j);
  return acc / Rat(summary.J());
}

Rat neyman_se_squared_exact(const GroupSummary& summary) {
  const int K = summary.design().K;
  Rat acc;
  for (int j = 0; j < summary.J(); ++j)
    acc += summary.sample_variance_exact(j) / Rat(summary.n(j));
  const int128 half = int128(1) << (K - 1);
  return acc / Rat(checked_mul(half, half));
}

double neyman_se(const GroupSummary& summary) {
  return std::sqrt(neyman_se_squared_exact(summary).to_double());
}

namespace {

double raw_p_value(double statistic, Alternative alternative) {
  switch (alternative) {
    case Alternative::two_sided:
      return 2.0 * (1.0 - normal_cdf(std::fabs(statistic)));
    case Alternative::greater:
      return 1.0 - normal_cdf(statistic);
    case Alternative::less:
      return normal_cdf(statistic);
  }
  return 1.0;
}

}  // namespace

InferenceTable infer(const GroupSummary& summary, double alpha, Alternative alternative,
                     Correction correction, int family_size) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("infer: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (family_size < 0)
    throw InputError("infer: family size must be positive");

  const ContrastMatrix L = ContrastMatrix::build(summary.design());
  const int J = L.J();

  InferenceTable table;
  table.alpha = alpha;
  table.alternative = alternative;
  table.correction = correction;
  table.family_size = family_size > 0 ? family_size : J - 1;
  table.mean = estimate_mean_exact(summary).to_double();

  const double se = neyman_se(summary);
  if (se == 0.0)
    throw DegeneracyError(
        "infer: standard error is zero (every arm is constant); the normal "
        "approximation is unusable, enumerate the randomization distribution instead");
  table.se = se;

  const double inf = std::numeric_limits<double>::infinity();
  std::vector<Rat> estimates = estimate_effects_exact(summary, L);

  for (int ell = 1; ell < J; ++ell) {
    EffectRow row;
    row.ell = ell;
    row.label = L.label(ell);
    row.estimate_exact = estimates[static_cast<std::size_t>(ell - 1)];
    row.estimate = row.estimate_exact.to_double();
    row.se = se;
    row.statistic = row.estimate / se;
    switch (alternative) {
      case Alternative::two_sided: {
        const double z = normal_upper(alpha / 2.0);
        row.lower = row.estimate - z * se;
        row.upper = row.estimate + z * se;
        break;
      }
      case Alternative::greater: {
        row.lower = row.estimate - normal_upper(alpha) * se;
        row.upper = inf;
        break;
      }
      case Alternative::less: {
        row.lower = -inf;
        row.upper = row.estimate + normal_upper(alpha) * se;
        break;
      }
    }
    row.p_raw = raw_p_value(row.statistic, alternative);
    row.p_adjusted = correction == Correction::bonferroni
                         ? std::min(table.family_size * row.p_raw, 1.0)
                         : row.p_raw;
    row.reject = row.p_adjusted <= alpha;
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace factex
