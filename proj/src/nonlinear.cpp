#include "factex/nonlinear.hpp"

#include <cmath>
#include <limits>

#include "factex/errors.hpp"
#include "factex/normal.hpp"

namespace factex {

const char* to_string(NonlinearKind k) {
  return k == NonlinearKind::log_fe ? "logfe" : "logitfe";
}

std::vector<double> nonlinear_proportions(const GroupSummary& summary,
                                          bool continuity_correction) {
  std::vector<double> p(static_cast<std::size_t>(summary.J()));
  for (int j = 0; j < summary.J(); ++j) {
    p[static_cast<std::size_t>(j)] =
        continuity_correction
            ? (static_cast<double>(summary.n1(j)) + 0.5) / (static_cast<double>(summary.n(j)) + 1.0)
            : summary.p(j);
  }
  return p;
}

namespace {

// s_j^2 = n/(n-1) p (1-p); under the correction the proportion moves but the
// group size does not
std::vector<double> arm_variances(const GroupSummary& summary, bool continuity_correction) {
  std::vector<double> p = nonlinear_proportions(summary, continuity_correction);
  std::vector<double> s2(p.size());
  for (int j = 0; j < summary.J(); ++j) {
    if (summary.n(j) < 2)
      throw DegeneracyError("nonlinear: treatment " + std::to_string(j + 1) +
                            " has a single unit, sample variance undefined");
    const double nj = static_cast<double>(summary.n(j));
    const double pj = p[static_cast<std::size_t>(j)];
    s2[static_cast<std::size_t>(j)] = nj / (nj - 1.0) * pj * (1.0 - pj);
  }
  return s2;
}

// per-arm denominator entering both sums: p for log effects, p(1-p) for
// logit effects; zero means the estimand is undefined at this arm
std::vector<double> arm_denominators(const GroupSummary& summary, NonlinearKind kind,
                                     bool continuity_correction) {
  std::vector<double> p = nonlinear_proportions(summary, continuity_correction);
  std::vector<double> d(p.size());
  for (int j = 0; j < summary.J(); ++j) {
    const double pj = p[static_cast<std::size_t>(j)];
    if (pj <= 0.0 || (kind == NonlinearKind::logit_fe && pj >= 1.0))
      throw DegeneracyError(std::string("nonlinear: treatment ") + std::to_string(j + 1) +
                            " has proportion " + std::to_string(pj) + ", " +
                            to_string(kind) +
                            " undefined; rerun with the continuity correction or drop the arm");
    d[static_cast<std::size_t>(j)] = kind == NonlinearKind::log_fe ? pj : pj * (1.0 - pj);
  }
  return d;
}

std::vector<double> contrast_of_logs(const GroupSummary& summary, const ContrastMatrix& L,
                                     NonlinearKind kind, bool continuity_correction) {
  std::vector<double> p = nonlinear_proportions(summary, continuity_correction);
  arm_denominators(summary, kind, continuity_correction);  // domain check only
  const int J = L.J();
  const double scale = 1.0 / static_cast<double>(1LL << (L.K() - 1));
  std::vector<double> out(static_cast<std::size_t>(J - 1), 0.0);
  for (int j = 1; j <= J; ++j) {
    const double pj = p[static_cast<std::size_t>(j - 1)];
    const double term =
        kind == NonlinearKind::log_fe ? std::log(pj) : std::log(pj / (1.0 - pj));
    for (int ell = 1; ell < J; ++ell)
      out[static_cast<std::size_t>(ell - 1)] += L.entry(j, ell) * term;
  }
  for (double& v : out) v *= scale;
  return out;
}

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

std::vector<double> estimate_logfe(const GroupSummary& summary, const ContrastMatrix& L,
                                   bool continuity_correction) {
  return contrast_of_logs(summary, L, NonlinearKind::log_fe, continuity_correction);
}

std::vector<double> estimate_logitfe(const GroupSummary& summary, const ContrastMatrix& L,
                                     bool continuity_correction) {
  return contrast_of_logs(summary, L, NonlinearKind::logit_fe, continuity_correction);
}

NonlinearVariance nonlinear_variance_estimate(const GroupSummary& summary,
                                              const ContrastMatrix& L, NonlinearKind kind,
                                              bool continuity_correction) {
  const int J = L.J();
  const double N = static_cast<double>(summary.total());
  const std::vector<double> s2 = arm_variances(summary, continuity_correction);
  const std::vector<double> d = arm_denominators(summary, kind, continuity_correction);
  const double scale2 = 1.0 / static_cast<double>(1LL << (2 * (L.K() - 1)));

  NonlinearVariance result;
  result.variance.assign(static_cast<std::size_t>(J - 1), 0.0);
  result.clamped.assign(static_cast<std::size_t>(J - 1), false);

  // shared across effects: the first sum has no contrast dependence because
  // lambda^2 = 1
  double first = 0.0;
  for (int j = 0; j < J; ++j) {
    const double nj = static_cast<double>(summary.n(j));
    first += (N - nj) * s2[static_cast<std::size_t>(j)] /
             (N * nj * d[static_cast<std::size_t>(j)] * d[static_cast<std::size_t>(j)]);
  }

  for (int ell = 1; ell < J; ++ell) {
    // cross sum over unordered arm pairs; the difference variances
    // S^2_{j-j'} are not estimable from marginal data and enter as zero
    double cross = 0.0;
    for (int j = 1; j <= J; ++j)
      for (int jp = j + 1; jp <= J; ++jp)
        cross += L.entry(j, ell) * L.entry(jp, ell) *
                 (s2[static_cast<std::size_t>(j - 1)] + s2[static_cast<std::size_t>(jp - 1)]) /
                 (d[static_cast<std::size_t>(j - 1)] * d[static_cast<std::size_t>(jp - 1)]);
    double v = scale2 * (first - cross / N);
    if (v < 0.0) {
      v = 0.0;
      result.clamped[static_cast<std::size_t>(ell - 1)] = true;
    }
    result.variance[static_cast<std::size_t>(ell - 1)] = v;
  }
  return result;
}

NonlinearTable nonlinear_infer(const GroupSummary& summary, const ContrastMatrix& L,
                               NonlinearKind kind, double alpha, Alternative alternative,
                               Correction correction, int family_size,
                               bool continuity_correction) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InputError("nonlinear: alpha must lie in (0,1), got " + std::to_string(alpha));
  if (family_size < 0)
    throw InputError("nonlinear: family size must be positive");

  const int J = L.J();
  NonlinearTable table;
  table.kind = kind;
  table.alpha = alpha;
  table.alternative = alternative;
  table.correction = correction;
  table.family_size = family_size > 0 ? family_size : J - 1;
  table.continuity_correction = continuity_correction;

  const std::vector<double> estimates =
      contrast_of_logs(summary, L, kind, continuity_correction);
  const NonlinearVariance variances =
      nonlinear_variance_estimate(summary, L, kind, continuity_correction);

  const double inf = std::numeric_limits<double>::infinity();
  for (int ell = 1; ell < J; ++ell) {
    NonlinearRow row;
    row.ell = ell;
    row.label = L.label(ell);
    row.estimate = estimates[static_cast<std::size_t>(ell - 1)];
    row.variance = variances.variance[static_cast<std::size_t>(ell - 1)];
    row.variance_clamped = variances.clamped[static_cast<std::size_t>(ell - 1)];
    if (row.variance <= 0.0)
      throw DegeneracyError("nonlinear: effect " + row.label +
                            " has zero plug-in variance; no test is possible");
    row.se = std::sqrt(row.variance);
    row.statistic = row.estimate / row.se;
    switch (alternative) {
      case Alternative::two_sided: {
        const double z = normal_upper(alpha / 2.0);
        row.lower = row.estimate - z * row.se;
        row.upper = row.estimate + z * row.se;
        break;
      }
      case Alternative::greater: {
        row.lower = row.estimate - normal_upper(alpha) * row.se;
        row.upper = inf;
        break;
      }
      case Alternative::less: {
        row.lower = -inf;
        row.upper = row.estimate + normal_upper(alpha) * row.se;
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
