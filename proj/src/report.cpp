#include "factex/report.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <sstream>

namespace factex {

std::string int128_to_string(int128 v) {
  if (v == 0) return "0";
  const bool negative = v < 0;
  unsigned __int128 u = negative ? -static_cast<unsigned __int128>(v)
                                 : static_cast<unsigned __int128>(v);
  std::string digits;
  while (u != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (negative) digits.push_back('-');
  return std::string(digits.rbegin(), digits.rend());
}

std::string format_double(double value, int digits) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, value);
  return buffer;
}

namespace {

// infinite interval ends become JSON null
nlohmann::json json_bound(double value) {
  if (std::isinf(value)) return nullptr;
  return value;
}

nlohmann::json json_of_design(const FactorialDesign& design) {
  return {{"k", design.K}, {"factors", design.factor_names}};
}

}  // namespace

nlohmann::json json_of(const GroupSummary& summary) {
  nlohmann::json treatments = nlohmann::json::array();
  for (int j = 0; j < summary.J(); ++j)
    treatments.push_back({{"treatment", j + 1},
                          {"n", summary.n(j)},
                          {"n1", summary.n1(j)},
                          {"p", summary.p(j)},
                          {"p_exact", summary.p_exact(j).str()}});
  return {{"design", json_of_design(summary.design())},
          {"total", summary.total()},
          {"treatments", treatments}};
}

nlohmann::json json_of(const InferenceTable& table) {
  nlohmann::json effects = nlohmann::json::array();
  for (const EffectRow& row : table.rows)
    effects.push_back({{"index", row.ell},
                       {"effect", row.label},
                       {"estimate", row.estimate},
                       {"estimate_exact", row.estimate_exact.str()},
                       {"se", row.se},
                       {"statistic", row.statistic},
                       {"lower", json_bound(row.lower)},
                       {"upper", json_bound(row.upper)},
                       {"p_raw", row.p_raw},
                       {"p_adjusted", row.p_adjusted},
                       {"reject", row.reject}});
  return {{"alpha", table.alpha},
          {"alternative", to_string(table.alternative)},
          {"correction", to_string(table.correction)},
          {"family_size", table.family_size},
          {"se", table.se},
          {"mean", table.mean},
          {"effects", effects}};
}

nlohmann::json json_of(const NonlinearTable& table) {
  nlohmann::json effects = nlohmann::json::array();
  for (const NonlinearRow& row : table.rows)
    effects.push_back({{"index", row.ell},
                       {"effect", row.label},
                       {"estimate", row.estimate},
                       {"variance", row.variance},
                       {"variance_clamped", row.variance_clamped},
                       {"se", row.se},
                       {"statistic", row.statistic},
                       {"lower", json_bound(row.lower)},
                       {"upper", json_bound(row.upper)},
                       {"p_raw", row.p_raw},
                       {"p_adjusted", row.p_adjusted},
                       {"reject", row.reject}});
  return {{"kind", to_string(table.kind)},
          {"alpha", table.alpha},
          {"alternative", to_string(table.alternative)},
          {"correction", to_string(table.correction)},
          {"family_size", table.family_size},
          {"continuity_correction", table.continuity_correction},
          {"effects", effects}};
}

nlohmann::json json_of(const AllocationPlan& plan) {
  return {{"total", plan.total},
          {"rule", plan.rule},
          {"arms", plan.arm_sizes},
          {"shares", plan.deltas()}};
}

nlohmann::json json_of(const PowerCurve& curve) {
  nlohmann::json specs = nlohmann::json::array();
  for (const PowerSpec& spec : curve.specs)
    specs.push_back({{"index", spec.ell},
                     {"label", spec.label},
                     {"tau_star", spec.tau_star},
                     {"alpha", spec.alpha},
                     {"alternative", to_string(spec.alternative)},
                     {"correction", to_string(spec.correction)},
                     {"family_size", spec.family_size}});
  nlohmann::json points = nlohmann::json::array();
  for (const PowerPoint& point : curve.points) {
    nlohmann::json entry = {{"n", point.total_n}, {"feasible", point.feasible}};
    if (point.feasible) {
      entry["power"] = point.marginal;
      entry["joint"] = point.joint;
    }
    points.push_back(std::move(entry));
  }
  nlohmann::json out = {{"specs", specs}, {"points", points}, {"target", curve.target}};
  out["smallest_n"] =
      curve.smallest_n >= 0 ? nlohmann::json(curve.smallest_n) : nlohmann::json(nullptr);
  return out;
}

nlohmann::json json_of(const SampleSizeResult& result, char rule) {
  return {{"raw", result.raw},
          {"rounded", result.rounded},
          {"feasible", result.feasible},
          {"rule", std::string(1, rule)}};
}

nlohmann::json json_of(const SimulationReport& report,
                       const std::vector<std::string>& labels) {
  nlohmann::json effects = nlohmann::json::array();
  for (std::size_t ell = 0; ell < report.mean_estimate.size(); ++ell)
    effects.push_back({{"effect", labels.at(ell)},
                       {"mean_estimate", report.mean_estimate[ell]},
                       {"empirical_var", report.empirical_var[ell]},
                       {"reject_ier", report.reject_ier[ell]},
                       {"reject_eer", report.reject_eer[ell]},
                       {"coverage", report.coverage[ell]}});
  return {{"draws", report.draws},
          {"degenerate_draws", report.degenerate_draws},
          {"seed", report.seed},
          {"effects", effects},
          {"joint_reject_ier", report.joint_reject_ier},
          {"joint_reject_eer", report.joint_reject_eer}};
}

nlohmann::json json_of(const ProtocolResult& result,
                       const std::vector<std::string>& labels) {
  nlohmann::json reports = nlohmann::json::array();
  for (const SimulationReport& report : result.reports)
    reports.push_back(json_of(report, labels));
  return {{"populations", result.reports.size()},
          {"joint_power", result.joint_power},
          {"mean_joint_power", result.mean_joint_power},
          {"min_joint_power", result.min_joint_power},
          {"reports", reports}};
}

nlohmann::json json_of(const EnumerationResult& result,
                       const std::vector<std::string>& labels) {
  nlohmann::json mean_tau = nlohmann::json::array();
  for (std::size_t ell = 0; ell < result.mean_tau.size(); ++ell)
    mean_tau.push_back({{"effect", labels.at(ell)},
                        {"value", result.mean_tau[ell].to_double()},
                        {"exact", result.mean_tau[ell].str()}});
  auto matrix = [](const std::vector<std::vector<Rat>>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : m) {
      nlohmann::json row = nlohmann::json::array();
      for (const Rat& v : r) row.push_back({{"value", v.to_double()}, {"exact", v.str()}});
      rows.push_back(std::move(row));
    }
    return rows;
  };
  nlohmann::json mean_p = nlohmann::json::array();
  for (const Rat& v : result.mean_p)
    mean_p.push_back({{"value", v.to_double()}, {"exact", v.str()}});
  nlohmann::json out = {{"assignments", result.assignment_count.str()},
                        {"mean_tau", mean_tau},
                        {"cov_tau", matrix(result.cov_tau)},
                        {"mean_p", mean_p},
                        {"cov_p", matrix(result.cov_p)},
                        {"variances_defined", result.variances_defined}};
  if (result.variances_defined) {
    nlohmann::json mean_s2 = nlohmann::json::array();
    for (const Rat& v : result.mean_s2)
      mean_s2.push_back({{"value", v.to_double()}, {"exact", v.str()}});
    out["mean_s2"] = mean_s2;
    out["mean_se2"] = {{"value", result.mean_se2.to_double()},
                       {"exact", result.mean_se2.str()}};
  }
  return out;
}

nlohmann::json json_of(const CltConditionReport& report) {
  nlohmann::json covariance = nlohmann::json::array();
  for (const auto& row : report.column_covariance) covariance.push_back(row);
  return {{"arm_share", report.arm_share},
          {"column_variance", report.column_variance},
          {"column_covariance", covariance},
          {"max_deviation", report.max_deviation},
          {"zero_variance", report.zero_variance}};
}

nlohmann::json json_of(const std::vector<PlotPoint>& points) {
  nlohmann::json out = nlohmann::json::array();
  for (const PlotPoint& point : points)
    out.push_back({{"series", point.series},
                   {"x", point.x},
                   {"mean", point.mean},
                   {"arms", point.arms}});
  return out;
}

std::string render_text(const GroupSummary& summary) {
  std::ostringstream out;
  out << "treatment    n   n1        p\n";
  for (int j = 0; j < summary.J(); ++j) {
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "%9d  %3lld  %3lld  %s\n", j + 1,
                  static_cast<long long>(summary.n(j)),
                  static_cast<long long>(summary.n1(j)), format_double(summary.p(j)).c_str());
    out << buffer;
  }
  return out.str();
}

std::string render_text(const InferenceTable& table) {
  std::ostringstream out;
  out << "effect";
  out << std::setw(18 - 6) << "";
  out << "estimate        se  statistic      lower      upper      p_raw      p_adj  reject\n";
  for (const EffectRow& row : table.rows) {
    std::ostringstream line;
    line << std::left << std::setw(16) << row.label << std::right;
    line << std::setw(10) << format_double(row.estimate);
    line << std::setw(10) << format_double(row.se);
    line << std::setw(11) << format_double(row.statistic);
    line << std::setw(11) << format_double(row.lower);
    line << std::setw(11) << format_double(row.upper);
    line << std::setw(11) << format_double(row.p_raw);
    line << std::setw(11) << format_double(row.p_adjusted);
    line << std::setw(8) << (row.reject ? "yes" : "no");
    out << line.str() << "\n";
  }
  out << "common se " << format_double(table.se) << ", grand mean "
      << format_double(table.mean) << ", alpha " << format_double(table.alpha) << ", "
      << to_string(table.alternative) << ", " << to_string(table.correction);
  if (table.correction == Correction::bonferroni)
    out << " (family " << table.family_size << ")";
  out << "\n";
  return out.str();
}

std::string render_text(const NonlinearTable& table) {
  std::ostringstream out;
  out << to_string(table.kind) << " effects";
  if (table.continuity_correction) out << " (continuity corrected)";
  out << "\n";
  out << "effect";
  out << std::setw(18 - 6) << "";
  out << "estimate        se  statistic      lower      upper      p_raw      p_adj  reject\n";
  for (const NonlinearRow& row : table.rows) {
    std::ostringstream line;
    line << std::left << std::setw(16) << row.label << std::right;
    line << std::setw(10) << format_double(row.estimate);
    line << std::setw(10) << format_double(row.se);
    line << std::setw(11) << format_double(row.statistic);
    line << std::setw(11) << format_double(row.lower);
    line << std::setw(11) << format_double(row.upper);
    line << std::setw(11) << format_double(row.p_raw);
    line << std::setw(11) << format_double(row.p_adjusted);
    line << std::setw(8) << (row.reject ? "yes" : "no");
    out << line.str() << "\n";
    if (row.variance_clamped)
      out << "  note: plug-in variance for " << row.label << " was negative, clamped to 0\n";
  }
  return out.str();
}

std::string render_text(const AllocationPlan& plan) {
  std::ostringstream out;
  out << "rule " << plan.rule << ", total " << plan.total << "\n";
  out << "treatment  units\n";
  for (std::size_t j = 0; j < plan.arm_sizes.size(); ++j) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%9zu  %5lld\n", j + 1,
                  static_cast<long long>(plan.arm_sizes[j]));
    out << buffer;
  }
  return out.str();
}

std::string render_text(const PowerCurve& curve) {
  std::ostringstream out;
  out << std::left << std::setw(8) << "n" << std::right;
  for (const PowerSpec& spec : curve.specs)
    out << std::setw(14) << ("beta(" + format_double(spec.tau_star) + ")");
  out << std::setw(14) << "joint" << "\n";
  for (const PowerPoint& point : curve.points) {
    out << std::left << std::setw(8) << point.total_n << std::right;
    if (!point.feasible) {
      out << "  infeasible\n";
      continue;
    }
    for (double beta : point.marginal) out << std::setw(14) << format_double(beta);
    out << std::setw(14) << format_double(point.joint) << "\n";
  }
  if (curve.target > 0.0) {
    if (curve.smallest_n >= 0)
      out << "smallest n with joint power >= " << format_double(curve.target) << ": "
          << curve.smallest_n << "\n";
    else
      out << "no grid point reaches joint power " << format_double(curve.target) << "\n";
  }
  return out.str();
}

std::string render_text(const SampleSizeResult& result) {
  std::ostringstream out;
  out << "raw " << format_double(result.raw) << ", rounded " << result.rounded
      << ", feasible " << result.feasible << "\n";
  return out.str();
}

std::string render_text(const SimulationReport& report,
                        const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "draws " << report.draws << " (degenerate " << report.degenerate_draws
      << "), seed " << report.seed << "\n";
  out << std::left << std::setw(16) << "effect" << std::right << std::setw(10) << "mean"
      << std::setw(12) << "emp var" << std::setw(12) << "rej ier" << std::setw(12)
      << "rej eer" << std::setw(10) << "cover" << "\n";
  for (std::size_t ell = 0; ell < report.mean_estimate.size(); ++ell) {
    out << std::left << std::setw(16) << labels.at(ell) << std::right;
    out << std::setw(10) << format_double(report.mean_estimate[ell]);
    out << std::setw(12) << format_double(report.empirical_var[ell], 6);
    out << std::setw(12) << format_double(report.reject_ier[ell]);
    out << std::setw(12) << format_double(report.reject_eer[ell]);
    out << std::setw(10) << format_double(report.coverage[ell]);
    out << "\n";
  }
  out << "joint rejection: ier " << format_double(report.joint_reject_ier) << ", eer "
      << format_double(report.joint_reject_eer) << "\n";
  return out.str();
}

std::string render_text(const ProtocolResult& result) {
  std::ostringstream out;
  out << "population  joint power\n";
  for (std::size_t p = 0; p < result.joint_power.size(); ++p) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%10zu  %s\n", p + 1,
                  format_double(result.joint_power[p]).c_str());
    out << buffer;
  }
  out << "mean " << format_double(result.mean_joint_power) << ", min "
      << format_double(result.min_joint_power) << "\n";
  return out.str();
}

std::string render_text(const EnumerationResult& result,
                        const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "assignments " << result.assignment_count.str() << "\n";
  out << std::left << std::setw(16) << "effect" << std::right << std::setw(12) << "mean"
      << std::setw(16) << "exact" << std::setw(14) << "variance" << "\n";
  for (std::size_t ell = 0; ell < result.mean_tau.size(); ++ell) {
    out << std::left << std::setw(16) << labels.at(ell) << std::right;
    out << std::setw(12) << format_double(result.mean_tau[ell].to_double());
    out << std::setw(16) << result.mean_tau[ell].str();
    out << std::setw(14) << format_double(result.cov_tau[ell][ell].to_double(), 6);
    out << "\n";
  }
  if (result.variances_defined)
    out << "E(se^2) " << result.mean_se2.str() << " = "
        << format_double(result.mean_se2.to_double(), 6) << "\n";
  return out.str();
}

std::string render_text(const CltConditionReport& report) {
  std::ostringstream out;
  out << "treatment  arm share  column variance  zero\n";
  for (std::size_t j = 0; j < report.arm_share.size(); ++j) {
    char buffer[96];
    std::snprintf(buffer, sizeof(buffer), "%9zu  %9s  %15s  %4s\n", j + 1,
                  format_double(report.arm_share[j]).c_str(),
                  format_double(report.column_variance[j], 6).c_str(),
                  report.zero_variance[j] ? "yes" : "no");
    out << buffer;
  }
  out << "max squared deviation over n: " << format_double(report.max_deviation, 6) << "\n";
  return out.str();
}

std::string render_text(const std::vector<PlotPoint>& points) {
  std::ostringstream out;
  out << std::left << std::setw(16) << "series" << std::right << std::setw(6) << "x"
      << std::setw(10) << "mean" << std::setw(6) << "arms" << "\n";
  for (const PlotPoint& point : points) {
    out << std::left << std::setw(16) << point.series << std::right;
    out << std::setw(6) << point.x;
    out << std::setw(10) << format_double(point.mean);
    out << std::setw(6) << point.arms;
    out << "\n";
  }
  return out.str();
}

}  // namespace factex
