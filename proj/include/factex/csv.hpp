#pragma once

#include <string>
#include <vector>

#include "factex/design.hpp"
#include "factex/estimation.hpp"
#include "factex/nonlinear.hpp"
#include "factex/summary.hpp"

namespace factex {

// Unit-level CSV. Two layouts, detected from the header:
//   factor columns: one 0/1 column per factor, in design order, then `y`.
//   treatment column: `treatment` (1..J) then `y`.
// Comma-separated, UTF-8, header mandatory. Malformed cells raise InputError
// with the 1-based data row number. When `design` has no factor names the
// factor layout takes its names from the header.
ObservedDataset read_unit_csv(const std::string& path, int num_factors);

// Group-summary CSV with header treatment,n,n1. Treatments may appear in any
// order but each exactly once; n1 <= n is enforced per row.
GroupSummary read_summary_csv(const std::string& path, int num_factors);

void write_summary_csv(const std::string& path, const GroupSummary& summary);

void write_inference_csv(const std::string& path, const InferenceTable& table);
void write_nonlinear_csv(const std::string& path, const NonlinearTable& table);

// One point of the factor-level plot data described below.
struct PlotPoint {
  std::string series;    // factor name, or "a,b" level pair for interactions
  double x = 0.0;        // level of the (last-varying) plotted factor
  double mean = 0.0;     // average proportion over the arms at that setting
  long long arms = 0;    // how many arms were averaged
};

// Marginal means for main-effect plots: for each factor, the mean outcome
// proportion at each of its levels averaged over all other factors. When
// `pair_factors` names two factors, instead produce the two-way table: one
// series per level of the first factor, points along levels of the second.
std::vector<PlotPoint> plot_points(const GroupSummary& summary);
std::vector<PlotPoint> plot_points_pair(const GroupSummary& summary, int factor_a,
                                        int factor_b);

void write_plot_csv(const std::string& path, const std::vector<PlotPoint>& points);

}  // namespace factex
