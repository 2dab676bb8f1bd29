#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factex/csv.hpp"
#include "factex/enumerate.hpp"
#include "factex/estimation.hpp"
#include "factex/nonlinear.hpp"
#include "factex/population.hpp"
#include "factex/power.hpp"
#include "factex/simulate.hpp"
#include "factex/summary.hpp"

namespace factex {

// Fixed-width decimal with `digits` places, round-half-away like printf.
std::string format_double(double value, int digits = 4);

// JSON views of the report types. Numbers are emitted as doubles except
// where an exact string adds information (rational estimates carry a
// separate "exact" field). No timestamps or environment data: the same
// inputs must serialize to the same bytes.
nlohmann::json json_of(const GroupSummary& summary);
nlohmann::json json_of(const InferenceTable& table);
nlohmann::json json_of(const NonlinearTable& table);
nlohmann::json json_of(const AllocationPlan& plan);
nlohmann::json json_of(const PowerCurve& curve);
nlohmann::json json_of(const SampleSizeResult& result, char rule);
nlohmann::json json_of(const SimulationReport& report,
                       const std::vector<std::string>& labels);
nlohmann::json json_of(const ProtocolResult& result,
                       const std::vector<std::string>& labels);
nlohmann::json json_of(const EnumerationResult& result,
                       const std::vector<std::string>& labels);
nlohmann::json json_of(const CltConditionReport& report);
nlohmann::json json_of(const std::vector<PlotPoint>& points);

// Plain-text tables for stdout, four decimal places.
std::string render_text(const GroupSummary& summary);
std::string render_text(const InferenceTable& table);
std::string render_text(const NonlinearTable& table);
std::string render_text(const AllocationPlan& plan);
std::string render_text(const PowerCurve& curve);
std::string render_text(const SampleSizeResult& result);
std::string render_text(const SimulationReport& report,
                        const std::vector<std::string>& labels);
std::string render_text(const ProtocolResult& result);
std::string render_text(const EnumerationResult& result,
                        const std::vector<std::string>& labels);
std::string render_text(const CltConditionReport& report);
std::string render_text(const std::vector<PlotPoint>& points);

}  // namespace factex
