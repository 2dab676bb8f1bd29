#include "factex/csv.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "factex/errors.hpp"

namespace factex {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) {
    // tolerate surrounding blanks and Windows line endings
    std::size_t begin = cell.find_first_not_of(" \t\r");
    std::size_t end = cell.find_last_not_of(" \t\r");
    cells.push_back(begin == std::string::npos ? "" : cell.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

long long parse_integer(const std::string& cell, const std::string& what, long long row) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return value;
  } catch (const std::exception&) {
    throw InputError("csv: row " + std::to_string(row) + ": " + what + " '" + cell +
                     "' is not an integer");
  }
}

int parse_binary(const std::string& cell, const std::string& what, long long row) {
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  throw InputError("csv: row " + std::to_string(row) + ": " + what + " '" + cell +
                   "' must be 0 or 1");
}

std::string format_full(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

}  // namespace

ObservedDataset read_unit_csv(const std::string& path, int num_factors) {
  std::ifstream in(path);
  if (!in) throw InputError("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: '" + path + "' is empty, header required");
  const std::vector<std::string> header = split_line(line);

  const bool treatment_layout = header.size() == 2 && header[0] == "treatment" && header[1] == "y";
  const bool factor_layout = static_cast<int>(header.size()) == num_factors + 1 &&
                             header.back() == "y" && !treatment_layout;
  if (!treatment_layout && !factor_layout)
    throw InputError("csv: '" + path + "' header must be either treatment,y or " +
                     std::to_string(num_factors) + " factor columns followed by y");

  FactorialDesign design =
      treatment_layout
          ? FactorialDesign(num_factors)
          : FactorialDesign(num_factors, std::vector<std::string>(header.begin(),
                                                                  header.end() - 1));

  ObservedDataset data{design, {}};
  long long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size())
      throw InputError("csv: row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " cells, got " +
                       std::to_string(cells.size()));
    int treatment;
    if (treatment_layout) {
      const long long t = parse_integer(cells[0], "treatment", row);
      if (t < 1 || t > design.num_treatments())
        throw InputError("csv: row " + std::to_string(row) + ": treatment " +
                         std::to_string(t) + " outside 1.." +
                         std::to_string(design.num_treatments()));
      treatment = static_cast<int>(t);
    } else {
      std::vector<int> levels(static_cast<std::size_t>(num_factors));
      for (int k = 0; k < num_factors; ++k)
        levels[static_cast<std::size_t>(k)] =
            parse_binary(cells[static_cast<std::size_t>(k)],
                         "factor " + header[static_cast<std::size_t>(k)], row);
      treatment = design.treatment_index(levels);
    }
    const int outcome = parse_binary(cells.back(), "outcome y", row);
    data.records.emplace_back(treatment, outcome);
  }
  if (data.records.empty()) throw InputError("csv: '" + path + "' has no records");
  return data;
}

GroupSummary read_summary_csv(const std::string& path, int num_factors) {
  std::ifstream in(path);
  if (!in) throw InputError("csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: '" + path + "' is empty, header required");
  const std::vector<std::string> header = split_line(line);
  if (header.size() != 3 || header[0] != "treatment" || header[1] != "n" || header[2] != "n1")
    throw InputError("csv: '" + path + "' header must be treatment,n,n1");

  FactorialDesign design(num_factors);
  const int J = design.num_treatments();
  std::vector<long long> n(static_cast<std::size_t>(J), -1);
  std::vector<long long> n1(static_cast<std::size_t>(J), 0);

  long long row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++row;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != 3)
      throw InputError("csv: row " + std::to_string(row) + ": expected 3 cells, got " +
                       std::to_string(cells.size()));
    const long long t = parse_integer(cells[0], "treatment", row);
    if (t < 1 || t > J)
      throw InputError("csv: row " + std::to_string(row) + ": treatment " +
                       std::to_string(t) + " outside 1.." + std::to_string(J));
    if (n[static_cast<std::size_t>(t - 1)] >= 0)
      throw InputError("csv: row " + std::to_string(row) + ": duplicate treatment " +
                       std::to_string(t));
    const long long count = parse_integer(cells[1], "n", row);
    const long long count1 = parse_integer(cells[2], "n1", row);
    if (count < 1)
      throw InputError("csv: row " + std::to_string(row) + ": n must be at least 1");
    if (count1 < 0 || count1 > count)
      throw InputError("csv: row " + std::to_string(row) + ": n1 " + std::to_string(count1) +
                       " outside 0..n = " + std::to_string(count));
    n[static_cast<std::size_t>(t - 1)] = count;
    n1[static_cast<std::size_t>(t - 1)] = count1;
  }
  for (int j = 0; j < J; ++j)
    if (n[static_cast<std::size_t>(j)] < 0)
      throw InputError("csv: treatment " + std::to_string(j + 1) + " is missing");
  return GroupSummary(design, std::move(n), std::move(n1));
}

void write_summary_csv(const std::string& path, const GroupSummary& summary) {
  std::ofstream out(path);
  if (!out) throw InputError("csv: cannot write '" + path + "'");
  out << "treatment,n,n1\n";
  for (int j = 0; j < summary.J(); ++j)
    out << (j + 1) << "," << summary.n(j) << "," << summary.n1(j) << "\n";
}

void write_inference_csv(const std::string& path, const InferenceTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("csv: cannot write '" + path + "'");
  out << "effect,estimate,estimate_exact,se,statistic,lower,upper,p_raw,p_adjusted,reject\n";
  for (const EffectRow& row : table.rows) {
    out << row.label << "," << format_full(row.estimate) << "," << row.estimate_exact.str()
        << "," << format_full(row.se) << "," << format_full(row.statistic) << ","
        << format_full(row.lower) << "," << format_full(row.upper) << ","
        << format_full(row.p_raw) << "," << format_full(row.p_adjusted) << ","
        << (row.reject ? 1 : 0) << "\n";
  }
}

void write_nonlinear_csv(const std::string& path, const NonlinearTable& table) {
  std::ofstream out(path);
  if (!out) throw InputError("csv: cannot write '" + path + "'");
  out << "effect,estimate,variance,se,statistic,lower,upper,p_raw,p_adjusted,reject,"
         "variance_clamped\n";
  for (const NonlinearRow& row : table.rows) {
    out << row.label << "," << format_full(row.estimate) << "," << format_full(row.variance)
        << "," << format_full(row.se) << "," << format_full(row.statistic) << ","
        << format_full(row.lower) << "," << format_full(row.upper) << ","
        << format_full(row.p_raw) << "," << format_full(row.p_adjusted) << ","
        << (row.reject ? 1 : 0) << "," << (row.variance_clamped ? 1 : 0) << "\n";
  }
}

std::vector<PlotPoint> plot_points(const GroupSummary& summary) {
  const FactorialDesign& design = summary.design();
  std::vector<PlotPoint> points;
  for (int k = 0; k < design.K; ++k) {
    for (int level = 0; level <= 1; ++level) {
      PlotPoint point;
      point.series = design.factor_names[static_cast<std::size_t>(k)];
      point.x = level;
      for (int j = 1; j <= summary.J(); ++j) {
        if (design.levels_of(j)[static_cast<std::size_t>(k)] != level) continue;
        point.mean += summary.p(j - 1);
        ++point.arms;
      }
      point.mean /= static_cast<double>(point.arms);
      points.push_back(std::move(point));
    }
  }
  return points;
}

std::vector<PlotPoint> plot_points_pair(const GroupSummary& summary, int factor_a,
                                        int factor_b) {
  const FactorialDesign& design = summary.design();
  if (factor_a < 1 || factor_a > design.K || factor_b < 1 || factor_b > design.K ||
      factor_a == factor_b)
    throw InputError("plot: factor pair must name two distinct factors in 1.." +
                     std::to_string(design.K));
  std::vector<PlotPoint> points;
  for (int level_a = 0; level_a <= 1; ++level_a) {
    for (int level_b = 0; level_b <= 1; ++level_b) {
      PlotPoint point;
      // qualify with the x-axis factor so rows from different pairs stay distinct
      point.series = design.factor_names[static_cast<std::size_t>(factor_a - 1)] + "=" +
                     std::to_string(level_a) + ":" +
                     design.factor_names[static_cast<std::size_t>(factor_b - 1)];
      point.x = level_b;
      for (int j = 1; j <= summary.J(); ++j) {
        const std::vector<int> levels = design.levels_of(j);
        if (levels[static_cast<std::size_t>(factor_a - 1)] != level_a ||
            levels[static_cast<std::size_t>(factor_b - 1)] != level_b)
          continue;
        point.mean += summary.p(j - 1);
        ++point.arms;
      }
      point.mean /= static_cast<double>(point.arms);
      points.push_back(std::move(point));
    }
  }
  return points;
}

void write_plot_csv(const std::string& path, const std::vector<PlotPoint>& points) {
  std::ofstream out(path);
  if (!out) throw InputError("csv: cannot write '" + path + "'");
  out << "series,x,mean,arms\n";
  for (const PlotPoint& point : points)
    out << point.series << "," << point.x << "," << format_full(point.mean) << ","
        << point.arms << "\n";
}

}  // namespace factex
