// factex: design and analysis of 2^K factorial experiments with binary
// outcomes under finite-population randomization inference.
//
// Subcommands: analyze, plot-data, power-curve, sample-size, allocate,
// simulate, enumerate. Exit codes: 0 success, 2 input error, 3 statistical
// degeneracy, 4 infeasibility.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "factex/report.hpp"

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- parsing

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> items;
  std::string item;
  std::stringstream stream(text);
  while (std::getline(stream, item, ',')) {
    const std::size_t begin = item.find_first_not_of(" \t");
    const std::size_t end = item.find_last_not_of(" \t");
    items.push_back(begin == std::string::npos ? "" : item.substr(begin, end - begin + 1));
  }
  return items;
}

double parse_double(const std::string& cell, const std::string& what) {
  try {
    std::size_t used = 0;
    const double value = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return value;
  } catch (const std::exception&) {
    throw factex::InputError(what + ": '" + cell + "' is not a number");
  }
}

long long parse_long(const std::string& cell, const std::string& what) {
  try {
    std::size_t used = 0;
    const long long value = std::stoll(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return value;
  } catch (const std::exception&) {
    throw factex::InputError(what + ": '" + cell + "' is not an integer");
  }
}

std::vector<double> parse_double_list(const std::string& text, const std::string& what) {
  std::vector<double> values;
  for (const std::string& cell : split_csv(text)) values.push_back(parse_double(cell, what));
  return values;
}

std::vector<long long> parse_long_list(const std::string& text, const std::string& what) {
  std::vector<long long> values;
  for (const std::string& cell : split_csv(text)) values.push_back(parse_long(cell, what));
  return values;
}

// Grid spec: either "lo:hi:step" or a comma-separated list.
std::vector<long long> parse_grid(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::string part;
    std::stringstream stream(text);
    while (std::getline(stream, part, ':')) parts.push_back(part);
    if (parts.size() != 3)
      throw factex::InputError("--n-grid: expected lo:hi:step, got '" + text + "'");
    const long long lo = parse_long(parts[0], "--n-grid lo");
    const long long hi = parse_long(parts[1], "--n-grid hi");
    const long long step = parse_long(parts[2], "--n-grid step");
    if (step <= 0 || lo > hi)
      throw factex::InputError("--n-grid: need step > 0 and lo <= hi");
    std::vector<long long> grid;
    for (long long n = lo; n <= hi; n += step) grid.push_back(n);
    return grid;
  }
  return parse_long_list(text, "--n-grid");
}

factex::Alternative alternative_of(const std::string& name) {
  if (name == "two-sided") return factex::Alternative::two_sided;
  if (name == "greater") return factex::Alternative::greater;
  if (name == "less") return factex::Alternative::less;
  throw factex::InputError("--alternative must be two-sided, greater, or less, got '" +
                           name + "'");
}

factex::Correction correction_of(const std::string& name) {
  if (name == "ier") return factex::Correction::ier;
  if (name == "bonferroni") return factex::Correction::bonferroni;
  throw factex::InputError("--correction must be ier or bonferroni, got '" + name + "'");
}

char criterion_of(const std::string& name) {
  if (name == "d" || name == "D") return 'D';
  if (name == "a" || name == "A") return 'A';
  if (name == "e" || name == "E") return 'E';
  throw factex::InputError("--criterion must be d, a, or e, got '" + name + "'");
}

factex::VarianceGuess::Mode mode_of(const std::string& name) {
  if (name == "variances") return factex::VarianceGuess::Mode::variances;
  if (name == "proportions") return factex::VarianceGuess::Mode::proportions;
  if (name == "pilot") return factex::VarianceGuess::Mode::pilot;
  throw factex::InputError("--guess-mode must be variances, proportions, or pilot, got '" +
                           name + "'");
}

// ------------------------------------------------------------------ config

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw factex::InputError("config: cannot open '" + path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw factex::InputError(std::string("config: ") + e.what());
  }
  if (!cfg.is_object()) throw factex::InputError("config: top level must be a JSON object");
  return cfg;
}

// Count that tolerates flags a given subcommand does not define.
std::size_t flag_count(const CLI::App& cmd, const std::string& flag) {
  const CLI::Option* option = cmd.get_option_no_throw(flag);
  return option ? option->count() : 0;
}

// Explicit command-line flags beat config keys, which beat built-in defaults.
template <typename T>
void fallback(const CLI::App& cmd, const std::string& flag, const json& cfg,
              const std::string& key, T& value) {
  if (flag_count(cmd, flag) > 0) return;
  const auto it = cfg.find(key);
  if (it == cfg.end()) return;
  try {
    value = it->get<T>();
  } catch (const json::exception&) {
    throw factex::InputError("config: key '" + key + "' has the wrong type");
  }
}

// List-valued setting: flag holds a comma list, config may hold an array or
// the same comma string.
std::vector<double> resolve_doubles(const CLI::App& cmd, const std::string& flag,
                                    const std::string& flag_value, const json& cfg,
                                    const std::string& key) {
  if (flag_count(cmd, flag) > 0) return parse_double_list(flag_value, flag);
  const auto it = cfg.find(key);
  if (it == cfg.end()) return {};
  if (it->is_string()) return parse_double_list(it->get<std::string>(), key);
  try {
    return it->get<std::vector<double>>();
  } catch (const json::exception&) {
    throw factex::InputError("config: key '" + key + "' must be an array of numbers");
  }
}

std::vector<long long> resolve_longs(const CLI::App& cmd, const std::string& flag,
                                     const std::string& flag_value, const json& cfg,
                                     const std::string& key) {
  if (flag_count(cmd, flag) > 0) return parse_long_list(flag_value, flag);
  const auto it = cfg.find(key);
  if (it == cfg.end()) return {};
  if (it->is_string()) return parse_long_list(it->get<std::string>(), key);
  try {
    return it->get<std::vector<long long>>();
  } catch (const json::exception&) {
    throw factex::InputError("config: key '" + key + "' must be an array of integers");
  }
}

std::vector<std::string> resolve_strings(const CLI::App& cmd, const std::string& flag,
                                         const std::string& flag_value, const json& cfg,
                                         const std::string& key) {
  if (flag_count(cmd, flag) > 0) return split_csv(flag_value);
  const auto it = cfg.find(key);
  if (it == cfg.end()) return {};
  if (it->is_string()) return split_csv(it->get<std::string>());
  try {
    return it->get<std::vector<std::string>>();
  } catch (const json::exception&) {
    throw factex::InputError("config: key '" + key + "' must be an array of strings");
  }
}

// ------------------------------------------------------------------ output

void emit_json(const json& payload, const std::string& path) {
  if (path.empty()) return;
  const std::string text = payload.dump(2) + "\n";
  if (path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw factex::InputError("cannot open '" + path + "' for writing");
  out << text;
}

// "out.csv" + "logfe" -> "out.logfe.csv"
std::string with_tag(const std::string& path, const std::string& tag) {
  const std::size_t dot = path.find_last_of('.');
  const std::size_t slash = path.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "." + tag;
  return path.substr(0, dot) + "." + tag + path.substr(dot);
}

// --------------------------------------------------------------- option bag

struct Options {
  std::string config;
  std::string input;
  std::string summary_path;
  int factors = 0;
  std::string factor_names;
  double alpha = 0.05;
  std::string alternative = "two-sided";
  std::string correction = "ier";
  std::vector<std::string> estimands;
  bool haldane = false;
  bool clip_intervals = false;
  int family_size = 0;
  std::string criterion = "d";
  std::uint64_t seed = 0;
  long long draws = 1000;
  int populations = 1;
  std::string n_grid;
  double target_power = 0.0;
  std::string json_out;
  std::string csv_out;
  std::string summary_out;
  std::vector<std::string> effects;
  double tau_star = 0.0;
  std::string guess_mode = "variances";
  std::string guess;
  int pilot_arm = 0;
  std::string deltas;
  std::string p_list;
  long long total_n = 0;
  std::string arms;
  long long cap = 1000000;
  bool serial = false;
  std::string pair;
  std::vector<std::string> joint;
};

// Settings shared by every subcommand.
void apply_common_config(const CLI::App& cmd, const json& cfg, Options& o) {
  fallback(cmd, "--input", cfg, "input", o.input);
  fallback(cmd, "--summary", cfg, "summary", o.summary_path);
  fallback(cmd, "--factors", cfg, "factors", o.factors);
  fallback(cmd, "--alpha", cfg, "alpha", o.alpha);
  fallback(cmd, "--alternative", cfg, "alternative", o.alternative);
  fallback(cmd, "--correction", cfg, "correction", o.correction);
  fallback(cmd, "--family-size", cfg, "family_size", o.family_size);
  fallback(cmd, "--criterion", cfg, "criterion", o.criterion);
  fallback(cmd, "--seed", cfg, "seed", o.seed);
  fallback(cmd, "--draws", cfg, "draws", o.draws);
  fallback(cmd, "--populations", cfg, "populations", o.populations);
  fallback(cmd, "--target-power", cfg, "target_power", o.target_power);
  fallback(cmd, "--json-out", cfg, "json_out", o.json_out);
  fallback(cmd, "--csv-out", cfg, "csv_out", o.csv_out);
  fallback(cmd, "--summary-out", cfg, "summary_out", o.summary_out);
  fallback(cmd, "--haldane", cfg, "haldane", o.haldane);
  fallback(cmd, "--clip-intervals", cfg, "clip_intervals", o.clip_intervals);
  fallback(cmd, "--serial", cfg, "serial", o.serial);
  fallback(cmd, "--tau-star", cfg, "tau_star", o.tau_star);
  fallback(cmd, "--guess-mode", cfg, "guess_mode", o.guess_mode);
  fallback(cmd, "--pilot-arm", cfg, "pilot_arm", o.pilot_arm);
  fallback(cmd, "--n", cfg, "n", o.total_n);
  fallback(cmd, "--cap", cfg, "cap", o.cap);
  fallback(cmd, "--pair", cfg, "pair", o.pair);
}

factex::FactorialDesign make_design(int factors, const std::vector<std::string>& names) {
  if (factors <= 0)
    throw factex::InputError("the number of factors is required here: pass --factors K");
  if (names.empty()) return factex::FactorialDesign(factors);
  return factex::FactorialDesign(factors, names);
}

// Header peek used to infer K for factor-layout unit files.
int infer_unit_factors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw factex::InputError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw factex::InputError("csv: '" + path + "' is empty, header required");
  const std::vector<std::string> header = split_csv(line);
  if (header.size() == 2 && header[0] == "treatment" && header[1] == "y")
    throw factex::InputError("'" + path +
                             "' uses the treatment,y layout: pass --factors K");
  if (header.size() >= 2 && header.back() == "y") return static_cast<int>(header.size()) - 1;
  throw factex::InputError("csv: '" + path +
                           "' header must be either treatment,y or factor columns plus y");
}

// Row count (rows = 2^K) infers K for summary files when --factors is absent.
int infer_summary_factors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw factex::InputError("csv: cannot open '" + path + "'");
  std::string line;
  long long rows = -1;  // header does not count
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    ++rows;
  }
  for (int k = 1; k <= 16; ++k)
    if ((1LL << k) == rows) return k;
  throw factex::InputError("'" + path + "' has " + std::to_string(rows) +
                           " treatment rows, not a power of two: pass --factors K");
}

factex::GroupSummary load_summary(const CLI::App& cmd, const json& cfg, const Options& o) {
  const std::vector<std::string> names =
      resolve_strings(cmd, "--factor-names", o.factor_names, cfg, "factor_names");
  const bool have_units = !o.input.empty();
  const bool have_summary = !o.summary_path.empty();
  if (have_units == have_summary)
    throw factex::InputError("pass exactly one of --input (unit rows) or --summary "
                             "(treatment,n,n1 rows)");

  if (have_units) {
    const int factors = o.factors > 0 ? o.factors : infer_unit_factors(o.input);
    factex::ObservedDataset data = factex::read_unit_csv(o.input, factors);
    if (!names.empty())
      data = factex::ObservedDataset{make_design(factors, names), std::move(data.records)};
    return factex::summarize(data);
  }

  const int factors = o.factors > 0 ? o.factors : infer_summary_factors(o.summary_path);
  factex::GroupSummary summary = factex::read_summary_csv(o.summary_path, factors);
  if (names.empty()) return summary;
  std::vector<long long> n, n1;
  for (int j = 0; j < summary.J(); ++j) {
    n.push_back(summary.n(j));
    n1.push_back(summary.n1(j));
  }
  return factex::GroupSummary(make_design(factors, names), n, n1);
}

// Variance guess for planning commands: either explicit values with a mode,
// or pilot data loaded from --input/--summary.
factex::VarianceGuess resolve_guess(const CLI::App& cmd, const json& cfg, const Options& o) {
  if (!o.input.empty() || !o.summary_path.empty())
    return factex::VarianceGuess::from_summary(load_summary(cmd, cfg, o));
  factex::VarianceGuess guess;
  guess.values = resolve_doubles(cmd, "--guess", o.guess, cfg, "guess");
  if (guess.values.empty())
    throw factex::InputError("a variance guess is required: pass --guess with "
                             "--guess-mode, or point --input/--summary at pilot data");
  guess.mode = mode_of(o.guess_mode);
  guess.pilot_arm_size = o.pilot_arm;
  return guess;
}

json json_of_guess(const factex::VarianceGuess& guess) {
  json out = {{"mode", factex::to_string(guess.mode)}, {"values", guess.values}};
  if (guess.mode == factex::VarianceGuess::Mode::pilot)
    out["pilot_arm_size"] = guess.pilot_arm_size;
  return out;
}

std::vector<std::string> effect_labels(const factex::ContrastMatrix& contrasts) {
  std::vector<std::string> labels = contrasts.labels();
  labels.erase(labels.begin());  // drop the mean column
  return labels;
}

// Arm-size bases for turning a guess into allocation shares; the mode's
// N-dependent scale factors are common to all arms and cancel.
std::vector<double> guess_weight_bases(const factex::VarianceGuess& guess) {
  if (guess.mode == factex::VarianceGuess::Mode::variances) return guess.values;
  std::vector<double> bases;
  for (double p : guess.values) {
    if (p < 0.0 || p > 1.0)
      throw factex::InputError("guess proportions must lie in [0, 1]");
    bases.push_back(p * (1.0 - p));
  }
  return bases;
}

// ---------------------------------------------------------------- commands

int run_analyze(const CLI::App& cmd, const json& cfg, Options& o) {
  const factex::GroupSummary summary = load_summary(cmd, cfg, o);
  const factex::ContrastMatrix contrasts = factex::ContrastMatrix::build(summary.design());

  std::vector<std::string> estimands = o.estimands;
  if (cmd.count("--estimand") == 0 && cfg.contains("estimand")) {
    const json& e = cfg.at("estimand");
    if (e.is_string())
      estimands = {e.get<std::string>()};
    else
      estimands = e.get<std::vector<std::string>>();
  }
  bool want_logfe = false, want_logitfe = false;
  for (const std::string& name : estimands) {
    if (name == "linear") continue;  // always emitted
    if (name == "logfe")
      want_logfe = true;
    else if (name == "logitfe")
      want_logitfe = true;
    else
      throw factex::InputError("--estimand must be linear, logfe, or logitfe, got '" +
                               name + "'");
  }

  const factex::Alternative alt = alternative_of(o.alternative);
  const factex::Correction corr = correction_of(o.correction);
  factex::InferenceTable table = factex::infer(summary, o.alpha, alt, corr, o.family_size);
  if (o.clip_intervals) {
    for (factex::EffectRow& row : table.rows) {
      row.lower = std::max(row.lower, -1.0);
      row.upper = std::min(row.upper, 1.0);
    }
  }

  json payload = {{"command", "analyze"},
                  {"alpha", o.alpha},
                  {"alternative", o.alternative},
                  {"correction", o.correction},
                  {"haldane", o.haldane},
                  {"clip_intervals", o.clip_intervals},
                  {"summary", factex::json_of(summary)},
                  {"linear", factex::json_of(table)}};

  std::ostringstream text;
  text << factex::render_text(summary) << "\n" << factex::render_text(table);

  if (want_logfe) {
    const factex::NonlinearTable t = factex::nonlinear_infer(
        summary, contrasts, factex::NonlinearKind::log_fe, o.alpha, alt, corr,
        o.family_size, o.haldane);
    payload["logfe"] = factex::json_of(t);
    text << "\n" << factex::render_text(t);
    if (!o.csv_out.empty()) factex::write_nonlinear_csv(with_tag(o.csv_out, "logfe"), t);
  }
  if (want_logitfe) {
    const factex::NonlinearTable t = factex::nonlinear_infer(
        summary, contrasts, factex::NonlinearKind::logit_fe, o.alpha, alt, corr,
        o.family_size, o.haldane);
    payload["logitfe"] = factex::json_of(t);
    text << "\n" << factex::render_text(t);
    if (!o.csv_out.empty()) factex::write_nonlinear_csv(with_tag(o.csv_out, "logitfe"), t);
  }

  if (!o.csv_out.empty()) factex::write_inference_csv(o.csv_out, table);
  if (!o.summary_out.empty()) factex::write_summary_csv(o.summary_out, summary);
  if (o.json_out != "-") std::cout << text.str();
  emit_json(payload, o.json_out);
  return 0;
}

int run_plot_data(const CLI::App& cmd, const json& cfg, Options& o) {
  const factex::GroupSummary summary = load_summary(cmd, cfg, o);
  const factex::FactorialDesign& design = summary.design();

  std::vector<factex::PlotPoint> points = factex::plot_points(summary);
  auto factor_index = [&design](const std::string& token) {
    for (int k = 0; k < design.K; ++k)
      if (design.factor_names[static_cast<std::size_t>(k)] == token) return k + 1;
    const long long k = parse_long(token, "--pair");
    if (k < 1 || k > design.K)
      throw factex::InputError("--pair: no factor named '" + token + "'");
    return static_cast<int>(k);
  };
  if (!o.pair.empty()) {
    const std::vector<std::string> tokens = split_csv(o.pair);
    if (tokens.size() != 2)
      throw factex::InputError("--pair expects two factors, e.g. --pair race,income");
    const auto extra =
        factex::plot_points_pair(summary, factor_index(tokens[0]), factor_index(tokens[1]));
    points.insert(points.end(), extra.begin(), extra.end());
  } else {
    for (int a = 1; a <= design.K; ++a)
      for (int b = a + 1; b <= design.K; ++b) {
        const auto extra = factex::plot_points_pair(summary, a, b);
        points.insert(points.end(), extra.begin(), extra.end());
      }
  }

  const json payload = {{"command", "plot-data"},
                        {"summary", factex::json_of(summary)},
                        {"points", factex::json_of(points)}};
  if (!o.csv_out.empty()) factex::write_plot_csv(o.csv_out, points);
  if (o.json_out != "-") std::cout << factex::render_text(points);
  emit_json(payload, o.json_out);
  return 0;
}

// Shared by power-curve and sample-size: effect specs as label=tau pairs.
std::vector<std::pair<std::string, double>> resolve_effects(const CLI::App& cmd,
                                                            const json& cfg,
                                                            const Options& o) {
  std::vector<std::pair<std::string, double>> out;
  auto push_token = [&out](const std::string& token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos)
      throw factex::InputError("--effects entries look like label=tau, got '" + token + "'");
    out.emplace_back(token.substr(0, eq), parse_double(token.substr(eq + 1), "--effects"));
  };
  if (cmd.count("--effects") > 0) {
    for (const std::string& token : o.effects) push_token(token);
    return out;
  }
  if (cfg.contains("effects")) {
    for (const json& entry : cfg.at("effects")) {
      if (entry.is_string()) {
        push_token(entry.get<std::string>());
      } else {
        out.emplace_back(entry.at("label").get<std::string>(),
                         entry.at("tau").get<double>());
      }
    }
  }
  return out;
}

int run_power_curve(const CLI::App& cmd, const json& cfg, Options& o) {
  const std::vector<std::string> names =
      resolve_strings(cmd, "--factor-names", o.factor_names, cfg, "factor_names");
  const factex::FactorialDesign design = make_design(o.factors, names);
  const factex::ContrastMatrix contrasts = factex::ContrastMatrix::build(design);
  const factex::VarianceGuess guess = resolve_guess(cmd, cfg, o);
  const char rule = criterion_of(o.criterion);

  const auto pairs = resolve_effects(cmd, cfg, o);
  if (pairs.empty())
    throw factex::InputError("power-curve needs at least one effect: --effects label=tau");
  const factex::Alternative alt = alternative_of(o.alternative);
  const factex::Correction corr = correction_of(o.correction);
  std::vector<factex::PowerSpec> specs;
  for (const auto& [label, tau] : pairs) {
    factex::PowerSpec spec;
    spec.ell = contrasts.column_of_label(label);
    if (spec.ell == 0) {
      std::string known;
      for (const std::string& l : effect_labels(contrasts)) known += " " + l;
      throw factex::InputError("no effect named '" + label + "'; known effects:" + known);
    }
    spec.label = label;
    spec.tau_star = tau;
    spec.alpha = o.alpha;
    spec.alternative = alt;
    spec.correction = corr;
    spec.family_size = o.family_size > 0 ? o.family_size : design.num_treatments() - 1;
    specs.push_back(spec);
  }

  std::vector<long long> grid;
  if (cmd.count("--n-grid") > 0) {
    grid = parse_grid(o.n_grid);
  } else if (cfg.contains("n_grid")) {
    const json& g = cfg.at("n_grid");
    if (g.is_string())
      grid = parse_grid(g.get<std::string>());
    else
      grid = resolve_longs(cmd, "--n-grid", o.n_grid, cfg, "n_grid");
  }
  if (grid.empty()) {
    const long long J = design.num_treatments();
    for (long long n = 2 * J; n <= 128 * J; n += J) grid.push_back(n);
  }

  const factex::PowerCurve curve =
      factex::power_curve(design, specs, guess, rule, grid, o.target_power);

  json payload = {{"command", "power-curve"},
                  {"factors", design.K},
                  {"alpha", o.alpha},
                  {"alternative", o.alternative},
                  {"correction", o.correction},
                  {"criterion", std::string(1, rule)},
                  {"guess", json_of_guess(guess)},
                  {"grid", grid},
                  {"target_power", o.target_power},
                  {"curve", factex::json_of(curve)}};

  if (!o.csv_out.empty()) {
    std::ofstream out(o.csv_out, std::ios::binary);
    if (!out) throw factex::InputError("cannot open '" + o.csv_out + "' for writing");
    out << "n,feasible";
    for (const auto& spec : curve.specs) out << "," << spec.label;
    out << ",joint\n";
    out.precision(17);
    for (const auto& point : curve.points) {
      out << point.total_n << "," << (point.feasible ? 1 : 0);
      if (point.feasible) {
        for (double beta : point.marginal) out << "," << beta;
        out << "," << point.joint;
      } else {
        for (std::size_t i = 0; i <= curve.specs.size(); ++i) out << ",";
      }
      out << "\n";
    }
  }
  if (o.json_out != "-") std::cout << factex::render_text(curve);
  emit_json(payload, o.json_out);
  return 0;
}

int run_sample_size(const CLI::App& cmd, const json& cfg, Options& o) {
  const std::vector<std::string> names =
      resolve_strings(cmd, "--factor-names", o.factor_names, cfg, "factor_names");
  const factex::FactorialDesign design = make_design(o.factors, names);
  const factex::VarianceGuess guess = resolve_guess(cmd, cfg, o);
  const char rule = criterion_of(o.criterion);
  if (cmd.count("--tau-star") == 0 && !cfg.contains("tau_star"))
    throw factex::InputError("sample-size needs --tau-star");
  if (o.target_power <= 0.0)
    throw factex::InputError("sample-size needs --target-power (the desired power)");

  // The closed form is one-sided; a two-sided request uses alpha/2, which
  // ignores the negligible far-tail rejection region.
  const factex::Alternative alt = alternative_of(o.alternative);
  const double alpha_used =
      alt == factex::Alternative::two_sided ? o.alpha / 2.0 : o.alpha;

  std::vector<double> deltas = resolve_doubles(cmd, "--deltas", o.deltas, cfg, "deltas");
  if (deltas.empty()) {
    const int J = design.num_treatments();
    if (rule == 'D') {
      deltas.assign(static_cast<std::size_t>(J), 1.0 / J);
    } else {
      std::vector<double> bases = guess_weight_bases(guess);
      double total = 0.0;
      for (double& w : bases) {
        if (rule == 'A') w = std::sqrt(w);
        total += w;
      }
      if (total <= 0.0)
        throw factex::InputError("guess weights are all zero, cannot derive arm shares");
      for (double& w : bases) w /= total;
      deltas = bases;
    }
  }

  const factex::SampleSizeResult result =
      factex::sample_size(design, o.tau_star, alpha_used, o.target_power, deltas, guess, rule);
  const factex::AllocationPlan plan =
      rule == 'D' ? factex::allocate_balanced(design, result.feasible)
                  : factex::allocate_optimal(design, rule, guess, result.feasible);

  const json payload = {{"command", "sample-size"},
                        {"factors", design.K},
                        {"tau_star", o.tau_star},
                        {"alpha", o.alpha},
                        {"alpha_used", alpha_used},
                        {"alternative", o.alternative},
                        {"target_power", o.target_power},
                        {"criterion", std::string(1, rule)},
                        {"deltas", deltas},
                        {"guess", json_of_guess(guess)},
                        {"result", factex::json_of(result, rule)},
                        {"plan", factex::json_of(plan)}};
  if (o.json_out != "-") {
    std::cout << factex::render_text(result);
    std::cout << factex::render_text(plan);
  }
  emit_json(payload, o.json_out);
  return 0;
}

int run_allocate(const CLI::App& cmd, const json& cfg, Options& o) {
  const std::vector<std::string> names =
      resolve_strings(cmd, "--factor-names", o.factor_names, cfg, "factor_names");
  const factex::FactorialDesign design = make_design(o.factors, names);
  const char rule = criterion_of(o.criterion);
  if (o.total_n <= 0) throw factex::InputError("allocate needs --n, the total sample size");

  factex::AllocationPlan plan;
  json payload = {{"command", "allocate"},
                  {"factors", design.K},
                  {"n", o.total_n},
                  {"criterion", std::string(1, rule)}};
  if (rule == 'D') {
    plan = factex::allocate_balanced(design, o.total_n);
  } else {
    const factex::VarianceGuess guess = resolve_guess(cmd, cfg, o);
    plan = factex::allocate_optimal(design, rule, guess, o.total_n);
    payload["guess"] = json_of_guess(guess);
  }
  payload["plan"] = factex::json_of(plan);
  if (o.json_out != "-") std::cout << factex::render_text(plan);
  emit_json(payload, o.json_out);
  return 0;
}

// Population plus plan for simulate and enumerate.
struct PopulationSetup {
  factex::PotentialOutcomesTable table;
  factex::AllocationPlan plan;
  std::vector<double> proportions;
};

PopulationSetup resolve_population(const CLI::App& cmd, const json& cfg, Options& o) {
  const std::vector<std::string> names =
      resolve_strings(cmd, "--factor-names", o.factor_names, cfg, "factor_names");
  const factex::FactorialDesign design = make_design(o.factors, names);
  const std::vector<double> p = resolve_doubles(cmd, "--p", o.p_list, cfg, "p");
  if (p.empty())
    throw factex::InputError("a population is required: pass --p with one proportion per "
                             "treatment and --n");
  if (o.total_n <= 0) throw factex::InputError("pass --n, the population size");
  factex::PotentialOutcomesTable table =
      factex::PotentialOutcomesTable::from_proportions(design, o.total_n, p);

  const std::vector<long long> arms = resolve_longs(cmd, "--arms", o.arms, cfg, "arms");
  factex::AllocationPlan plan;
  if (arms.empty()) {
    plan = factex::allocate_balanced(design, o.total_n);
  } else {
    long long total = 0;
    for (long long a : arms) total += a;
    if (total != o.total_n)
      throw factex::InputError("--arms sums to " + std::to_string(total) + ", but --n is " +
                               std::to_string(o.total_n));
    plan = factex::AllocationPlan{o.total_n, arms, "explicit"};
  }
  return PopulationSetup{std::move(table), std::move(plan), p};
}

int run_simulate(const CLI::App& cmd, const json& cfg, Options& o) {
  PopulationSetup setup = resolve_population(cmd, cfg, o);
  const factex::ContrastMatrix contrasts = factex::ContrastMatrix::build(setup.table.design());
  const std::vector<std::string> labels = effect_labels(contrasts);

  factex::SimulateOptions so;
  so.draws = o.draws;
  so.alpha = o.alpha;
  so.alternative = alternative_of(o.alternative);
  so.correction = correction_of(o.correction);
  so.family_size = o.family_size;
  so.seed = o.seed;
  so.parallel = !o.serial;
  if (cmd.count("--joint") > 0 || cfg.contains("joint")) {
    std::vector<std::string> joint = o.joint;
    if (cmd.count("--joint") == 0) joint = cfg.at("joint").get<std::vector<std::string>>();
    for (const std::string& label : joint) {
      const int ell = contrasts.column_of_label(label);
      if (ell == 0) throw factex::InputError("--joint: no effect named '" + label + "'");
      so.joint_effects.push_back(ell);
    }
  }

  json payload = {{"command", "simulate"},
                  {"factors", setup.table.design().K},
                  {"n", o.total_n},
                  {"p", setup.proportions},
                  {"arms", setup.plan.arm_sizes},
                  {"draws", o.draws},
                  {"populations", o.populations},
                  {"alpha", o.alpha},
                  {"alternative", o.alternative},
                  {"correction", o.correction},
                  {"seed", o.seed},
                  {"clt", factex::json_of(factex::clt_condition_report(setup.table,
                                                                       setup.plan))}};

  std::ostringstream text;
  if (o.populations <= 1) {
    const factex::SimulationReport report =
        factex::simulate(setup.table, contrasts, setup.plan, so);
    payload["report"] = factex::json_of(report, labels);
    text << factex::render_text(report, labels);
  } else {
    const factex::ProtocolResult protocol =
        factex::run_protocol(setup.table, contrasts, setup.plan, o.populations, so);
    payload["protocol"] = factex::json_of(protocol, labels);
    text << factex::render_text(protocol);
  }
  if (o.json_out != "-") std::cout << text.str();
  emit_json(payload, o.json_out);
  return 0;
}

int run_enumerate(const CLI::App& cmd, const json& cfg, Options& o) {
  PopulationSetup setup = resolve_population(cmd, cfg, o);
  const factex::ContrastMatrix contrasts = factex::ContrastMatrix::build(setup.table.design());
  const std::vector<std::string> labels = effect_labels(contrasts);

  const factex::EnumerationResult result =
      o.serial
          ? factex::enumerate_randomizations_serial(setup.table, contrasts, setup.plan, o.cap)
          : factex::enumerate_randomizations(setup.table, contrasts, setup.plan, o.cap);

  const json payload = {{"command", "enumerate"},
                        {"factors", setup.table.design().K},
                        {"n", o.total_n},
                        {"p", setup.proportions},
                        {"arms", setup.plan.arm_sizes},
                        {"cap", o.cap},
                        {"clt", factex::json_of(factex::clt_condition_report(setup.table,
                                                                             setup.plan))},
                        {"result", factex::json_of(result, labels)}};
  if (o.json_out != "-") std::cout << factex::render_text(result, labels);
  emit_json(payload, o.json_out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"2^K factorial experiments with binary outcomes: randomization-based "
               "analysis, power, and simulation"};
  app.require_subcommand(1);

  Options o;
  const auto add_common = [&o](CLI::App* cmd) {
    cmd->add_option("--config", o.config, "JSON config file; explicit flags override it");
    cmd->add_option("--json-out", o.json_out, "write a JSON report here ('-' for stdout)");
    cmd->add_option("--csv-out", o.csv_out, "write a CSV report here");
  };
  const auto add_data = [&o](CLI::App* cmd) {
    cmd->add_option("--input", o.input, "unit-level CSV: factor columns plus y, or treatment,y");
    cmd->add_option("--summary", o.summary_path, "summary CSV: treatment,n,n1");
    cmd->add_option("--factors", o.factors, "number of factors K (inferred when possible)");
    cmd->add_option("--factor-names", o.factor_names, "comma-separated factor names");
  };
  const auto add_test = [&o](CLI::App* cmd) {
    cmd->add_option("--alpha", o.alpha, "test level, default 0.05");
    cmd->add_option("--alternative", o.alternative, "two-sided, greater, or less")
        ->check(CLI::IsMember({"two-sided", "greater", "less"}));
    cmd->add_option("--correction", o.correction, "ier or bonferroni")
        ->check(CLI::IsMember({"ier", "bonferroni"}));
    cmd->add_option("--family-size", o.family_size,
                    "Bonferroni family size, default all effects");
  };
  const auto add_guess = [&o](CLI::App* cmd) {
    cmd->add_option("--guess-mode", o.guess_mode, "variances, proportions, or pilot")
        ->check(CLI::IsMember({"variances", "proportions", "pilot"}));
    cmd->add_option("--guess", o.guess, "comma-separated per-arm guess values");
    cmd->add_option("--pilot-arm", o.pilot_arm, "pilot arm size for --guess-mode pilot");
  };
  const auto add_population = [&o](CLI::App* cmd) {
    cmd->add_option("--p", o.p_list, "population proportions, one per treatment");
    cmd->add_option("--n", o.total_n, "population / sample total size");
    cmd->add_option("--arms", o.arms, "explicit arm sizes (default: balanced)");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "estimate and test factorial effects");
  add_data(analyze);
  add_test(analyze);
  add_common(analyze);
  analyze->add_option("--estimand", o.estimands,
                      "effect scales to report: linear, logfe, logitfe (linear is always on)")
      ->delimiter(',')
      ->check(CLI::IsMember({"linear", "logfe", "logitfe"}));
  analyze->add_flag("--haldane", o.haldane, "continuity-correct zero or full arms");
  analyze->add_flag("--clip-intervals", o.clip_intervals,
                    "clip linear interval ends to [-1, 1]");
  analyze->add_option("--summary-out", o.summary_out, "write the derived summary CSV here");

  CLI::App* plot = app.add_subcommand("plot-data",
                                      "averaged proportions for effect and interaction plots");
  add_data(plot);
  add_common(plot);
  plot->add_option("--pair", o.pair, "restrict to one factor pair, e.g. race,income");

  CLI::App* power = app.add_subcommand("power-curve", "analytic power over a grid of sizes");
  add_data(power);
  add_test(power);
  add_guess(power);
  add_common(power);
  power->add_option("--effects", o.effects, "effects as label=tau, e.g. race=0.1875")
      ->delimiter(',');
  power->add_option("--criterion", o.criterion, "allocation rule: d, a, or e")
      ->check(CLI::IsMember({"d", "a", "e", "D", "A", "E"}));
  power->add_option("--n-grid", o.n_grid, "sizes to evaluate: lo:hi:step or a comma list");
  power->add_option("--target-power", o.target_power,
                    "report the smallest grid size whose joint power reaches this");

  CLI::App* size = app.add_subcommand("sample-size", "closed-form one-sided sample size");
  add_data(size);
  add_guess(size);
  add_common(size);
  size->add_option("--tau-star", o.tau_star, "effect size to detect");
  size->add_option("--alpha", o.alpha, "test level, default 0.05");
  size->add_option("--alternative", o.alternative,
                   "greater, less, or two-sided (two-sided uses alpha/2)")
      ->check(CLI::IsMember({"two-sided", "greater", "less"}));
  size->add_option("--target-power", o.target_power, "desired power, must exceed 0.5");
  size->add_option("--criterion", o.criterion, "allocation rule: d, a, or e")
      ->check(CLI::IsMember({"d", "a", "e", "D", "A", "E"}));
  size->add_option("--deltas", o.deltas, "explicit arm shares (default: from the rule)");

  CLI::App* alloc = app.add_subcommand("allocate", "integer arm sizes for a total size");
  add_data(alloc);
  add_guess(alloc);
  add_common(alloc);
  alloc->add_option("--n", o.total_n, "total sample size");
  alloc->add_option("--criterion", o.criterion, "allocation rule: d, a, or e")
      ->check(CLI::IsMember({"d", "a", "e", "D", "A", "E"}));

  CLI::App* sim = app.add_subcommand("simulate",
                                     "Monte Carlo randomization of a constructed population");
  sim->add_option("--factors", o.factors, "number of factors K");
  sim->add_option("--factor-names", o.factor_names, "comma-separated factor names");
  add_population(sim);
  add_test(sim);
  add_common(sim);
  sim->add_option("--draws", o.draws, "randomizations per population, default 1000");
  sim->add_option("--populations", o.populations,
                  "permuted populations for the protocol; 1 simulates the table as built");
  sim->add_option("--seed", o.seed, "root seed; same seed, same bytes");
  sim->add_option("--joint", o.joint, "effect labels for the joint rejection rate")
      ->delimiter(',');
  sim->add_flag("--serial", o.serial, "single-threaded draws");

  CLI::App* enumerate = app.add_subcommand("enumerate",
                                           "exact randomization distribution, all assignments");
  enumerate->add_option("--factors", o.factors, "number of factors K");
  enumerate->add_option("--factor-names", o.factor_names, "comma-separated factor names");
  add_population(enumerate);
  add_common(enumerate);
  enumerate->add_option("--cap", o.cap, "largest assignment count to enumerate");
  enumerate->add_flag("--serial", o.serial, "single-threaded enumeration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    CLI::App* cmd = app.get_subcommands().front();
    const json cfg = load_config(o.config);
    apply_common_config(*cmd, cfg, o);
    if (cmd == analyze) return run_analyze(*cmd, cfg, o);
    if (cmd == plot) return run_plot_data(*cmd, cfg, o);
    if (cmd == power) return run_power_curve(*cmd, cfg, o);
    if (cmd == size) return run_sample_size(*cmd, cfg, o);
    if (cmd == alloc) return run_allocate(*cmd, cfg, o);
    if (cmd == sim) return run_simulate(*cmd, cfg, o);
    if (cmd == enumerate) return run_enumerate(*cmd, cfg, o);
    throw factex::InputError("unknown command");
  } catch (const factex::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const factex::DegeneracyError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const factex::InfeasibilityError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
