// End-to-end checks of the factex binary: flag handling, JSON payloads,
// CSV side outputs, config precedence, and the exit-code contract. Each case
// shells out to the real executable; FACTEX_CLI_PATH and FACTEX_DATA_DIR are
// injected by the build.

#include "doctest.h"
#include "factex/csv.hpp"
#include "factex/design.hpp"
#include "factex/power.hpp"
#include "json.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

using nlohmann::json;

namespace {

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

const std::string kData = FACTEX_DATA_DIR;
const std::string kPilotSummary = kData + "/audit_pilot_summary.csv";
const std::string kPilotUnits = kData + "/audit_pilot_units.csv";

std::string scratch_dir() {
  static const std::string dir = [] {
    char tpl[] = "/tmp/factex_cli_XXXXXX";
    const char* made = mkdtemp(tpl);
    REQUIRE(made != nullptr);
    return std::string(made);
  }();
  return dir;
}

std::string scratch_path(const std::string& name) {
  static int counter = 0;
  return scratch_dir() + "/" + std::to_string(counter++) + "_" + name;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

CliResult run_cli(const std::string& args) {
  const std::string out_path = scratch_path("stdout");
  const std::string err_path = scratch_path("stderr");
  const std::string command =
      std::string(FACTEX_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(command.c_str());
  CliResult result;
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out_path);
  result.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return result;
}

json run_json(const std::string& args, int expected_code = 0) {
  const CliResult result = run_cli(args + " --json-out -");
  INFO("stderr: ", result.err);
  REQUIRE(result.code == expected_code);
  return json::parse(result.out);
}

bool contains(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

const json& effect_row(const json& table, const std::string& label) {
  for (const json& row : table.at("effects"))
    if (row.at("effect") == label) return row;
  REQUIRE(false);
  static json missing;
  return missing;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("analyze on the pilot summary emits the full JSON report") {
  const json payload = run_json("analyze --summary " + kPilotSummary +
                                " --factor-names race,gender,income");

  CHECK(payload.at("command") == "analyze");
  CHECK(payload.at("alpha") == doctest::Approx(0.05));
  CHECK(payload.at("alternative") == "two-sided");
  CHECK(payload.at("correction") == "ier");
  CHECK(payload.at("haldane") == false);
  CHECK(payload.at("clip_intervals") == false);
  CHECK_FALSE(payload.contains("logfe"));

  const json& summary = payload.at("summary");
  CHECK(summary.at("design").at("k") == 3);
  CHECK(summary.at("design").at("factors") ==
        json::array({"race", "gender", "income"}));
  CHECK(summary.at("total") == 96);
  CHECK(summary.at("treatments").size() == 8);
  CHECK(summary.at("treatments")[0].at("n") == 12);
  CHECK(summary.at("treatments")[0].at("n1") == 2);
  CHECK(summary.at("treatments")[0].at("p_exact") == "1/6");
  CHECK(summary.at("treatments")[7].at("n1") == 6);

  const json& linear = payload.at("linear");
  CHECK(linear.at("family_size") == 7);
  CHECK(linear.at("effects").size() == 7);
  CHECK(linear.at("se").get<double>() ==
        doctest::Approx(0.09167527507788597).epsilon(1e-12));
  CHECK(linear.at("mean").get<double>() == doctest::Approx(9.0 / 32).epsilon(1e-15));

  const json& race = effect_row(linear, "race");
  CHECK(race.at("index") == 1);
  CHECK(race.at("estimate_exact") == "3/16");
  CHECK(race.at("estimate").get<double>() == doctest::Approx(0.1875).epsilon(1e-15));
  CHECK(race.at("statistic").get<double>() ==
        doctest::Approx(2.0452624749770617).epsilon(1e-12));
  CHECK(race.at("p_raw").get<double>() == doctest::Approx(0.040828988).epsilon(1e-6));
  CHECK(race.at("p_adjusted").get<double>() == race.at("p_raw").get<double>());
  CHECK(race.at("reject") == true);
  CHECK(race.at("lower").get<double>() ==
        doctest::Approx(0.00781976257454108160).epsilon(1e-10));
  CHECK(race.at("upper").get<double>() ==
        doctest::Approx(0.36718023742545891840).epsilon(1e-10));

  const json& triple = effect_row(linear, "race:gender:income");
  CHECK(triple.at("estimate_exact") == "1/16");
  CHECK(triple.at("reject") == false);
}

TEST_CASE("unit rows and a matching summary produce byte-identical reports") {
  const CliResult from_units =
      run_cli("analyze --input " + kPilotUnits + " --json-out -");
  const CliResult from_summary =
      run_cli("analyze --summary " + kPilotSummary +
              " --factor-names race,gender,income --json-out -");
  REQUIRE(from_units.code == 0);
  REQUIRE(from_summary.code == 0);
  CHECK(from_units.out == from_summary.out);
}

TEST_CASE("--summary-out round-trips through the summary loader") {
  const std::string written = scratch_path("pilot_roundtrip.csv");
  const CliResult original = run_cli("analyze --input " + kPilotUnits +
                                     " --summary-out " + written + " --json-out -");
  REQUIRE(original.code == 0);

  const std::string text = slurp(written);
  CHECK(contains(text, "treatment,n,n1"));
  CHECK(contains(text, "1,12,2"));

  const CliResult reloaded = run_cli("analyze --summary " + written +
                                     " --factor-names race,gender,income --json-out -");
  REQUIRE(reloaded.code == 0);
  CHECK(reloaded.out == original.out);
}

TEST_CASE("--estimand adds the log and logit tables") {
  const json payload =
      run_json("analyze --summary " + kPilotSummary +
               " --factor-names race,gender,income --estimand logfe,logitfe");
  REQUIRE(payload.contains("logfe"));
  REQUIRE(payload.contains("logitfe"));
  CHECK(payload.at("logfe").at("kind") == "logfe");
  CHECK(payload.at("logitfe").at("kind") == "logitfe");
  CHECK(payload.at("logfe").at("continuity_correction") == false);

  const json& log_race = effect_row(payload.at("logfe"), "race");
  CHECK(log_race.at("estimate").get<double>() ==
        doctest::Approx(0.631432161077).epsilon(1e-9));
  CHECK(log_race.at("se").get<double>() ==
        doctest::Approx(0.383890816627474).epsilon(1e-9));
  CHECK(log_race.at("reject") == false);

  const json& logit_race = effect_row(payload.at("logitfe"), "race");
  CHECK(logit_race.at("estimate").get<double>() ==
        doctest::Approx(0.911135910073).epsilon(1e-9));
  CHECK(logit_race.at("se").get<double>() ==
        doctest::Approx(0.513244496726378).epsilon(1e-9));
}

TEST_CASE("--csv-out writes the inference table plus tagged nonlinear files") {
  const std::string csv = scratch_path("tables.csv");
  const CliResult result = run_cli("analyze --summary " + kPilotSummary +
                                   " --factor-names race,gender,income" +
                                   " --estimand logfe --csv-out " + csv);
  REQUIRE(result.code == 0);

  const std::string linear = slurp(csv);
  CHECK(contains(linear,
                 "effect,estimate,estimate_exact,se,statistic,lower,upper,p_raw,"
                 "p_adjusted,reject"));
  CHECK(contains(linear, "race,0.1875,3/16,"));
  CHECK(contains(linear, "race:gender:income,"));

  const std::string tagged = slurp(csv.substr(0, csv.rfind('.')) + ".logfe.csv");
  CHECK(contains(tagged, "variance_clamped"));
  CHECK(contains(tagged, "race,0.6314"));
}

TEST_CASE("plot-data averages arms into main and pair series") {
  const json payload = run_json("plot-data --summary " + kPilotSummary +
                                " --factor-names race,gender,income --pair gender,income");
  CHECK(payload.at("command") == "plot-data");
  const json& points = payload.at("points");
  REQUIRE(points.size() == 10);  // 3 factors x 2 levels + 4 pair cells

  auto point_at = [&points](const std::string& series, int x) -> const json& {
    for (const json& point : points)
      if (point.at("series") == series && point.at("x") == x) return point;
    REQUIRE(false);
    static json missing;
    return missing;
  };

  CHECK(point_at("race", 0).at("mean").get<double>() ==
        doctest::Approx(0.1875).epsilon(1e-12));
  CHECK(point_at("race", 1).at("mean").get<double>() ==
        doctest::Approx(0.375).epsilon(1e-12));
  CHECK(point_at("race", 0).at("arms") == 4);

  CHECK(point_at("gender=0:income", 0).at("mean").get<double>() ==
        doctest::Approx(7.0 / 24).epsilon(1e-12));
  CHECK(point_at("gender=0:income", 1).at("mean").get<double>() ==
        doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(point_at("gender=1:income", 0).at("mean").get<double>() ==
        doctest::Approx(7.0 / 24).epsilon(1e-12));
  CHECK(point_at("gender=1:income", 1).at("mean").get<double>() ==
        doctest::Approx(3.0 / 8).epsilon(1e-12));
  CHECK(point_at("gender=1:income", 1).at("arms") == 2);

  // without --pair, every unordered factor pair is expanded
  const json all = run_json("plot-data --summary " + kPilotSummary +
                            " --factor-names race,gender,income");
  CHECK(all.at("points").size() == 18);
}

TEST_CASE("power-curve output matches the library call it wraps") {
  const json payload = run_json("power-curve --factors 3 --summary " + kPilotSummary +
                                " --factor-names race,gender,income" +
                                " --effects race=0.1875,gender=0.1042" +
                                " --criterion d --n-grid 96,768 --target-power 0.5");
  CHECK(payload.at("command") == "power-curve");
  CHECK(payload.at("criterion") == "D");
  CHECK(payload.at("guess").at("mode") == "pilot");
  CHECK(payload.at("guess").at("pilot_arm_size") == 12);
  CHECK(payload.at("grid") == json::array({96, 768}));

  const factex::GroupSummary pilot = factex::read_summary_csv(kPilotSummary, 3);
  const factex::FactorialDesign design(3, {"race", "gender", "income"});
  const factex::VarianceGuess guess = factex::VarianceGuess::from_summary(pilot);
  const factex::ContrastMatrix contrasts = factex::ContrastMatrix::build(design);
  std::vector<factex::PowerSpec> specs(2);
  specs[0].ell = contrasts.column_of_label("race");
  specs[0].label = "race";
  specs[0].tau_star = 0.1875;
  specs[1].ell = contrasts.column_of_label("gender");
  specs[1].label = "gender";
  specs[1].tau_star = 0.1042;
  for (factex::PowerSpec& spec : specs) spec.family_size = 7;
  const factex::PowerCurve curve =
      factex::power_curve(design, specs, guess, 'D', {96, 768}, 0.5);

  const json& points = payload.at("curve").at("points");
  REQUIRE(points.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(points[i].at("feasible") == true);
    CHECK(points[i].at("power")[0].get<double>() ==
          doctest::Approx(curve.points[i].marginal[0]).epsilon(1e-12));
    CHECK(points[i].at("power")[1].get<double>() ==
          doctest::Approx(curve.points[i].marginal[1]).epsilon(1e-12));
    CHECK(points[i].at("joint").get<double>() ==
          doctest::Approx(curve.points[i].joint).epsilon(1e-12));
  }
  CHECK(payload.at("curve").at("smallest_n") == curve.smallest_n);
  // joint power is the product of the marginals: 0.53 * 0.21 at the pilot
  // size misses 0.5, so the search lands on the larger grid point
  CHECK(curve.smallest_n == 768);
}

TEST_CASE("sample-size reports the closed form and an allocation plan") {
  const json payload = run_json("sample-size --factors 3 --summary " + kPilotSummary +
                                " --tau-star 0.1 --alternative greater" +
                                " --target-power 0.9 --criterion d");
  CHECK(payload.at("command") == "sample-size");
  CHECK(payload.at("alpha_used").get<double>() == doctest::Approx(0.05));
  CHECK(payload.at("result").at("raw").get<double>() ==
        doctest::Approx(690.946774883).epsilon(1e-6));
  CHECK(payload.at("result").at("rounded") == 691);
  CHECK(payload.at("result").at("feasible") == 696);
  CHECK(payload.at("plan").at("total") == 696);
  CHECK(payload.at("plan").at("arms") == json::array({87, 87, 87, 87, 87, 87, 87, 87}));
  CHECK(payload.at("deltas").size() == 8);
  CHECK(payload.at("deltas")[0].get<double>() == doctest::Approx(0.125).epsilon(1e-15));

  // a two-sided request spends alpha/2 in the closed form
  const json two_sided = run_json("sample-size --factors 3 --summary " + kPilotSummary +
                                  " --tau-star 0.1 --alternative two-sided" +
                                  " --target-power 0.9 --criterion d");
  CHECK(two_sided.at("alpha_used").get<double>() == doctest::Approx(0.025));
  CHECK(two_sided.at("result").at("rounded").get<long long>() > 691);
}

TEST_CASE("allocate applies the requested criterion") {
  const json balanced = run_json("allocate --factors 3 --n 96 --criterion d");
  CHECK(balanced.at("criterion") == "D");
  CHECK(balanced.at("plan").at("rule") == "balanced");
  CHECK(balanced.at("plan").at("arms") ==
        json::array({12, 12, 12, 12, 12, 12, 12, 12}));
  CHECK_FALSE(balanced.contains("guess"));

  const json a_opt = run_json("allocate --factors 3 --summary " + kPilotSummary +
                              " --criterion a --n 672");
  CHECK(a_opt.at("criterion") == "A");
  CHECK(a_opt.at("plan").at("arms") ==
        json::array({74, 74, 73, 85, 97, 73, 97, 99}));
  CHECK(a_opt.at("guess").at("mode") == "pilot");
}

TEST_CASE("simulate is reproducible from the seed and reports the clt diagnostics") {
  const std::string args = "simulate --factors 1 --p 0.25,0.5 --n 16 --draws 200 --seed 42";
  const CliResult first = run_cli(args + " --json-out -");
  const CliResult second = run_cli(args + " --json-out -");
  const CliResult reseeded = run_cli(
      "simulate --factors 1 --p 0.25,0.5 --n 16 --draws 200 --seed 43 --json-out -");
  REQUIRE(first.code == 0);
  CHECK(first.out == second.out);
  CHECK(first.out != reseeded.out);

  const json payload = json::parse(first.out);
  CHECK(payload.at("command") == "simulate");
  CHECK(payload.at("arms") == json::array({8, 8}));
  CHECK(payload.at("seed") == 42);
  CHECK(payload.at("clt").at("arm_share") == json::array({0.5, 0.5}));
  CHECK(payload.at("clt").at("zero_variance") == json::array({false, false}));
  const json& report = payload.at("report");
  CHECK(report.at("draws") == 200);
  CHECK(report.at("effects").size() == 1);
  CHECK(report.at("effects")[0].at("effect") == "f1");

  // several populations switch the payload to the protocol shape
  const json protocol = run_json(
      "simulate --factors 1 --p 0.25,0.5 --n 16 --draws 100 --seed 9 --populations 3");
  REQUIRE(protocol.contains("protocol"));
  CHECK(protocol.at("protocol").at("populations") == 3);
  CHECK(protocol.at("protocol").at("joint_power").size() == 3);
  CHECK(protocol.at("protocol").at("reports").size() == 3);
}

TEST_CASE("enumerate reports the exact randomization distribution") {
  const json payload = run_json("enumerate --factors 1 --p 0.5,0.5 --n 4");
  CHECK(payload.at("command") == "enumerate");
  const json& result = payload.at("result");
  CHECK(result.at("assignments") == "6");
  CHECK(result.at("mean_tau")[0].at("exact") == "0");
  CHECK(result.at("cov_tau")[0][0].at("exact") == "1/3");
  CHECK(result.at("variances_defined") == true);

  const CliResult capped =
      run_cli("enumerate --factors 1 --p 0.5,0.5 --n 4 --cap 5 --json-out -");
  CHECK(capped.code == 4);
  CHECK(contains(capped.err, "6"));
  CHECK(contains(capped.err, "simulate"));
}

TEST_CASE("a config file fills in settings and explicit flags beat it") {
  const std::string cfg = scratch_path("analysis.json");
  spit(cfg, std::string("{\n") + "  \"summary\": \"" + kPilotSummary + "\",\n" +
                "  \"factor_names\": [\"race\", \"gender\", \"income\"],\n" +
                "  \"alpha\": 0.01,\n  \"correction\": \"bonferroni\"\n}\n");

  const json payload = run_json("analyze --config " + cfg + " --alpha 0.10");
  CHECK(payload.at("alpha").get<double>() == doctest::Approx(0.10));
  CHECK(payload.at("correction") == "bonferroni");
  CHECK(payload.at("summary").at("total") == 96);

  const json& race = effect_row(payload.at("linear"), "race");
  CHECK(race.at("p_adjusted").get<double>() ==
        doctest::Approx(0.2858029168).epsilon(1e-6));
  CHECK(race.at("reject") == false);
  // intervals stay at the unadjusted level, here 90 percent
  CHECK(race.at("lower").get<double>() ==
        doctest::Approx(0.03670759128636530550).epsilon(1e-10));
  CHECK(race.at("upper").get<double>() ==
        doctest::Approx(0.33829240871363469450).epsilon(1e-10));
}

TEST_CASE("without --json-out the commands print readable tables") {
  const CliResult result = run_cli("analyze --summary " + kPilotSummary + " --factors 3");
  REQUIRE(result.code == 0);
  CHECK(contains(result.out, "treatment"));
  CHECK(contains(result.out, "effect"));
  CHECK_FALSE(contains(result.out, "{"));

  // --json-out to a file keeps the text on stdout and parses as JSON
  const std::string path = scratch_path("report.json");
  const CliResult both = run_cli("analyze --summary " + kPilotSummary +
                                 " --factors 3 --json-out " + path);
  REQUIRE(both.code == 0);
  CHECK(contains(both.out, "effect"));
  const json payload = json::parse(slurp(path));
  CHECK(payload.at("command") == "analyze");
}

TEST_CASE("exit codes distinguish input, degeneracy, and infeasibility") {
  SUBCASE("missing input file") {
    const CliResult result =
        run_cli("analyze --summary " + scratch_dir() + "/absent.csv --factors 3");
    CHECK(result.code == 2);
    CHECK(contains(result.err, "cannot open"));
  }
  SUBCASE("constant outcomes cannot be tested") {
    const std::string path = scratch_path("constant.csv");
    spit(path, "treatment,n,n1\n1,5,0\n2,5,0\n");
    const CliResult result = run_cli("analyze --summary " + path + " --factors 1");
    CHECK(result.code == 3);
    CHECK(contains(result.err, "enumerate"));
  }
  SUBCASE("balanced allocation needs a divisible total") {
    const CliResult result = run_cli("allocate --factors 3 --n 100 --criterion d");
    CHECK(result.code == 4);
    CHECK(contains(result.err, "96"));
    CHECK(contains(result.err, "104"));
  }
  SUBCASE("population proportions must be achievable at the stated size") {
    const CliResult result =
        run_cli("simulate --factors 1 --p 0.35,0.5 --n 96 --draws 10");
    CHECK(result.code == 4);
    CHECK(contains(result.err, "80"));
    CHECK(contains(result.err, "100"));
  }
  SUBCASE("bad cells are reported with their data row") {
    const std::string path = scratch_path("bad_cell.csv");
    std::string text = "race,y\n";
    for (int i = 0; i < 16; ++i) text += (i % 2 == 0) ? "0,1\n" : "1,0\n";
    text += "2,1\n";
    spit(path, text);
    const CliResult result = run_cli("analyze --input " + path);
    CHECK(result.code == 2);
    CHECK(contains(result.err, "row 17"));
    CHECK(contains(result.err, "must be 0 or 1"));
  }
  SUBCASE("a header-only file has no records") {
    const std::string path = scratch_path("empty.csv");
    spit(path, "treatment,y\n");
    const CliResult result = run_cli("analyze --input " + path + " --factors 1");
    CHECK(result.code == 2);
    CHECK(contains(result.err, "no records"));
  }
  SUBCASE("unknown flags are parse errors") {
    const CliResult result = run_cli("analyze --bogus 1");
    CHECK(result.code == 2);
  }
  SUBCASE("a subcommand is required") {
    const CliResult result = run_cli("");
    CHECK(result.code == 2);
  }
  SUBCASE("help exits cleanly") {
    const CliResult result = run_cli("--help");
    CHECK(result.code == 0);
    CHECK(contains(result.out, "analyze"));
    CHECK(contains(result.out, "enumerate"));
  }
}

}  // TEST_SUITE
