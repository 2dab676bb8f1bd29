#include "doctest.h"
#include "factex/design.hpp"
#include "factex/errors.hpp"
#include "factex/population.hpp"
#include "factex/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

using factex::AllocationPlan;
using factex::Alternative;
using factex::ContrastMatrix;
using factex::Correction;
using factex::FactorialDesign;
using factex::PotentialOutcomesTable;
using factex::SimulateOptions;
using factex::SimulationReport;

namespace {

// heterogeneous two-arm population: 16 ones in column 1, 32 in column 2,
// stacked comonotonically, so a third of the units carry a unit effect of 1
PotentialOutcomesTable shifted_table() {
  return PotentialOutcomesTable::from_proportions(FactorialDesign(1), 48,
                                                  {1.0 / 3, 2.0 / 3});
}

bool reports_identical(const SimulationReport& a, const SimulationReport& b) {
  return a.draws == b.draws && a.degenerate_draws == b.degenerate_draws &&
         a.mean_estimate == b.mean_estimate && a.empirical_var == b.empirical_var &&
         a.reject_ier == b.reject_ier && a.reject_eer == b.reject_eer &&
         a.coverage == b.coverage && a.joint_reject_ier == b.joint_reject_ier &&
         a.joint_reject_eer == b.joint_reject_eer;
}

}  // namespace

TEST_SUITE("simulate") {

TEST_CASE("assignments respect the plan and replay by (seed, draw)") {
  AllocationPlan plan;
  plan.total = 10;
  plan.arm_sizes = {2, 3, 5};
  plan.rule = "explicit";

  auto a = factex::draw_assignment(plan, 42, 0);
  REQUIRE(a.size() == 10);
  std::vector<long long> counts(4, 0);
  for (int arm : a) {
    REQUIRE(arm >= 1);
    REQUIRE(arm <= 3);
    ++counts[static_cast<std::size_t>(arm)];
  }
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 3);
  CHECK(counts[3] == 5);

  CHECK(factex::draw_assignment(plan, 42, 0) == a);
  CHECK(factex::draw_assignment(plan, 42, 1) != a);
  CHECK(factex::draw_assignment(plan, 43, 0) != a);
}

TEST_CASE("the same options give the same report, draw for draw") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 2000;
  options.seed = 7;
  auto first = factex::simulate(table, L, plan, options);
  auto second = factex::simulate(table, L, plan, options);
  CHECK(reports_identical(first, second));
  CHECK(first.seed == 7);
  CHECK(first.draws == 2000);

  options.seed = 8;
  auto reseeded = factex::simulate(table, L, plan, options);
  CHECK_FALSE(reports_identical(first, reseeded));
}

#ifdef _OPENMP
TEST_CASE("thread count never changes the numbers") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 5000;
  options.seed = 11;

  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);
  auto parallel = factex::simulate(table, L, plan, options);
  omp_set_num_threads(saved);
  auto serial = factex::simulate_serial(table, L, plan, options);

  CHECK(reports_identical(parallel, serial));
}
#endif

TEST_CASE("estimates average to the finite-population effect") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 40000;
  options.seed = 3;
  auto report = factex::simulate(table, L, plan, options);

  const double tau = 1.0 / 3.0;
  const double var = table.covariance(L, plan)[0][0];
  // 4 sigma of Monte Carlo noise around the exact mean and variance
  CHECK(std::fabs(report.mean_estimate[0] - tau) <= 4.0 * std::sqrt(var / 40000.0));
  CHECK(report.empirical_var[0] / var > 0.92);
  CHECK(report.empirical_var[0] / var < 1.08);
  CHECK(report.degenerate_draws == 0);  // arms of 24 cannot go constant here
}

TEST_CASE("interval coverage is at least nominal under the conservative SE") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 20000;
  options.seed = 19;
  auto report = factex::simulate(table, L, plan, options);

  // 0.95 minus three sigma of simulation noise
  const double slack = 3.0 * std::sqrt(0.05 * 0.95 / 20000.0);
  CHECK(report.coverage[0] >= 0.95 - slack);
}

TEST_CASE("the test holds its size on a null population") {
  // permuting one comonotone column breaks the unit-level alignment while
  // both marginals stay at 1/2, so the true effect is exactly zero
  FactorialDesign d(1);
  auto aligned = PotentialOutcomesTable::from_proportions(d, 48, {0.5, 0.5});
  auto table = aligned.permuted(123, 0);
  auto L = ContrastMatrix::build(d);
  auto plan = factex::allocate_balanced(d, 48);
  REQUIRE(table.effects_exact(L)[0] == factex::Rat(0));

  SimulateOptions options;
  options.draws = 20000;
  options.seed = 5;
  auto report = factex::simulate(table, L, plan, options);

  const double slack = 3.0 * std::sqrt(0.05 * 0.95 / 20000.0);
  CHECK(report.reject_ier[0] <= 0.05 + slack);
  // Bonferroni with a single effect equals the uncorrected test
  CHECK(report.reject_eer[0] <= report.reject_ier[0]);
}

TEST_CASE("a singleton joint set collapses to the marginal rejection rate") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 4000;
  options.seed = 2;
  options.joint_effects = {1};
  auto report = factex::simulate(table, L, plan, options);
  CHECK(report.joint_reject_ier == report.reject_ier[0]);
  CHECK(report.joint_reject_eer == report.reject_eer[0]);
}

TEST_CASE("joint rejection needs every named effect at once") {
  FactorialDesign d(2);
  auto table = PotentialOutcomesTable::from_proportions(
      d, 64, {4.0 / 16, 4.0 / 16, 12.0 / 16, 12.0 / 16});
  auto L = ContrastMatrix::build(d);
  auto plan = factex::allocate_balanced(d, 64);

  SimulateOptions options;
  options.draws = 3000;
  options.seed = 31;
  options.joint_effects = {1, 2};
  auto report = factex::simulate(table, L, plan, options);
  // the pair can reject jointly no more often than either alone
  CHECK(report.joint_reject_ier <= report.reject_ier[0] + 1e-12);
  CHECK(report.joint_reject_ier <= report.reject_ier[1] + 1e-12);
  // per-effect EER rates are IER rates at a smaller alpha
  for (std::size_t e = 0; e < 3; ++e)
    CHECK(report.reject_eer[e] <= report.reject_ier[e] + 1e-12);
}

TEST_CASE("draws with a constant arm are excluded from test denominators") {
  FactorialDesign d(1);
  auto table = PotentialOutcomesTable::from_proportions(d, 4, {0.5, 0.5});
  auto L = ContrastMatrix::build(d);
  auto plan = factex::allocate_balanced(d, 4);

  SimulateOptions options;
  options.draws = 3000;
  options.seed = 17;
  auto report = factex::simulate(table, L, plan, options);

  // identical columns (1,1,0,0): 2 of the 6 equiprobable assignments make
  // both arms constant, so about a third of draws are degenerate
  const double frac =
      static_cast<double>(report.degenerate_draws) / static_cast<double>(report.draws);
  CHECK(frac > 0.25);
  CHECK(frac < 0.42);
  CHECK(report.degenerate_draws < report.draws);
  // estimates still average over everything; the true effect is zero
  CHECK(std::fabs(report.mean_estimate[0]) < 0.05);
}

TEST_CASE("one-sided simulation matches the alternative's direction") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions greater;
  greater.draws = 5000;
  greater.seed = 23;
  greater.alternative = Alternative::greater;
  auto up = factex::simulate(table, L, plan, greater);

  SimulateOptions less = greater;
  less.alternative = Alternative::less;
  auto down = factex::simulate(table, L, plan, less);

  // the true effect is +1/3: the greater-test fires, the less-test never does
  CHECK(up.reject_ier[0] > 0.5);
  CHECK(down.reject_ier[0] < 0.01);
}

TEST_CASE("simulation options are validated") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 0;
  CHECK_THROWS_AS(factex::simulate(table, L, plan, options), factex::InputError);
  options.draws = 10;
  options.alpha = 0.0;
  CHECK_THROWS_AS(factex::simulate(table, L, plan, options), factex::InputError);
  options.alpha = 0.05;
  options.joint_effects = {2};
  CHECK_THROWS_AS(factex::simulate(table, L, plan, options), factex::InputError);
  options.joint_effects.clear();

  auto wrong = factex::allocate_balanced(table.design(), 50);
  CHECK_THROWS_AS(factex::simulate(table, L, wrong, options), factex::InputError);
}

TEST_CASE("the robustness protocol is reproducible and self-consistent") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 1000;
  options.seed = 77;

  auto result = factex::run_protocol(table, L, plan, 5, options);
  REQUIRE(result.reports.size() == 5);
  REQUIRE(result.joint_power.size() == 5);

  double sum = 0.0, least = 1.0;
  for (std::size_t p = 0; p < 5; ++p) {
    CHECK(result.joint_power[p] == result.reports[p].joint_rate(options.correction));
    sum += result.joint_power[p];
    least = std::min(least, result.joint_power[p]);
  }
  CHECK(result.mean_joint_power == doctest::Approx(sum / 5.0).epsilon(1e-15));
  CHECK(result.min_joint_power == doctest::Approx(least).epsilon(1e-15));

  auto replay = factex::run_protocol(table, L, plan, 5, options);
  for (std::size_t p = 0; p < 5; ++p)
    CHECK(reports_identical(result.reports[p], replay.reports[p]));

  // populations differ from each other: the permutations really happened
  bool some_difference = false;
  for (std::size_t p = 1; p < 5; ++p)
    if (!reports_identical(result.reports[0], result.reports[p])) some_difference = true;
  CHECK(some_difference);

  CHECK_THROWS_AS(factex::run_protocol(table, L, plan, 0, options), factex::InputError);
}

TEST_CASE("protocol joint power tracks the eer rate when asked to") {
  auto table = shifted_table();
  auto L = ContrastMatrix::build(table.design());
  auto plan = factex::allocate_balanced(table.design(), 48);

  SimulateOptions options;
  options.draws = 800;
  options.seed = 13;
  options.correction = Correction::bonferroni;
  auto result = factex::run_protocol(table, L, plan, 3, options);
  for (std::size_t p = 0; p < 3; ++p)
    CHECK(result.joint_power[p] == result.reports[p].joint_reject_eer);
}

}  // TEST_SUITE
