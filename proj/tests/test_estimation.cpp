#include "doctest.h"
#include "factex/design.hpp"
#include "factex/errors.hpp"
#include "factex/estimation.hpp"
#include "factex/summary.hpp"

#include <cmath>
#include <limits>
#include <vector>

using factex::Alternative;
using factex::ContrastMatrix;
using factex::Correction;
using factex::FactorialDesign;
using factex::GroupSummary;
using factex::Rat;

namespace {

// 2^3 audit study: 12 applications per treatment, callback counts by
// (race, gender, income) cell in lexicographic treatment order
GroupSummary audit_pilot() {
  FactorialDesign d(3, {"race", "gender", "income"});
  return GroupSummary(d, std::vector<long long>(8, 12), {2, 2, 2, 3, 5, 2, 5, 6});
}

}  // namespace

TEST_SUITE("estimation") {

TEST_CASE("effect estimates on the audit pilot are exact dyadic rationals") {
  auto s = audit_pilot();
  auto L = ContrastMatrix::build(s.design());
  auto tau = factex::estimate_effects_exact(s, L);
  REQUIRE(tau.size() == 7);
  CHECK(tau[0] == Rat(3, 16));    // race
  CHECK(tau[1] == Rat(5, 48));    // gender
  CHECK(tau[2] == Rat(-1, 48));   // income
  CHECK(tau[3] == Rat(1, 16));    // race:gender
  CHECK(tau[4] == Rat(-1, 16));   // race:income
  CHECK(tau[5] == Rat(5, 48));    // gender:income
  CHECK(tau[6] == Rat(1, 16));    // race:gender:income

  CHECK(factex::estimate_mean_exact(s) == Rat(9, 32));

  auto dbl = factex::estimate_effects(s, L);
  for (std::size_t i = 0; i < tau.size(); ++i)
    CHECK(dbl[i] == tau[i].to_double());
}

TEST_CASE("the shared standard error is sqrt(71/8448) on the pilot") {
  auto s = audit_pilot();
  CHECK(factex::neyman_se_squared_exact(s).str() == "71/8448");
  CHECK(factex::neyman_se(s) == doctest::Approx(0.09167527507788597089).epsilon(1e-14));
}

TEST_CASE("sample variances come out as n/(n-1) p (1-p)") {
  auto s = audit_pilot();
  CHECK(s.sample_variance_exact(0) == Rat(5, 33));    // p = 2/12
  CHECK(s.sample_variance_exact(3) == Rat(9, 44));    // p = 3/12
  CHECK(s.sample_variance_exact(4) == Rat(35, 132));  // p = 5/12
  CHECK(s.sample_variance_exact(7) == Rat(3, 11));    // p = 6/12
  CHECK(s.sample_variance(7) == doctest::Approx(3.0 / 11.0).epsilon(1e-15));
}

TEST_CASE("two-sided inference table reproduces the audit analysis") {
  auto table = factex::infer(audit_pilot(), 0.05, Alternative::two_sided,
                             Correction::ier);
  REQUIRE(table.rows.size() == 7);
  CHECK(table.family_size == 7);
  CHECK(table.se == doctest::Approx(0.09167527507788597089).epsilon(1e-14));
  CHECK(table.mean == doctest::Approx(9.0 / 32.0).epsilon(1e-15));

  const double frozen_T[] = {2.0452624749770616604, 1.1362569, -0.22725139,
                             0.68175416, -0.68175416, 1.1362569, 0.68175416};
  const double frozen_p[] = {0.040828988, 0.25584905, 0.82022827,
                             0.49539442,  0.49539442, 0.25584905, 0.49539442};
  for (std::size_t i = 0; i < 7; ++i) {
    CAPTURE(i);
    CHECK(std::fabs(table.rows[i].statistic - frozen_T[i]) <= 1e-7);
    CHECK(std::fabs(table.rows[i].p_raw - frozen_p[i]) <= 1e-7);
    CHECK(table.rows[i].p_adjusted == table.rows[i].p_raw);  // no correction
  }
  CHECK(std::fabs(table.rows[0].statistic - 2.0452624749770616604) <= 1e-12);

  CHECK(table.rows[0].label == "race");
  CHECK(table.rows[0].lower == doctest::Approx(0.00781976257454108160).epsilon(1e-10));
  CHECK(table.rows[0].upper == doctest::Approx(0.36718023742545891840).epsilon(1e-10));
  CHECK(table.rows[0].reject);        // 0.0408 < 0.05
  CHECK_FALSE(table.rows[1].reject);  // 0.2558 > 0.05
}

TEST_CASE("bonferroni multiplies raw p-values by the family size, capped at 1") {
  auto table = factex::infer(audit_pilot(), 0.05, Alternative::two_sided,
                             Correction::bonferroni);
  CHECK(table.family_size == 7);
  CHECK(std::fabs(table.rows[0].p_adjusted - 0.2858029168) <= 1e-7);
  for (std::size_t i = 1; i < 7; ++i) CHECK(table.rows[i].p_adjusted == 1.0);
  for (const auto& row : table.rows) CHECK_FALSE(row.reject);

  // intervals stay at the unadjusted level even under correction
  auto plain = factex::infer(audit_pilot(), 0.05, Alternative::two_sided,
                             Correction::ier);
  for (std::size_t i = 0; i < 7; ++i) {
    CHECK(table.rows[i].lower == plain.rows[i].lower);
    CHECK(table.rows[i].upper == plain.rows[i].upper);
  }
}

TEST_CASE("family size can be widened beyond the tested effects") {
  auto table = factex::infer(audit_pilot(), 0.05, Alternative::two_sided,
                             Correction::bonferroni, 14);
  CHECK(table.family_size == 14);
  CHECK(std::fabs(table.rows[0].p_adjusted - 14.0 * table.rows[0].p_raw) <= 1e-15);
}

TEST_CASE("one-sided alternatives leave one interval end open") {
  const double inf = std::numeric_limits<double>::infinity();

  auto greater = factex::infer(audit_pilot(), 0.05, Alternative::greater,
                               Correction::ier);
  CHECK(greater.rows[0].upper == inf);
  CHECK(greater.rows[0].lower == doctest::Approx(0.03670759128636530550).epsilon(1e-10));
  // p = 1 - Phi(T)
  CHECK(std::fabs(greater.rows[0].p_raw - 0.040828988 / 2.0) <= 1e-7);

  auto less = factex::infer(audit_pilot(), 0.05, Alternative::less,
                            Correction::ier);
  CHECK(less.rows[0].lower == -inf);
  CHECK(less.rows[0].upper == doctest::Approx(0.33829240871363469450).epsilon(1e-10));
  CHECK(std::fabs(less.rows[0].p_raw - (1.0 - 0.040828988 / 2.0)) <= 1e-7);
  CHECK(greater.rows[0].p_raw + less.rows[0].p_raw == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a single factor with two arms") {
  FactorialDesign d(1);
  GroupSummary s(d, {10, 10}, {2, 7});
  auto L = ContrastMatrix::build(d);
  auto tau = factex::estimate_effects_exact(s, L);
  REQUIRE(tau.size() == 1);
  CHECK(tau[0].str() == "1/2");
  CHECK(factex::neyman_se_squared_exact(s) == Rat(37, 900));
  CHECK(factex::neyman_se(s) == doctest::Approx(0.2027587510099406563).epsilon(1e-14));
}

TEST_CASE("two units per arm keeps the variance defined") {
  FactorialDesign d(1);
  GroupSummary s(d, {2, 2}, {1, 1});
  // s_j^2 = 2/1 * 1/2 * 1/2 = 1/2 per arm; SE^2 = (1/2)/2 + (1/2)/2 = 1/2
  CHECK(s.sample_variance_exact(0) == Rat(1, 2));
  CHECK(factex::neyman_se(s) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-15));
}

TEST_CASE("all-constant arms make the standard error zero and inference refuses") {
  FactorialDesign d(2);
  GroupSummary s(d, {4, 4, 4, 4}, {0, 0, 0, 0});
  CHECK(factex::neyman_se(s) == 0.0);
  CHECK_THROWS_AS(factex::infer(s, 0.05, Alternative::two_sided, Correction::ier),
                  factex::DegeneracyError);
  // the error message points to enumeration, the exact fallback
  try {
    factex::infer(s, 0.05, Alternative::two_sided, Correction::ier);
  } catch (const factex::DegeneracyError& e) {
    CHECK(std::string(e.what()).find("enumerate") != std::string::npos);
  }
}

TEST_CASE("undersized arms are flagged before any variance is touched") {
  FactorialDesign d(1);
  GroupSummary s(d, {1, 3}, {1, 2});
  CHECK_FALSE(s.variances_defined());
  CHECK_THROWS_AS(s.sample_variance(0), factex::DegeneracyError);
  CHECK_THROWS_AS(factex::neyman_se(s), factex::DegeneracyError);
}

TEST_CASE("alpha and count validation") {
  auto s = audit_pilot();
  CHECK_THROWS_AS(factex::infer(s, 0.0, Alternative::two_sided, Correction::ier),
                  factex::InputError);
  CHECK_THROWS_AS(factex::infer(s, 1.0, Alternative::two_sided, Correction::ier),
                  factex::InputError);
  FactorialDesign d(1);
  CHECK_THROWS_AS(GroupSummary(d, {10}, {2, 7}), factex::InputError);      // J mismatch
  CHECK_THROWS_AS(GroupSummary(d, {10, 10}, {2, 11}), factex::InputError); // n1 > n
  CHECK_THROWS_AS(GroupSummary(d, {10, -1}, {2, 0}), factex::InputError);  // negative n
}

TEST_CASE("summarize counts records and validates group sizes") {
  factex::ObservedDataset data{FactorialDesign(1),
                               {{1, 1}, {1, 0}, {2, 1}, {2, 1}, {2, 0}}};
  auto s = factex::summarize(data);
  CHECK(s.n(0) == 2);
  CHECK(s.n1(0) == 1);
  CHECK(s.n(1) == 3);
  CHECK(s.n1(1) == 2);
  CHECK(s.total() == 5);

  factex::ObservedDataset empty_arm{FactorialDesign(1), {{1, 1}, {1, 0}}};
  CHECK_THROWS_AS(factex::summarize(empty_arm), factex::InputError);

  factex::ObservedDataset single{FactorialDesign(1), {{1, 1}, {1, 0}, {2, 1}}};
  CHECK_THROWS_AS(factex::summarize(single), factex::DegeneracyError);
}

}  // TEST_SUITE
