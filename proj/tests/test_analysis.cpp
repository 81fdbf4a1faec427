// Wilson intervals, two-sample tests, budget arithmetic, and both fitters.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "nlohmann/json.hpp"
#include "oracles.hpp"
#include "shelvesim/analysis.hpp"
#include "shelvesim/dynamics.hpp"
#include "shelvesim/protocol.hpp"
#include "shelvesim/rng.hpp"

using namespace shelvesim;

namespace {

// The budget rows a 200 ms campaign at stock parameters decomposes into,
// in units of probability. Values chosen so the rounded table reads
// 0.9e-4 inaccuracy / 2.4e-4 infidelity.
std::vector<BudgetRow> reference_rows() {
  return {
      {"state preparation", 0.02e-4, 0.01e-4, BudgetScope::both_states, false},
      {"storage loss (unflagged)", 0.1e-4, 0.1e-4, BudgetScope::zero_only, false},
      {"microwave transfer", 0.74e-4, 0.05e-4, BudgetScope::one_only, false},
      {"metastable decay", 0.06e-4, 0.01e-4, BudgetScope::one_only, false},
      {"finite shelving", 0.82e-4, 0.05e-4, BudgetScope::one_only, false},
      {"storage loss (heralded)", 2.9e-4, 0.2e-4, BudgetScope::zero_only, true},
  };
}

}  // namespace

TEST_CASE("wilson interval fixed points") {
  BinomialEstimate zero = wilson_interval(0, 100, 1.0);
  CHECK(zero.low == 0.0);
  CHECK(zero.high == doctest::Approx(0.009900990099009901).epsilon(1e-12));
  BinomialEstimate e = wilson_interval(13, 100000, 1.0);
  CHECK(e.low == doctest::Approx(9.860078601329453e-05).epsilon(1e-12));
  CHECK(e.high == doctest::Approx(1.713965140137052e-04).epsilon(1e-12));
  CHECK(e.p_hat == doctest::Approx(1.3e-4));
}

TEST_CASE("wilson interval agrees with the score-equation oracle") {
  Prng rng(6021);
  for (int i = 0; i < 1000; ++i) {
    std::uint64_t n = 1 + static_cast<std::uint64_t>(rng.uniform_unit() * 200000);
    std::uint64_t k = static_cast<std::uint64_t>(rng.uniform_unit() * double(n + 1));
    if (k > n) k = n;
    double z = 0.5 + rng.uniform_unit() * 2.5;
    BinomialEstimate est = wilson_interval(k, n, z);
    double lo = static_cast<double>(oracle::wilson_edge(k, n, z, false));
    double hi = static_cast<double>(oracle::wilson_edge(k, n, z, true));
    REQUIRE(std::fabs(est.low - lo) < 1e-12);
    REQUIRE(std::fabs(est.high - hi) < 1e-12);
    REQUIRE(est.low <= double(k) / double(n));
    REQUIRE(est.high >= double(k) / double(n));
  }
}

TEST_CASE("decibel conversions round-trip") {
  CHECK(to_decibels(1e-4) == doctest::Approx(-40.0));
  CHECK(from_decibels(-40.0) == doctest::Approx(1e-4));
  CHECK(from_decibels(to_decibels(8.235e-5)) == doctest::Approx(8.235e-5));
  CHECK(std::isinf(to_decibels(0.0)));
  CHECK(to_decibels(0.0) < 0.0);
}

TEST_CASE("two-sample test uses the exact conditional law at small n") {
  CHECK(binomial_two_sample_test(5, 10, 0, 10) ==
        doctest::Approx(0.016253869969040248).epsilon(1e-12));
  CHECK(binomial_two_sample_test(8, 1000, 1, 1000) ==
        doctest::Approx(0.019320577475911222).epsilon(1e-12));
  CHECK(binomial_two_sample_test(0, 100, 0, 100) == 1.0);
  // Against the independent hypergeometric enumeration.
  CHECK(binomial_two_sample_test(12, 600, 3, 700) ==
        doctest::Approx(static_cast<double>(oracle::fisher_one_sided(12, 600, 3, 700)))
            .epsilon(1e-10));
}

TEST_CASE("two-sample test is monotone in the evidence at large n") {
  double weak = binomial_two_sample_test(10, 100000, 8, 100000);
  double strong = binomial_two_sample_test(10, 100000, 1, 100000);
  CHECK(strong < weak);
  CHECK(weak <= 1.0);
  CHECK(strong > 0.0);
}

TEST_CASE("budget sums are exact and scoped") {
  ErrorBudget b = assemble_budget(reference_rows());
  CHECK(b.inaccuracy_zero == doctest::Approx(0.12e-4).epsilon(1e-12));
  CHECK(b.inaccuracy_one == doctest::Approx(1.64e-4).epsilon(1e-12));
  CHECK(b.average_inaccuracy == doctest::Approx(0.88e-4).epsilon(1e-12));
  CHECK(b.infidelity_zero == doctest::Approx(3.02e-4).epsilon(1e-12));
  CHECK(b.infidelity_one == doctest::Approx(1.64e-4).epsilon(1e-12));
  CHECK(b.average_infidelity == doctest::Approx(2.33e-4).epsilon(1e-12));
  // Quadrature with weight 1/2 for single-state rows.
  double expected_sigma = std::sqrt(
      std::pow(0.01e-4, 2) + std::pow(0.5 * 0.1e-4, 2) + std::pow(0.5 * 0.05e-4, 2) +
      std::pow(0.5 * 0.01e-4, 2) + std::pow(0.5 * 0.05e-4, 2));
  CHECK(b.average_inaccuracy_sigma == doctest::Approx(expected_sigma).epsilon(1e-12));
}

TEST_CASE("budget display uses sequential half-up rounding") {
  BudgetDisplay d = display_budget(assemble_budget(reference_rows()));
  CHECK(d.average_inaccuracy == 0.9);
  CHECK(d.average_infidelity == 2.4);
}

TEST_CASE("budget text and JSON carry the rows and the headline numbers") {
  ErrorBudget b = assemble_budget(reference_rows());
  std::string txt = budget_text(b);
  CHECK(txt.find("microwave transfer") != std::string::npos);
  CHECK(txt.find("0.9") != std::string::npos);
  CHECK(txt.find("2.4") != std::string::npos);
  nlohmann::json doc = nlohmann::json::parse(budget_json_text(b));
  CHECK(doc["rows"].size() == 6);
  CHECK(doc["average_inaccuracy"].get<double>() == doctest::Approx(0.88e-4));
}

TEST_CASE("M1 fit recovers the rate from exact-expectation scans") {
  AtomicConstants c;
  std::vector<ScanPoint> scan;
  for (double t : {0.15, 0.2, 0.25, 0.3}) {
    ScanPoint p;
    p.t = t;
    p.trials = 1000000;
    p.errors = static_cast<std::uint64_t>(
        std::llround(double(p.trials) * shelving_error_analytic(t, c)));
    scan.push_back(p);
  }
  M1Fit fit = fit_a_m1(scan, c);
  CHECK(std::fabs(fit.a_m1 / c.a_m1 - 1.0) < 0.03);
  CHECK(fit.stat_low < fit.a_m1);
  CHECK(fit.stat_high > fit.a_m1);
  CHECK(fit.total_low <= fit.stat_low);
  CHECK(fit.total_high >= fit.stat_high);
  CHECK_FALSE(fit.upper_limit_only);
  CHECK(fit.floor == doctest::Approx(fit.a_m1 * c.tau_d / (3.0 * c.zeta)));
}

TEST_CASE("single asymptotic point inverts the floor formula") {
  AtomicConstants c;
  ScanPoint p;
  p.t = 1.0;  // transient ~ e^-57, fully negligible
  p.trials = 200000;
  p.errors = 15;
  M1Fit fit = fit_a_m1(std::vector<ScanPoint>{p}, c);
  double expected = 3.0 * c.zeta * 7.5e-5 / c.tau_d;
  // The profile maximum sits on a likelihood plateau roughly 1e-11 wide in
  // the floor parameter, so the optimizer cannot do better than ~1e-7
  // relative here.
  CHECK(fit.a_m1 == doctest::Approx(expected).epsilon(1e-6));
  CHECK(fit.a_m1 / kTwoPi * 1e3 == doctest::Approx(4.098239784616305).epsilon(1e-6));
}

TEST_CASE("M1 fit handles zero observed errors as an upper limit") {
  AtomicConstants c;
  ScanPoint p;
  p.t = 1.0;
  p.trials = 50000;
  p.errors = 0;
  M1Fit fit = fit_a_m1(std::vector<ScanPoint>{p}, c);
  CHECK(fit.a_m1 == 0.0);
  CHECK(fit.upper_limit_only);
  CHECK(fit.stat_high > 0.0);
  CHECK(fit.total_low == 0.0);
}

TEST_CASE("M1 fit refuses scans with no asymptotic point") {
  AtomicConstants c;
  ScanPoint p;
  p.t = 0.01;  // exponent ~ 0.57, transient dominates
  p.trials = 100000;
  p.errors = 3000;
  CHECK_THROWS_AS(fit_a_m1(std::vector<ScanPoint>{p}, c), FitError);
}

TEST_CASE("RB fit recovers an exact exponential decay") {
  double eps = 7.4e-5;
  double p_true = 1.0 - 2.0 * eps;
  std::vector<RbPoint> points;
  for (int m : {2, 50, 200, 800}) {
    RbPoint pt;
    pt.sequence_length = m;
    pt.shots = 1000000000;  // treat survivals as exact probabilities
    pt.survivals = static_cast<std::uint64_t>(
        std::llround(double(pt.shots) * (0.5 + 0.5 * std::pow(p_true, m))));
    points.push_back(pt);
  }
  RbFit fit = fit_rb_decay(points);
  CHECK_FALSE(fit.degenerate);
  CHECK(fit.eps_per_gate == doctest::Approx(eps).epsilon(1e-4));
  CHECK(fit.amplitude == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(fit.offset == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("RB fit marks flat data as degenerate") {
  std::vector<RbPoint> points;
  for (int m : {2, 50, 200}) {
    RbPoint pt;
    pt.sequence_length = m;
    pt.shots = 1000;
    pt.survivals = 1000;
    points.push_back(pt);
  }
  RbFit fit = fit_rb_decay(points);
  CHECK(fit.degenerate);
  CHECK(fit.eps_per_gate == 0.0);
  CHECK(fit.p == 1.0);
}

TEST_CASE("RB fit needs at least three lengths") {
  std::vector<RbPoint> points(2);
  points[0].sequence_length = 2;
  points[0].shots = 100;
  points[0].survivals = 99;
  points[1].sequence_length = 100;
  points[1].shots = 100;
  points[1].survivals = 90;
  CHECK_THROWS_AS(fit_rb_decay(points), FitError);
}
