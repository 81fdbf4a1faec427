#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shelvesim/atomic_model.hpp"
#include "shelvesim/protocol.hpp"

namespace shelvesim {

// Wilson score interval for a binomial proportion. z is the normal quantile
// (z = 1 for a 68% interval). Throws std::invalid_argument if k > n, n = 0,
// or z <= 0. Valid at k = 0 and k = n.
struct BinomialEstimate {
  std::uint64_t successes = 0;
  std::uint64_t trials = 0;
  double z = 1.0;
  double p_hat = 0.0;
  double low = 0.0;
  double high = 0.0;
};

BinomialEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                 double z = 1.0);

// Probability to decibels: 10 log10(p). p = 0 maps to -infinity.
double to_decibels(double p);
double from_decibels(double db);

// One-sided test that sample 2 has a lower underlying rate than sample 1:
// p-value for observing at most k2 given the pooled evidence. Uses the exact
// conditional (hypergeometric) distribution when both trial counts are
// <= 1000 and a pooled normal approximation above. Returns 1 when the data
// carry no evidence (k2 at or above proportional share with zero pooled
// successes handled as p = 1).
double binomial_two_sample_test(std::uint64_t k1, std::uint64_t n1,
                                std::uint64_t k2, std::uint64_t n2);

// A named source of readout error. `applies_to` books the row under one or
// both prepared states; rows flagged `excluded_from_inaccuracy` (heralded
// storage loss) count toward infidelity only.
enum class BudgetScope { both_states, zero_only, one_only };

struct BudgetRow {
  std::string name;
  double value = 0.0;        // probability per shot of the affected state
  double uncertainty = 0.0;  // one sigma, same units
  BudgetScope applies_to = BudgetScope::both_states;
  bool excluded_from_inaccuracy = false;
};

struct ErrorBudget {
  std::vector<BudgetRow> rows;
  double inaccuracy_zero = 0.0, inaccuracy_one = 0.0;
  double infidelity_zero = 0.0, infidelity_one = 0.0;
  double average_inaccuracy = 0.0, average_infidelity = 0.0;
  double average_inaccuracy_sigma = 0.0, average_infidelity_sigma = 0.0;
};

// Exact sums; uncertainties combine in quadrature with weight 1/2 for
// single-state rows.
ErrorBudget assemble_budget(std::vector<BudgetRow> rows);

// Display values in units of 1e-4, rounded half-up to one decimal with the
// infidelity built on top of the rounded inaccuracy (matching how such
// tables are typically typeset): rows -> 0.9 and 0.9 + 1.45 -> 2.4.
struct BudgetDisplay {
  double average_inaccuracy = 0.0;  // units of 1e-4
  double average_infidelity = 0.0;
};
BudgetDisplay display_budget(const ErrorBudget& budget);

std::string budget_text(const ErrorBudget& budget);
std::string budget_json_text(const ErrorBudget& budget);

// Maximum-likelihood extraction of the M1 decay rate from shelving-scan
// data. The transient term is fixed by (zeta, tau_d); only the floor
// tau_d a / (3 zeta) is free. Profile-likelihood interval at
// delta_log_likelihood (1/2 for one sigma, 1.92 for 95%); tau_d and zeta
// systematics enter in quadrature on top of the statistical interval.
struct M1FitOptions {
  double delta_log_likelihood = 0.5;
  double sigma_tau_d = 0.3e-3;
  double sigma_zeta = 0.004;
  // At least one scan point must satisfy t zeta / (2 tau_d) >= this, or the
  // floor is swamped by the transient and the fit refuses to run.
  double min_asymptotic_exponent = 5.0;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct M1Fit {
  double a_m1 = 0.0;            // rad/s
  double stat_low = 0.0, stat_high = 0.0;
  double total_low = 0.0, total_high = 0.0;  // with systematics folded in
  double floor = 0.0;           // fitted error floor, probability units
  bool upper_limit_only = false;  // zero errors observed at asymptotic times
};

M1Fit fit_a_m1(std::span<const ScanPoint> scan, const AtomicConstants& constants,
               const M1FitOptions& options = {});

// Least-squares fit of survival = A p^m + B over RB points; the flip error
// per gate is (1 - p) / 2. `degenerate` marks data with no resolvable decay
// (p pinned at 1, eps 0).
struct RbFit {
  double eps_per_gate = 0.0;
  double eps_sigma = 0.0;
  double p = 1.0;
  double amplitude = 0.0;
  double offset = 1.0;
  bool degenerate = false;
};

RbFit fit_rb_decay(std::span<const RbPoint> points);

}  // namespace shelvesim
