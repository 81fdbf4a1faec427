#include "shelvesim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace shelvesim {

BinomialEstimate wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                 double z) {
  if (trials == 0) throw std::invalid_argument("wilson: trials must be >= 1");
  if (successes > trials)
    throw std::invalid_argument("wilson: successes exceed trials");
  if (!(z > 0.0)) throw std::invalid_argument("wilson: z must be > 0");
  double n = static_cast<double>(trials);
  double p_hat = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double center = (p_hat + z2 / (2.0 * n)) / denom;
  double half = z *
                std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) /
                denom;
  BinomialEstimate est;
  est.successes = successes;
  est.trials = trials;
  est.z = z;
  est.p_hat = p_hat;
  est.low = center - half;
  est.high = center + half;
  return est;
}

double to_decibels(double p) {
  if (p < 0.0) throw std::invalid_argument("decibels: probability < 0");
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(p);
}

double from_decibels(double db) { return std::pow(10.0, db / 10.0); }

namespace {

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Exact one-sided Fisher p-value: probability that sample 2 holds at most k2
// of the pooled successes, hypergeometric over the fixed margins.
double fisher_one_sided(std::uint64_t k1, std::uint64_t n1, std::uint64_t k2,
                        std::uint64_t n2) {
  double total = static_cast<double>(k1 + k2);
  double N = static_cast<double>(n1 + n2);
  double log_denom = log_binomial(N, total);
  double p = 0.0;
  for (std::uint64_t j = 0; j <= k2; ++j) {
    double other = total - static_cast<double>(j);
    if (other < 0.0 || other > static_cast<double>(n1)) continue;
    p += std::exp(log_binomial(static_cast<double>(n1), other) +
                  log_binomial(static_cast<double>(n2), static_cast<double>(j)) -
                  log_denom);
  }
  return std::min(p, 1.0);
}

}  // namespace

double binomial_two_sample_test(std::uint64_t k1, std::uint64_t n1,
                                std::uint64_t k2, std::uint64_t n2) {
  if (n1 == 0 || n2 == 0)
    throw std::invalid_argument("two-sample test: empty sample");
  if (k1 > n1 || k2 > n2)
    throw std::invalid_argument("two-sample test: successes exceed trials");
  if (k1 + k2 == 0) return 1.0;
  if (n1 <= 1000 && n2 <= 1000) return fisher_one_sided(k1, n1, k2, n2);
  double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  double pooled = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  double se = std::sqrt(pooled * (1.0 - pooled) *
                        (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  if (se == 0.0) return 0.5;  // all trials succeeded in both samples
  double z = (p1 - p2) / se;
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

ErrorBudget assemble_budget(std::vector<BudgetRow> rows) {
  for (const BudgetRow& row : rows) {
    if (!(row.value >= 0.0) || !(row.uncertainty >= 0.0))
      throw std::invalid_argument("budget: row values must be >= 0");
  }
  ErrorBudget b;
  b.rows = std::move(rows);
  double var_inacc = 0.0, var_infid = 0.0;
  for (const BudgetRow& row : b.rows) {
    bool zero = row.applies_to != BudgetScope::one_only;
    bool one = row.applies_to != BudgetScope::zero_only;
    // Weight of the row in the two-state average.
    double w = (zero && one) ? 1.0 : 0.5;
    if (zero) b.infidelity_zero += row.value;
    if (one) b.infidelity_one += row.value;
    var_infid += w * w * row.uncertainty * row.uncertainty;
    if (!row.excluded_from_inaccuracy) {
      if (zero) b.inaccuracy_zero += row.value;
      if (one) b.inaccuracy_one += row.value;
      var_inacc += w * w * row.uncertainty * row.uncertainty;
    }
  }
  b.average_inaccuracy = 0.5 * (b.inaccuracy_zero + b.inaccuracy_one);
  b.average_infidelity = 0.5 * (b.infidelity_zero + b.infidelity_one);
  b.average_inaccuracy_sigma = std::sqrt(var_inacc);
  b.average_infidelity_sigma = std::sqrt(var_infid);
  return b;
}

namespace {

// Half-up to one decimal, the rounding used in the published table.
double round_tenth(double x) { return std::floor(x * 10.0 + 0.5) / 10.0; }

}  // namespace

BudgetDisplay display_budget(const ErrorBudget& budget) {
  BudgetDisplay d;
  d.average_inaccuracy = round_tenth(budget.average_inaccuracy * 1e4);
  // The infidelity line is typeset on top of the already-rounded
  // inaccuracy, not recomputed from the raw sum.
  double heralded = (budget.average_infidelity - budget.average_inaccuracy) * 1e4;
  d.average_infidelity = round_tenth(d.average_inaccuracy + heralded);
  return d;
}

std::string budget_text(const ErrorBudget& budget) {
  std::string out;
  char line[256];
  out += "readout error budget (units of 1e-4)\n";
  out += "\n";
  std::snprintf(line, sizeof(line), "  %-28s %8s %8s  %s\n", "source", "value",
                "sigma", "applies to");
  out += line;
  for (const BudgetRow& row : budget.rows) {
    const char* scope = row.applies_to == BudgetScope::both_states ? "both"
                        : row.applies_to == BudgetScope::zero_only ? "|0>"
                                                                   : "|1>";
    std::snprintf(line, sizeof(line), "  %-28s %8.2f %8.2f  %-5s%s\n",
                  row.name.c_str(), row.value * 1e4, row.uncertainty * 1e4,
                  scope, row.excluded_from_inaccuracy ? " (heralded)" : "");
    out += line;
  }
  out += "\n";
  std::snprintf(line, sizeof(line), "  inaccuracy |0>: %.4f   |1>: %.4f\n",
                budget.inaccuracy_zero * 1e4, budget.inaccuracy_one * 1e4);
  out += line;
  std::snprintf(line, sizeof(line), "  infidelity |0>: %.4f   |1>: %.4f\n",
                budget.infidelity_zero * 1e4, budget.infidelity_one * 1e4);
  out += line;
  BudgetDisplay d = display_budget(budget);
  std::snprintf(line, sizeof(line),
                "  average inaccuracy: %.4f +/- %.4f exact, %.1f in the table\n",
                budget.average_inaccuracy * 1e4,
                budget.average_inaccuracy_sigma * 1e4, d.average_inaccuracy);
  out += line;
  std::snprintf(line, sizeof(line),
                "  average infidelity: %.4f +/- %.4f exact, %.1f in the table\n",
                budget.average_infidelity * 1e4,
                budget.average_infidelity_sigma * 1e4, d.average_infidelity);
  out += line;
  return out;
}

std::string budget_json_text(const ErrorBudget& budget) {
  nlohmann::ordered_json root;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const BudgetRow& row : budget.rows) {
    const char* scope = row.applies_to == BudgetScope::both_states ? "both"
                        : row.applies_to == BudgetScope::zero_only ? "zero"
                                                                   : "one";
    rows.push_back({{"name", row.name},
                    {"value", row.value},
                    {"sigma", row.uncertainty},
                    {"applies_to", scope},
                    {"heralded", row.excluded_from_inaccuracy}});
  }
  root["rows"] = std::move(rows);
  root["inaccuracy_zero"] = budget.inaccuracy_zero;
  root["inaccuracy_one"] = budget.inaccuracy_one;
  root["infidelity_zero"] = budget.infidelity_zero;
  root["infidelity_one"] = budget.infidelity_one;
  root["average_inaccuracy"] = budget.average_inaccuracy;
  root["average_inaccuracy_sigma"] = budget.average_inaccuracy_sigma;
  root["average_infidelity"] = budget.average_infidelity;
  root["average_infidelity_sigma"] = budget.average_infidelity_sigma;
  BudgetDisplay d = display_budget(budget);
  root["table_average_inaccuracy_1e4"] = d.average_inaccuracy;
  root["table_average_infidelity_1e4"] = d.average_infidelity;
  return root.dump(2) + "\n";
}

namespace {

struct FloorLikelihood {
  std::vector<double> transient;   // fixed per point
  std::vector<double> k, n;

  double operator()(double m) const {
    double ll = 0.0;
    for (std::size_t i = 0; i < transient.size(); ++i) {
      double p = m + transient[i];
      if (k[i] > 0.0) ll += k[i] * std::log(p);
      if (n[i] - k[i] > 0.0) ll += (n[i] - k[i]) * std::log1p(-p);
    }
    return ll;
  }
};

// Golden-section maximum of a concave function on [lo, hi].
double golden_max(const FloorLikelihood& f, double lo, double hi) {
  const double inv_phi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200; ++i) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Root of ll(x) = target on [lo, hi], where ll is monotone across the
// bracket (one side of a concave peak).
double bisect_level(const FloorLikelihood& f, double target, double lo, double hi,
                    bool rising) {
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    bool below = f(mid) < target;
    if (below == rising) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

M1Fit fit_a_m1(std::span<const ScanPoint> scan, const AtomicConstants& constants,
               const M1FitOptions& options) {
  validate(constants);
  if (scan.empty()) throw FitError("fit: no scan points");
  FloorLikelihood ll;
  double max_exponent = 0.0;
  double m_cap = 1.0;
  for (const ScanPoint& pt : scan) {
    if (pt.trials == 0) throw FitError("fit: scan point with zero trials");
    if (pt.errors > pt.trials) throw FitError("fit: errors exceed trials");
    if (!(pt.t >= 0.0)) throw FitError("fit: negative shelve time");
    double transient = (1.0 - constants.zeta / 2.0) *
                       std::exp(-pt.t * constants.zeta / (2.0 * constants.tau_d));
    ll.transient.push_back(transient);
    ll.k.push_back(static_cast<double>(pt.errors));
    ll.n.push_back(static_cast<double>(pt.trials));
    max_exponent =
        std::max(max_exponent, pt.t * constants.zeta / (2.0 * constants.tau_d));
    m_cap = std::min(m_cap, 1.0 - transient);
  }
  // Without one deep-in-the-asymptote point the fixed transient dominates
  // everywhere and the floor is not identifiable at these statistics.
  if (max_exponent < options.min_asymptotic_exponent)
    throw FitError(
        "fit: no scan point reaches the asymptotic regime (largest "
        "t*zeta/(2*tau_d) = " +
        std::to_string(max_exponent) + ", need >= " +
        std::to_string(options.min_asymptotic_exponent) + ")");

  double hi = m_cap - 1e-12;
  double m_hat = golden_max(ll, 0.0, hi);
  // Concavity means a boundary maximum shows up as the interior estimate
  // collapsing onto the edge.
  if (ll(0.0) >= ll(m_hat)) m_hat = 0.0;

  double target = ll(m_hat) - options.delta_log_likelihood;
  double m_lo = 0.0;
  if (m_hat > 0.0 && ll(0.0) < target)
    m_lo = bisect_level(ll, target, 0.0, m_hat, true);
  double m_hi = bisect_level(ll, target, m_hat, hi, false);

  double scale = 3.0 * constants.zeta / constants.tau_d;
  M1Fit fit;
  fit.floor = m_hat;
  fit.a_m1 = scale * m_hat;
  fit.stat_low = scale * m_lo;
  fit.stat_high = scale * m_hi;
  fit.upper_limit_only = m_hat == 0.0;
  double rel_sys = std::sqrt(
      (options.sigma_tau_d / constants.tau_d) * (options.sigma_tau_d / constants.tau_d) +
      (options.sigma_zeta / constants.zeta) * (options.sigma_zeta / constants.zeta));
  double sys = fit.a_m1 * rel_sys;
  double stat_down = fit.a_m1 - fit.stat_low;
  double stat_up = fit.stat_high - fit.a_m1;
  fit.total_low = std::max(0.0, fit.a_m1 - std::sqrt(stat_down * stat_down + sys * sys));
  fit.total_high = fit.a_m1 + std::sqrt(stat_up * stat_up + sys * sys);
  return fit;
}

namespace {

struct RbData {
  std::vector<double> m, s;
};

// Least-squares amplitude/offset for fixed decay p; returns SSE.
double rb_sse(const RbData& d, double p, double* amp, double* off) {
  std::size_t n = d.m.size();
  double sx = 0.0, ss = 0.0, sxx = 0.0, sxs = 0.0;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = std::pow(p, d.m[i]);
    sx += x[i];
    ss += d.s[i];
    sxx += x[i] * x[i];
    sxs += x[i] * d.s[i];
  }
  double nn = static_cast<double>(n);
  double var = sxx - sx * sx / nn;
  double a, b;
  if (var < 1e-30) {
    a = 0.0;
    b = ss / nn;
  } else {
    a = (sxs - sx * ss / nn) / var;
    b = (ss - a * sx) / nn;
  }
  double sse = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = d.s[i] - (a * x[i] + b);
    sse += r * r;
  }
  *amp = a;
  *off = b;
  return sse;
}

}  // namespace

RbFit fit_rb_decay(std::span<const RbPoint> points) {
  if (points.size() < 3)
    throw FitError("rb fit: need at least three sequence lengths");
  RbData d;
  for (const RbPoint& pt : points) {
    if (pt.shots == 0) throw FitError("rb fit: point with zero shots");
    if (pt.survivals > pt.shots) throw FitError("rb fit: survivals exceed shots");
    if (pt.sequence_length < 1) throw FitError("rb fit: length must be >= 1");
    d.m.push_back(static_cast<double>(pt.sequence_length));
    d.s.push_back(pt.survival());
  }

  // Exactly flat data carries no decay information; every p fits it with
  // zero residual, so report the degenerate answer instead of whichever p
  // the search happened to stop on.
  auto [s_min, s_max] = std::minmax_element(d.s.begin(), d.s.end());
  if (*s_min == *s_max) {
    RbFit flat;
    flat.degenerate = true;
    flat.p = 1.0;
    flat.eps_per_gate = 0.0;
    flat.amplitude = 0.0;
    flat.offset = *s_min;
    return flat;
  }

  // Coarse grid then golden refinement; SSE(p) is smooth and single-dipped
  // for decaying data.
  double best_p = 1.0 - 1e-12, best_sse = std::numeric_limits<double>::max();
  double amp = 0.0, off = 0.0;
  const int grid = 512;
  for (int i = 0; i <= grid; ++i) {
    double p = static_cast<double>(i) / grid;
    if (p >= 1.0) p = 1.0 - 1e-12;
    double a, b;
    double sse = rb_sse(d, p, &a, &b);
    if (sse < best_sse) {
      best_sse = sse;
      best_p = p;
      amp = a;
      off = b;
    }
  }
  double lo = std::max(0.0, best_p - 2.0 / grid);
  double hi = std::min(1.0 - 1e-12, best_p + 2.0 / grid);
  const double inv_phi = 0.6180339887498949;
  double c = hi - inv_phi * (hi - lo), e = lo + inv_phi * (hi - lo);
  double ac, bc, ae, be;
  double fc = rb_sse(d, c, &ac, &bc), fe = rb_sse(d, e, &ae, &be);
  for (int i = 0; i < 120; ++i) {
    if (fc < fe) {
      hi = e;
      e = c;
      fe = fc;
      c = hi - inv_phi * (hi - lo);
      fc = rb_sse(d, c, &ac, &bc);
    } else {
      lo = c;
      c = e;
      fc = fe;
      e = lo + inv_phi * (hi - lo);
      fe = rb_sse(d, e, &ae, &be);
    }
  }
  best_p = 0.5 * (lo + hi);
  best_sse = rb_sse(d, best_p, &amp, &off);

  RbFit fit;
  fit.p = best_p;
  fit.amplitude = amp;
  fit.offset = off;
  fit.eps_per_gate = (1.0 - best_p) / 2.0;
  // No resolvable decay: the grid ran to the p = 1 edge or the amplitude
  // degenerated.
  if (best_p >= 1.0 - 1e-9 || std::abs(amp) < 1e-12) {
    fit.degenerate = true;
    fit.p = 1.0;
    fit.eps_per_gate = 0.0;
    return fit;
  }

  std::size_t n = d.m.size();
  if (n > 3) {
    // Gauss-Newton covariance about the optimum: J columns (x, 1, A m p^{m-1}).
    double jtj[3][3] = {};
    for (std::size_t i = 0; i < n; ++i) {
      double x = std::pow(best_p, d.m[i]);
      double col[3] = {x, 1.0, amp * d.m[i] * std::pow(best_p, d.m[i] - 1.0)};
      for (int r = 0; r < 3; ++r)
        for (int q = 0; q < 3; ++q) jtj[r][q] += col[r] * col[q];
    }
    double det = jtj[0][0] * (jtj[1][1] * jtj[2][2] - jtj[1][2] * jtj[2][1]) -
                 jtj[0][1] * (jtj[1][0] * jtj[2][2] - jtj[1][2] * jtj[2][0]) +
                 jtj[0][2] * (jtj[1][0] * jtj[2][1] - jtj[1][1] * jtj[2][0]);
    if (std::abs(det) > 1e-30) {
      // Only the (p, p) cofactor is needed for sigma_p.
      double cof = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
      double inv_pp = cof / det;
      double sigma2 = best_sse / static_cast<double>(n - 3);
      if (inv_pp > 0.0) fit.eps_sigma = 0.5 * std::sqrt(sigma2 * inv_pp);
    }
  }
  return fit;
}

}  // namespace shelvesim
