// Command-line front end: runs SPAM campaigns, shelving-duration scans,
// decay-rate fits, randomized benchmarking, error budgets, and two-ion
// discrimination from one INI config, writing deterministic artifacts plus a
// manifest that fingerprints every file.
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure,
// 4 selftest failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlohmann/json.hpp"
#include "shelvesim/analysis.hpp"
#include "shelvesim/config.hpp"
#include "shelvesim/dynamics.hpp"
#include "shelvesim/photon_stats.hpp"
#include "shelvesim/protocol.hpp"

namespace {

using namespace shelvesim;
using nlohmann::ordered_json;

std::string format_g(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

struct CommonOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shots;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
};

void add_common_options(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config_path, "INI configuration file");
  cmd->add_option("-s,--seed", opts.seed, "Override run.seed");
  cmd->add_option("-n,--shots", opts.shots,
                  "Override the per-state / per-point shot count");
  cmd->add_option("-o,--out", opts.out_dir, "Override run.out_dir");
  cmd->add_option("-t,--threads", opts.threads, "Override run.threads");
}

RunConfig resolve_config(const CommonOptions& opts) {
  RunConfig config;
  if (!opts.config_path.empty()) config = load_config_file(opts.config_path);
  apply_env_overrides(config);
  if (opts.seed) config.run.seed = *opts.seed;
  if (opts.out_dir) config.run.out_dir = *opts.out_dir;
  if (opts.threads) config.run.threads = *opts.threads;
  if (opts.shots) {
    config.run.shots_per_state = *opts.shots;
    config.scan.shots_per_point = *opts.shots;
  }
  validate_config(config);
  return config;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::string out_dir) : out_dir_(std::move(out_dir)) {
    std::filesystem::create_directories(out_dir_);
  }

  void write(const std::string& name, const std::string& content) {
    std::filesystem::path path = std::filesystem::path(out_dir_) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write artifact " + path.string());
    out.write(content.data(),
              static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write on " + path.string());
    entries_.push_back({name, content.size(), fnv1a64(content)});
  }

  // The manifest digests every earlier artifact, so it must come last.
  void finish(const RunConfig& config, std::string_view subcommand) {
    write("manifest.json", manifest_json_text(config, subcommand, entries_));
    std::printf("wrote %zu artifacts to %s\n", entries_.size(), out_dir_.c_str());
  }

 private:
  std::string out_dir_;
  std::vector<ArtifactEntry> entries_;
};

ordered_json wilson_json(const BinomialEstimate& est) {
  return {{"successes", est.successes}, {"trials", est.trials},
          {"p_hat", est.p_hat},         {"low", est.low},
          {"high", est.high},           {"z", est.z}};
}

// ---------------------------------------------------------------------------
// spam

int run_spam(const CommonOptions& opts) {
  RunConfig cfg = resolve_config(opts);
  ArtifactWriter artifacts(cfg.run.out_dir);

  bool pinned = cfg.thresholds.detect_cutoff >= 0 && cfg.thresholds.doppler_cutoff >= 1;
  CalibrationResult cal;
  std::vector<ShotRecord> records;
  if (pinned) {
    cal.thresholds.detect_cutoff = cfg.thresholds.detect_cutoff;
    cal.thresholds.doppler_cutoff = cfg.thresholds.doppler_cutoff;
    cal.thresholds.detect_error_bound = cfg.thresholds.detect_error_bound;
    cal.thresholds.doppler_error_bound = cfg.thresholds.doppler_error_bound;
    cal.parameter_hash = fnv1a64("pinned:" +
                                 std::to_string(cal.thresholds.detect_cutoff) + ":" +
                                 std::to_string(cal.thresholds.doppler_cutoff));
    records = run_spam_campaign(cfg.protocol, cfg.counts, cal.thresholds,
                                cfg.constants, cfg.lasers, cfg.run.shots_per_state,
                                cfg.run.seed, cfg.run.threads, 0);
  } else {
    BlindedCampaign blinded = run_blinded_spam(
        cfg.protocol, cfg.counts, cfg.constants, cfg.lasers,
        cfg.run.calibration_shots, cfg.run.shots_per_state, cfg.run.seed,
        cfg.thresholds.detect_error_bound, cfg.thresholds.doppler_error_bound,
        cfg.run.threads);
    cal = blinded.calibration;
    records = std::move(blinded.records);
  }

  CampaignSummary sum = summarize_campaign(records);
  BinomialEstimate w0 = wilson_interval(sum.errors_zero_unflagged, sum.unflagged_zero());
  BinomialEstimate w1 = wilson_interval(sum.errors_one_unflagged, sum.unflagged_one());
  BinomialEstimate wavg = wilson_interval(
      sum.errors_zero_unflagged + sum.errors_one_unflagged,
      sum.unflagged_zero() + sum.unflagged_one());

  std::vector<int> counts_zero, counts_one;
  for (const ShotRecord& r : records)
    (r.prepared == PreparedState::zero ? counts_zero : counts_one)
        .push_back(r.detect_counts);
  Histogram hz = build_histogram(counts_zero, "prepared_zero");
  Histogram ho = build_histogram(counts_one, "prepared_one");
  std::vector<Histogram> hists = {hz, ho};

  ordered_json report;
  report["shots_per_state"] = cfg.run.shots_per_state;
  report["thresholds"] = {{"detect_cutoff", cal.thresholds.detect_cutoff},
                          {"doppler_cutoff", cal.thresholds.doppler_cutoff}};
  report["flagged_zero"] = sum.flagged_zero;
  report["flagged_one"] = sum.flagged_one;
  report["restarts"] = sum.restarts;
  report["errors_zero_unflagged"] = sum.errors_zero_unflagged;
  report["errors_one_unflagged"] = sum.errors_one_unflagged;
  report["inaccuracy_zero"] = sum.inaccuracy_zero();
  report["inaccuracy_one"] = sum.inaccuracy_one();
  report["average_inaccuracy"] = sum.average_inaccuracy();
  report["average_inaccuracy_db"] = to_decibels(sum.average_inaccuracy());
  report["wilson_zero"] = wilson_json(w0);
  report["wilson_one"] = wilson_json(w1);
  report["wilson_pooled"] = wilson_json(wavg);
  report["infidelity_zero"] = sum.infidelity_zero();
  report["infidelity_one"] = sum.infidelity_one();
  report["average_infidelity"] = sum.average_infidelity();

  std::string txt;
  txt += "single-ion SPAM campaign\n";
  txt += "  shots per state:      " + std::to_string(cfg.run.shots_per_state) + "\n";
  txt += "  detect cutoff:        " + std::to_string(cal.thresholds.detect_cutoff) + "\n";
  txt += "  doppler cutoff:       " + std::to_string(cal.thresholds.doppler_cutoff) + "\n";
  txt += "  restarts:             " + std::to_string(sum.restarts) + "\n";
  txt += "  flagged |0>/|1>:      " + std::to_string(sum.flagged_zero) + "/" +
         std::to_string(sum.flagged_one) + "\n";
  txt += "  inaccuracy |0>:       " + format_g(sum.inaccuracy_zero()) + "  [" +
         format_g(w0.low) + ", " + format_g(w0.high) + "]\n";
  txt += "  inaccuracy |1>:       " + format_g(sum.inaccuracy_one()) + "  [" +
         format_g(w1.low) + ", " + format_g(w1.high) + "]\n";
  txt += "  average inaccuracy:   " + format_g(sum.average_inaccuracy()) + "  (" +
         format_g(to_decibels(sum.average_inaccuracy())) + " dB)\n";
  txt += "  average infidelity:   " + format_g(sum.average_infidelity()) + "\n";

  artifacts.write("records.csv", records_csv(records));
  artifacts.write("records.jsonl", records_jsonl(records));
  artifacts.write("histograms.csv", histograms_csv(hists));
  artifacts.write("histograms.json", histograms_json_text(hists));
  artifacts.write("thresholds.json", thresholds_json_text(cal));
  artifacts.write("report.json", report.dump(2) + "\n");
  artifacts.write("report.txt", txt);
  artifacts.finish(cfg, "spam");
  std::printf("%s", txt.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// scan

Thresholds model_thresholds(const RunConfig& cfg) {
  Thresholds th;
  th.detect_error_bound = cfg.thresholds.detect_error_bound;
  th.doppler_error_bound = cfg.thresholds.doppler_error_bound;
  th.detect_cutoff =
      cfg.thresholds.detect_cutoff >= 0
          ? cfg.thresholds.detect_cutoff
          : choose_detection_threshold(cfg.counts.dark_mean(),
                                       cfg.thresholds.detect_error_bound);
  th.doppler_cutoff =
      cfg.thresholds.doppler_cutoff >= 1
          ? cfg.thresholds.doppler_cutoff
          : choose_doppler_threshold(cfg.counts.bright_mean(),
                                     cfg.thresholds.doppler_error_bound);
  return th;
}

std::string scan_csv(const std::vector<ScanPoint>& points, const RunConfig& cfg) {
  std::string out =
      "t_s,scheme,trials,errors,error_rate,wilson_low,wilson_high,"
      "model_total,model_floor,model_transient\n";
  bool standard = cfg.protocol.repump_scheme == RepumpScheme::nm935;
  for (const ScanPoint& p : points) {
    BinomialEstimate w = wilson_interval(p.errors, p.trials);
    double transient = shelving_error_transient(p.t, cfg.constants);
    // The F-selective scheme closes the leak channel, so its model curve
    // has no floor term.
    double floor = standard ? shelving_error_floor(cfg.constants) : 0.0;
    out += format_g(p.t) + "," + std::string(to_string(cfg.protocol.repump_scheme)) +
           "," + std::to_string(p.trials) + "," + std::to_string(p.errors) + "," +
           format_g(p.error_rate()) + "," + format_g(w.low) + "," +
           format_g(w.high) + "," + format_g(floor + transient) + "," +
           format_g(floor) + "," + format_g(transient) + "\n";
  }
  return out;
}

int run_scan(const CommonOptions& opts) {
  RunConfig cfg = resolve_config(opts);
  if (cfg.scan.times.empty())
    throw ConfigError("scan: scan.times must be set (comma-separated seconds)");
  ArtifactWriter artifacts(cfg.run.out_dir);
  Thresholds th = model_thresholds(cfg);
  std::vector<ScanPoint> points = run_shelving_scan(
      cfg.scan.times, cfg.scan.shots_per_point, cfg.protocol, cfg.counts, th,
      cfg.constants, cfg.lasers, cfg.run.seed, cfg.run.threads);

  std::string txt = "shelving-duration scan (repump scheme " +
                    std::string(to_string(cfg.protocol.repump_scheme)) + ")\n";
  for (const ScanPoint& p : points) {
    txt += "  t = " + format_g(p.t) + " s: " + std::to_string(p.errors) + "/" +
           std::to_string(p.trials) + " errors, rate " + format_g(p.error_rate()) +
           ", model " +
           format_g(cfg.protocol.repump_scheme == RepumpScheme::nm935
                        ? shelving_error_analytic(p.t, cfg.constants)
                        : shelving_error_transient(p.t, cfg.constants)) +
           "\n";
  }
  artifacts.write("scan.csv", scan_csv(points, cfg));
  artifacts.write("scan.txt", txt);
  artifacts.finish(cfg, "scan");
  std::printf("%s", txt.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// fit

std::vector<ScanPoint> read_scan_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("fit: cannot open scan file '" + path + "'");
  std::vector<ScanPoint> points;
  std::string line;
  bool first = true;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (first) {  // header
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() < 4)
      throw ConfigError("fit: " + path + ":" + std::to_string(line_no) +
                        ": expected at least 4 columns");
    ScanPoint p;
    try {
      p.t = std::stod(cols[0]);
      p.trials = std::stoull(cols[2]);
      p.errors = std::stoull(cols[3]);
    } catch (const std::exception&) {
      throw ConfigError("fit: " + path + ":" + std::to_string(line_no) +
                        ": malformed numeric field");
    }
    points.push_back(p);
  }
  if (points.empty()) throw ConfigError("fit: no scan points in " + path);
  return points;
}

int run_fit(const CommonOptions& opts, const std::string& scan_path,
            double delta_ll) {
  RunConfig cfg = resolve_config(opts);
  ArtifactWriter artifacts(cfg.run.out_dir);
  std::vector<ScanPoint> points = read_scan_csv(scan_path);
  M1FitOptions fit_opts;
  fit_opts.delta_log_likelihood = delta_ll;
  M1Fit fit = fit_a_m1(points, cfg.constants, fit_opts);

  auto mhz = [](double rad_per_s) { return rad_per_s / kTwoPi * 1e3; };
  ordered_json report;
  report["a_m1_rad_per_s"] = fit.a_m1;
  report["a_m1_mhz"] = mhz(fit.a_m1);
  report["stat_low_mhz"] = mhz(fit.stat_low);
  report["stat_high_mhz"] = mhz(fit.stat_high);
  report["total_low_mhz"] = mhz(fit.total_low);
  report["total_high_mhz"] = mhz(fit.total_high);
  report["error_floor"] = fit.floor;
  report["upper_limit_only"] = fit.upper_limit_only;
  report["delta_log_likelihood"] = delta_ll;

  std::string txt = "M1 leak rate fit\n";
  txt += "  A = 2 pi x " + format_g(mhz(fit.a_m1)) + " mHz\n";
  txt += "  statistical interval: [" + format_g(mhz(fit.stat_low)) + ", " +
         format_g(mhz(fit.stat_high)) + "] mHz (delta logL " + format_g(delta_ll) +
         ")\n";
  txt += "  with systematics:     [" + format_g(mhz(fit.total_low)) + ", " +
         format_g(mhz(fit.total_high)) + "] mHz\n";
  txt += "  error floor:          " + format_g(fit.floor) + "\n";
  if (fit.upper_limit_only) txt += "  note: zero errors observed; upper limit only\n";

  artifacts.write("fit.json", report.dump(2) + "\n");
  artifacts.write("fit.txt", txt);
  artifacts.finish(cfg, "fit");
  std::printf("%s", txt.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// rb

int run_rb(const CommonOptions& opts) {
  RunConfig cfg = resolve_config(opts);
  ArtifactWriter artifacts(cfg.run.out_dir);

  // Readout channel predicted by the campaign model at the configured
  // protocol settings.
  ReadoutChannel readout;
  readout.eps_zero_as_one = cfg.protocol.eps_prep0;
  readout.eps_one_as_zero = cfg.protocol.eps_prep0 + cfg.protocol.eps_pi +
                            shelving_error_analytic(cfg.protocol.shelve_time,
                                                    cfg.constants);
  std::vector<RbPoint> points = run_randomized_benchmarking(
      cfg.rb.lengths, cfg.rb.sequences_per_length, cfg.rb.shots_per_sequence,
      cfg.rb.eps_per_gate, readout, cfg.run.seed);
  RbFit fit = fit_rb_decay(points);

  std::string csv = "length,shots,survivals,survival\n";
  for (const RbPoint& p : points)
    csv += std::to_string(p.sequence_length) + "," + std::to_string(p.shots) +
           "," + std::to_string(p.survivals) + "," + format_g(p.survival()) + "\n";

  ordered_json report;
  report["eps_per_gate_true"] = cfg.rb.eps_per_gate;
  report["eps_per_gate_fit"] = fit.eps_per_gate;
  report["eps_sigma"] = fit.eps_sigma;
  report["p"] = fit.p;
  report["amplitude"] = fit.amplitude;
  report["offset"] = fit.offset;
  report["degenerate"] = fit.degenerate;
  report["readout"] = {{"eps_zero_as_one", readout.eps_zero_as_one},
                       {"eps_one_as_zero", readout.eps_one_as_zero}};

  std::string txt = "randomized benchmarking\n";
  for (const RbPoint& p : points)
    txt += "  m = " + std::to_string(p.sequence_length) + ": survival " +
           format_g(p.survival()) + "\n";
  txt += "  fit eps/gate = " + format_g(fit.eps_per_gate) + " +/- " +
         format_g(fit.eps_sigma) + " (true " + format_g(cfg.rb.eps_per_gate) +
         ")\n";
  if (fit.degenerate) txt += "  note: decay not resolvable from these points\n";

  artifacts.write("rb.csv", csv);
  artifacts.write("rb_report.json", report.dump(2) + "\n");
  artifacts.write("rb_report.txt", txt);
  artifacts.finish(cfg, "rb");
  std::printf("%s", txt.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// budget

BudgetScope scope_from_string(const std::string& s, const std::string& where) {
  if (s == "both") return BudgetScope::both_states;
  if (s == "zero") return BudgetScope::zero_only;
  if (s == "one") return BudgetScope::one_only;
  throw ConfigError(where + ": applies_to must be both, zero, or one");
}

std::vector<BudgetRow> read_budget_rows(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("budget: cannot open components file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& ex) {
    throw ConfigError("budget: " + path + ": " + ex.what());
  }
  if (!doc.is_array()) throw ConfigError("budget: " + path + ": expected an array");
  std::vector<BudgetRow> rows;
  for (const auto& item : doc) {
    BudgetRow row;
    row.name = item.at("name").get<std::string>();
    row.value = item.at("value").get<double>();
    row.uncertainty = item.value("sigma", 0.0);
    row.applies_to = scope_from_string(item.value("applies_to", "both"), path);
    row.excluded_from_inaccuracy = item.value("heralded", false);
    rows.push_back(row);
  }
  return rows;
}

// Rows predicted by the model at the configured protocol settings. Storage
// rows follow the usual bookkeeping: booked under |0> with the heralded
// part excluded from inaccuracy.
std::vector<BudgetRow> model_budget_rows(const RunConfig& cfg) {
  std::vector<BudgetRow> rows;
  rows.push_back({"state preparation", cfg.protocol.eps_prep0, 0.0,
                  BudgetScope::both_states, false});
  rows.push_back({"microwave transfer", cfg.protocol.eps_pi, 0.0,
                  BudgetScope::one_only, false});
  rows.push_back({"shelving transient",
                  shelving_error_transient(cfg.protocol.shelve_time, cfg.constants),
                  0.0, BudgetScope::one_only, false});
  rows.push_back({"metastable leak floor", shelving_error_floor(cfg.constants),
                  0.0, BudgetScope::one_only, false});
  Thresholds th = model_thresholds(cfg);
  rows.push_back({"detection dark tail",
                  poisson_upper_tail(th.detect_cutoff, cfg.counts.dark_mean()),
                  0.0, BudgetScope::one_only, false});
  rows.push_back({"storage loss (heralded)", cfg.protocol.p_storage, 0.0,
                  BudgetScope::zero_only, true});
  return rows;
}

int run_budget(const CommonOptions& opts, const std::string& components_path) {
  RunConfig cfg = resolve_config(opts);
  ArtifactWriter artifacts(cfg.run.out_dir);
  std::vector<BudgetRow> rows = components_path.empty()
                                    ? model_budget_rows(cfg)
                                    : read_budget_rows(components_path);
  ErrorBudget budget = assemble_budget(std::move(rows));
  artifacts.write("budget.json", budget_json_text(budget));
  artifacts.write("budget.txt", budget_text(budget));
  artifacts.finish(cfg, "budget");
  std::printf("%s", budget_text(budget).c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// two-ion

int run_two_ion(const CommonOptions& opts) {
  RunConfig cfg = resolve_config(opts);
  ArtifactWriter artifacts(cfg.run.out_dir);
  TwoIonParams params;
  params.detect_bins_per_trial = cfg.two_ion.detect_bins_per_trial;
  params.storage_rate_per_trial = cfg.two_ion.storage_rate_per_trial;
  params.check_error_bound = cfg.thresholds.doppler_error_bound;
  TwoIonResult res = run_two_ion_discrimination(cfg.two_ion.detection_bins,
                                                cfg.counts, params, cfg.run.seed);

  std::uint64_t scored = res.trials - res.vetoed_trials;
  ordered_json report;
  report["trials"] = res.trials;
  report["vetoed_trials"] = res.vetoed_trials;
  report["detection_bins"] = res.detection_bins;
  report["misclassified"] = res.misclassified;
  report["trial_threshold"] = res.trial_threshold;
  report["check_threshold"] = res.check_threshold;
  report["predicted_error_per_trial"] = res.predicted_error;
  if (scored > 0)
    report["observed"] = wilson_json(wilson_interval(res.misclassified, scored));

  std::string txt = "two-ion bright-count discrimination\n";
  txt += "  trials:            " + std::to_string(res.trials) + " (" +
         std::to_string(res.vetoed_trials) + " vetoed)\n";
  txt += "  detection bins:    " + std::to_string(res.detection_bins) + "\n";
  txt += "  trial threshold:   " + std::to_string(res.trial_threshold) + "\n";
  txt += "  check threshold:   " + std::to_string(res.check_threshold) + "\n";
  txt += "  misclassified:     " + std::to_string(res.misclassified) + "\n";
  txt += "  predicted / trial: " + format_g(res.predicted_error) + "\n";

  artifacts.write("two_ion.json", report.dump(2) + "\n");
  artifacts.write("two_ion.txt", txt);
  artifacts.finish(cfg, "two-ion");
  std::printf("%s", txt.c_str());
  return 0;
}

// ---------------------------------------------------------------------------
// selftest

int run_selftest() {
  int failures = 0;
  auto check = [&failures](bool ok, const char* what) {
    std::printf("  %-52s %s\n", what, ok ? "ok" : "FAIL");
    if (!ok) ++failures;
  };
  auto close_rel = [](double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::abs(b);
  };

  AtomicConstants c;
  check(close_rel(shelving_error_floor(c), 8.235242878342176e-05, 1e-12),
        "analytic error floor at defaults");
  check(choose_detection_threshold(0.1, 1e-7) == 5, "detection cutoff (0.1, 1e-7)");
  check(choose_detection_threshold(0.0, 1e-7) == 1, "detection cutoff (0, 1e-7)");
  check(choose_doppler_threshold(100.0, 1e-6) == 56, "doppler cutoff (100, 1e-6)");
  check(close_rel(poisson_upper_tail(5, 0.1), 7.667801686189312e-08, 1e-9),
        "poisson upper tail (5, 0.1)");
  BinomialEstimate w = wilson_interval(13, 100000, 1.0);
  check(close_rel(w.low, 9.860078601329453e-05, 1e-9) &&
            close_rel(w.high, 1.713965140137052e-04, 1e-9),
        "wilson interval (13, 1e5)");

  std::vector<BudgetRow> rows = {
      {"state preparation", 0.02e-4, 0.01e-4, BudgetScope::both_states, false},
      {"storage loss (unflagged)", 0.1e-4, 0.1e-4, BudgetScope::zero_only, false},
      {"microwave transfer", 0.74e-4, 0.05e-4, BudgetScope::one_only, false},
      {"metastable decay", 0.06e-4, 0.01e-4, BudgetScope::one_only, false},
      {"finite shelving", 0.82e-4, 0.05e-4, BudgetScope::one_only, false},
      {"storage loss (heralded)", 2.9e-4, 0.2e-4, BudgetScope::zero_only, true},
  };
  ErrorBudget b = assemble_budget(rows);
  BudgetDisplay d = display_budget(b);
  check(d.average_inaccuracy == 0.9 && d.average_infidelity == 2.4,
        "budget table rounding");

  // Determinism: identical seeds give identical records, any thread count.
  ProtocolParams params;
  CountModel counts;
  AtomicConstants constants;
  LaserConfig lasers = default_lasers(constants);
  Thresholds th;
  th.detect_cutoff = 5;
  th.doppler_cutoff = 27;
  auto a = run_spam_campaign(params, counts, th, constants, lasers, 100, 7, 1);
  auto bb = run_spam_campaign(params, counts, th, constants, lasers, 100, 7, 2);
  bool same = a.size() == bb.size();
  for (std::size_t i = 0; same && i < a.size(); ++i)
    same = a[i].detect_counts == bb[i].detect_counts &&
           a[i].post_doppler_counts == bb[i].post_doppler_counts &&
           a[i].classified == bb[i].classified;
  check(same, "campaign determinism across thread counts");

  std::printf("selftest: %s\n", failures == 0 ? "all checks passed" : "FAILED");
  return failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trapped-ion shelving readout simulator and analysis toolkit"};
  app.require_subcommand(1);

  CommonOptions spam_opts, scan_opts, fit_opts, rb_opts, budget_opts, two_opts;
  std::string fit_scan_path;
  double fit_delta_ll = 0.5;
  std::string budget_components;

  CLI::App* spam = app.add_subcommand("spam", "Blinded single-ion SPAM campaign");
  add_common_options(spam, spam_opts);
  CLI::App* scan = app.add_subcommand("scan", "Shelving-duration error scan");
  add_common_options(scan, scan_opts);
  CLI::App* fit = app.add_subcommand("fit", "Fit the M1 leak rate to a scan");
  add_common_options(fit, fit_opts);
  fit->add_option("--scan-csv", fit_scan_path, "scan.csv produced by the scan subcommand")
      ->required();
  fit->add_option("--delta-ll", fit_delta_ll,
                  "Profile-likelihood drop for the interval (0.5 = 1 sigma)");
  CLI::App* rb = app.add_subcommand("rb", "Randomized benchmarking with SPAM readout");
  add_common_options(rb, rb_opts);
  CLI::App* budget = app.add_subcommand("budget", "Assemble and render an error budget");
  add_common_options(budget, budget_opts);
  budget->add_option("--components", budget_components,
                     "JSON array of budget rows (default: model-derived)");
  CLI::App* two_ion = app.add_subcommand("two-ion", "Two-ion discrimination trials");
  add_common_options(two_ion, two_opts);
  CLI::App* selftest = app.add_subcommand("selftest", "Quick internal consistency checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (spam->parsed()) return run_spam(spam_opts);
    if (scan->parsed()) return run_scan(scan_opts);
    if (fit->parsed()) return run_fit(fit_opts, fit_scan_path, fit_delta_ll);
    if (rb->parsed()) return run_rb(rb_opts);
    if (budget->parsed()) return run_budget(budget_opts, budget_components);
    if (two_ion->parsed()) return run_two_ion(two_opts);
    if (selftest->parsed()) return run_selftest();
  } catch (const ConfigError& ex) {
    std::fprintf(stderr, "configuration error: %s\n", ex.what());
    return 2;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 3;
  }
  return 0;
}
