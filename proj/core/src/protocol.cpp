#include "shelvesim/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <stdexcept>
#include <thread>

#include "nlohmann/json.hpp"

namespace shelvesim {

std::string_view to_string(RepumpScheme s) {
  return s == RepumpScheme::nm935 ? "935" : "861";
}

void validate(const ProtocolParams& p) {
  auto prob = [](double x, const char* name) {
    if (!(x >= 0.0 && x < 1.0))
      throw std::invalid_argument(std::string("protocol: ") + name +
                                  " must lie in [0, 1)");
  };
  prob(p.eps_prep0, "eps_prep0");
  prob(p.eps_pi, "eps_pi");
  prob(p.p_storage, "p_storage");
  if (!(p.shelve_time >= 0.0) || !(p.deshelve_time >= 0.0))
    throw std::invalid_argument("protocol: phase times must be >= 0");
  if (!(p.detect_time > 0.0))
    throw std::invalid_argument("protocol: detect_time must be > 0");
  if (p.block_size < 1)
    throw std::invalid_argument("protocol: block_size must be >= 1");
}

double CampaignSummary::inaccuracy_zero() const {
  return unflagged_zero() == 0
             ? 0.0
             : static_cast<double>(errors_zero_unflagged) / unflagged_zero();
}

double CampaignSummary::inaccuracy_one() const {
  return unflagged_one() == 0
             ? 0.0
             : static_cast<double>(errors_one_unflagged) / unflagged_one();
}

double CampaignSummary::average_inaccuracy() const {
  return 0.5 * (inaccuracy_zero() + inaccuracy_one());
}

double CampaignSummary::infidelity_zero() const {
  if (shots_zero == 0) return 0.0;
  return static_cast<double>(errors_zero_unflagged + flagged_zero) / shots_zero;
}

double CampaignSummary::infidelity_one() const {
  if (shots_one == 0) return 0.0;
  return static_cast<double>(errors_one_unflagged + flagged_one) / shots_one;
}

double CampaignSummary::average_infidelity() const {
  return 0.5 * (infidelity_zero() + infidelity_one());
}

double ScanPoint::error_rate() const {
  return trials == 0 ? 0.0 : static_cast<double>(errors) / trials;
}

double FringePoint::probability() const {
  return shots == 0 ? 0.0 : static_cast<double>(ones) / shots;
}

double RbPoint::survival() const {
  return shots == 0 ? 0.0 : static_cast<double>(survivals) / shots;
}

namespace {

// Contiguous index ranges over [0, n); results must not depend on the split,
// which holds because every index carries its own RNG stream.
void parallel_ranges(std::uint64_t n, int threads,
                     const std::function<void(std::uint64_t, std::uint64_t)>& body) {
  if (threads < 1) threads = 1;
  std::uint64_t workers = std::min<std::uint64_t>(threads, n == 0 ? 1 : n);
  if (workers <= 1 || n < 2) {
    body(0, n);
    return;
  }
  std::uint64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  for (std::uint64_t w = 1; w < workers; ++w) {
    std::uint64_t begin = w * chunk;
    std::uint64_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(body, begin, end);
  }
  body(0, std::min(n, chunk));
  for (auto& t : pool) t.join();
}

struct PhaseModels {
  RateModel shelve;
  RateModel detect;
  RateModel deshelve;
};

PhaseModels make_phase_models(const AtomicConstants& constants,
                              const LaserConfig& rates, RepumpScheme scheme) {
  LaserConfig shelve = rates;
  shelve.on_411 = true;
  shelve.on_935 = scheme == RepumpScheme::nm935;
  shelve.on_861 = scheme == RepumpScheme::nm861;
  shelve.on_deshelve_760 = false;
  shelve.on_976 = false;
  shelve.on_cooling = false;

  LaserConfig detect = rates;
  detect.on_411 = false;
  detect.on_935 = true;
  detect.on_861 = false;
  detect.on_deshelve_760 = false;
  detect.on_976 = false;
  detect.on_cooling = true;

  LaserConfig deshelve = rates;
  deshelve.on_411 = false;
  deshelve.on_935 = true;
  deshelve.on_861 = false;
  deshelve.on_deshelve_760 = true;
  deshelve.on_976 = true;
  deshelve.on_cooling = true;

  return {build_rate_model(constants, shelve), build_rate_model(constants, detect),
          build_rate_model(constants, deshelve)};
}

// Prepared state of the i-th shot of a campaign: blocks of block_size
// alternating |0>, |1>, with the tail forced so each state gets exactly
// total/2 shots even when the block pattern does not divide evenly.
PreparedState prepared_for_index(std::uint64_t i, std::uint64_t total,
                                 int block_size) {
  std::uint64_t per_state = total / 2;
  std::uint64_t pair = 2 * static_cast<std::uint64_t>(block_size);
  std::uint64_t zeros_before = (i / pair) * block_size +
                               std::min<std::uint64_t>(i % pair, block_size);
  std::uint64_t ones_before = i - zeros_before;
  if (zeros_before >= per_state) return PreparedState::one;
  if (ones_before >= per_state) return PreparedState::zero;
  return (i / block_size) % 2 == 0 ? PreparedState::zero : PreparedState::one;
}

ShotRecord run_single_shot(PreparedState prepared, const ProtocolParams& params,
                           const CountModel& counts, const Thresholds& th,
                           const PhaseModels& models, std::uint64_t shot_index,
                           Prng& rng) {
  ShotRecord rec;
  rec.shot_index = shot_index;
  rec.prepared = prepared;

  // Pre-sequence Doppler check; a cold reading restarts the attempt.
  std::uint32_t restarts = 0;
  for (;;) {
    int pre = poisson_draw(rng, counts.bright_mean());
    if (pre >= th.doppler_cutoff) {
      rec.pre_doppler_counts = pre;
      break;
    }
    if (++restarts > 1000000)
      throw std::runtime_error(
          "spam shot: pre-check keeps failing; the Doppler cutoff is "
          "incompatible with the count model");
  }
  rec.restarts = restarts;

  // State preparation, then the optional transfer pulse. A failed pi-pulse
  // acts as the identity.
  Manifold m = Manifold::S_F0;
  if (rng.uniform_unit() < params.eps_prep0) m = Manifold::S_F1;
  if (prepared == PreparedState::one && rng.uniform_unit() >= params.eps_pi)
    m = (m == Manifold::S_F0) ? Manifold::S_F1 : Manifold::S_F0;

  // Storage failure: the ion leaves the trap at a uniform time within the
  // remaining sequence and is dark from then on.
  double span = params.shelve_time + params.detect_time + params.deshelve_time +
                counts.detect_window;
  bool lost = false;
  double t_loss = 0.0;
  if (rng.uniform_unit() < params.p_storage) {
    lost = true;
    t_loss = rng.uniform_unit() * span;
  }

  m = evolve_stochastic(m, models.shelve, params.shelve_time, rng);
  m = evolve_stochastic(m, models.detect, params.detect_time, rng);

  bool gone_by_detect_end = lost && t_loss <= params.shelve_time + params.detect_time;
  rec.detect_counts =
      gone_by_detect_end
          ? poisson_draw(rng, counts.dark_rate * params.detect_time)
          : draw_counts(m, counts, params.detect_time, rng);
  rec.classified = rec.detect_counts >= th.detect_cutoff ? PreparedState::zero
                                                         : PreparedState::one;
  rec.final_manifold = gone_by_detect_end ? Manifold::LOST : m;

  m = evolve_stochastic(m, models.deshelve, params.deshelve_time, rng);

  // Post-sequence check: a lost ion is bright only for the part of the
  // window before the loss time.
  double post_start = params.shelve_time + params.detect_time + params.deshelve_time;
  double window = counts.detect_window;
  int post;
  if (lost && t_loss <= post_start) {
    post = poisson_draw(rng, counts.dark_rate * window);
  } else if (lost) {
    double bright_span = t_loss - post_start;
    post = poisson_draw(rng, counts.bright_rate * bright_span +
                                 counts.dark_rate * window);
  } else if (fluoresces(m)) {
    post = poisson_draw(rng, counts.bright_mean());
  } else {
    post = poisson_draw(rng, counts.dark_rate * window);
  }
  rec.post_doppler_counts = post;
  rec.storage_flagged = post < th.doppler_cutoff;
  return rec;
}

}  // namespace

std::vector<ShotRecord> run_spam_campaign(const ProtocolParams& params,
                                          const CountModel& counts,
                                          const Thresholds& thresholds,
                                          const AtomicConstants& constants,
                                          const LaserConfig& lasers,
                                          std::uint64_t n_per_state,
                                          std::uint64_t seed, int threads,
                                          std::uint64_t shot_index_offset) {
  validate(params);
  validate(counts);
  if (n_per_state == 0)
    throw std::invalid_argument("campaign: n_per_state must be >= 1");
  PhaseModels models = make_phase_models(constants, lasers, params.repump_scheme);
  std::uint64_t total = 2 * n_per_state;
  std::vector<ShotRecord> records(total);
  parallel_ranges(total, threads, [&](std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t i = begin; i < end; ++i) {
      Prng rng = shot_rng(seed, shot_index_offset + i);
      records[i] = run_single_shot(prepared_for_index(i, total, params.block_size),
                                   params, counts, thresholds, models,
                                   shot_index_offset + i, rng);
    }
  });
  return records;
}

namespace {

std::uint64_t hash_calibration(const CalibrationResult& cal) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "detect_bound=%.17g;doppler_bound=%.17g;dark=%.17g;bright=%.17g;"
                "cooling=%.17g;shots=%llu;first=%llu",
                cal.thresholds.detect_error_bound,
                cal.thresholds.doppler_error_bound, cal.dark_mean_estimate,
                cal.bright_mean_estimate, cal.cooling_mean_estimate,
                static_cast<unsigned long long>(cal.shots_per_state),
                static_cast<unsigned long long>(cal.first_shot_index));
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string thresholds_json_text(const CalibrationResult& cal) {
  nlohmann::ordered_json root;
  root["detect_cutoff"] = cal.thresholds.detect_cutoff;
  root["doppler_cutoff"] = cal.thresholds.doppler_cutoff;
  root["detect_error_bound"] = cal.thresholds.detect_error_bound;
  root["doppler_error_bound"] = cal.thresholds.doppler_error_bound;
  root["dark_mean_estimate"] = cal.dark_mean_estimate;
  root["bright_mean_estimate"] = cal.bright_mean_estimate;
  root["cooling_mean_estimate"] = cal.cooling_mean_estimate;
  root["calibration_shots_per_state"] = cal.shots_per_state;
  root["first_shot_index"] = cal.first_shot_index;
  root["parameter_hash"] = cal.parameter_hash;
  return root.dump(2) + "\n";
}

BlindedCampaign run_blinded_spam(const ProtocolParams& params,
                                 const CountModel& counts,
                                 const AtomicConstants& constants,
                                 const LaserConfig& lasers,
                                 std::uint64_t n_calibration,
                                 std::uint64_t n_per_state, std::uint64_t seed,
                                 double detect_error_bound,
                                 double doppler_error_bound, int threads) {
  if (n_calibration == 0)
    throw std::invalid_argument("blinded campaign: n_calibration must be >= 1");
  // Calibration shots run the full sequence with pass-through cutoffs, so
  // no classification or veto decision leaks into them.
  Thresholds open;
  open.detect_cutoff = 0;
  open.doppler_cutoff = 0;
  open.detect_error_bound = detect_error_bound;
  open.doppler_error_bound = doppler_error_bound;
  std::vector<ShotRecord> cal_records =
      run_spam_campaign(params, counts, open, constants, lasers, n_calibration,
                        seed, threads, 0);

  double bright_sum = 0.0, cooling_sum = 0.0;
  std::uint64_t bright_n = 0;
  for (const ShotRecord& r : cal_records) {
    cooling_sum += r.pre_doppler_counts;
    if (r.prepared == PreparedState::zero) {
      bright_sum += r.detect_counts;
      ++bright_n;
    }
  }
  double bright_mean = bright_sum / static_cast<double>(bright_n);
  // Dark sample: |1> shots, with the rare unshelved (bright) outcomes cut
  // away at half the bright mean.
  double dark_sum = 0.0;
  std::uint64_t dark_n = 0;
  for (const ShotRecord& r : cal_records) {
    if (r.prepared == PreparedState::one &&
        r.detect_counts <= 0.5 * bright_mean) {
      dark_sum += r.detect_counts;
      ++dark_n;
    }
  }
  if (dark_n == 0)
    throw std::runtime_error("blinded campaign: calibration found no dark shots");

  CalibrationResult cal;
  cal.dark_mean_estimate = dark_sum / static_cast<double>(dark_n);
  cal.bright_mean_estimate = bright_mean;
  cal.cooling_mean_estimate =
      cooling_sum / static_cast<double>(cal_records.size());
  cal.shots_per_state = n_calibration;
  cal.first_shot_index = 0;
  cal.thresholds.detect_error_bound = detect_error_bound;
  cal.thresholds.doppler_error_bound = doppler_error_bound;
  cal.thresholds.detect_cutoff =
      choose_detection_threshold(cal.dark_mean_estimate, detect_error_bound);
  cal.thresholds.doppler_cutoff =
      choose_doppler_threshold(cal.cooling_mean_estimate, doppler_error_bound);
  cal.parameter_hash = hash_calibration(cal);

  BlindedCampaign out;
  out.calibration = cal;
  // Campaign shots start past every calibration stream.
  out.records =
      run_spam_campaign(params, counts, cal.thresholds, constants, lasers,
                        n_per_state, seed, threads, 2 * n_calibration);
  return out;
}

CampaignSummary summarize_campaign(std::span<const ShotRecord> records) {
  CampaignSummary s;
  for (const ShotRecord& r : records) {
    bool error = r.classified != r.prepared;
    if (r.prepared == PreparedState::zero) {
      ++s.shots_zero;
      if (r.storage_flagged) ++s.flagged_zero;
      if (error) {
        ++s.errors_zero_all;
        if (!r.storage_flagged) ++s.errors_zero_unflagged;
      }
    } else {
      ++s.shots_one;
      if (r.storage_flagged) ++s.flagged_one;
      if (error) {
        ++s.errors_one_all;
        if (!r.storage_flagged) ++s.errors_one_unflagged;
      }
    }
    s.restarts += r.restarts;
  }
  return s;
}

std::vector<ScanPoint> run_shelving_scan(std::span<const double> times,
                                         std::uint64_t n_per_point,
                                         const ProtocolParams& params,
                                         const CountModel& counts,
                                         const Thresholds& thresholds,
                                         const AtomicConstants& constants,
                                         const LaserConfig& lasers,
                                         std::uint64_t seed, int threads) {
  validate(params);
  validate(counts);
  if (times.empty()) throw std::invalid_argument("scan: no shelve times");
  if (n_per_point == 0)
    throw std::invalid_argument("scan: n_per_point must be >= 1");
  for (double t : times)
    if (!(t >= 0.0)) throw std::invalid_argument("scan: negative shelve time");

  PhaseModels models = make_phase_models(constants, lasers, params.repump_scheme);
  std::vector<ScanPoint> out(times.size());
  for (std::size_t pt = 0; pt < times.size(); ++pt) {
    out[pt].t = times[pt];
    out[pt].trials = n_per_point;
    // A count of errors commutes, so the split cannot change the total.
    std::atomic<std::uint64_t> errors{0};
    parallel_ranges(n_per_point, threads,
                    [&](std::uint64_t begin, std::uint64_t end) {
      std::uint64_t local = 0;
      for (std::uint64_t j = begin; j < end; ++j) {
        Prng rng = shot_rng(seed, pt * n_per_point + j);
        // Transfer to S_F1 idealized; the scan isolates the shelving step.
        Manifold m = Manifold::S_F1;
        double span = times[pt] + params.detect_time;
        bool lost = rng.uniform_unit() < params.p_storage;
        double t_loss = lost ? rng.uniform_unit() * span : 0.0;
        m = evolve_stochastic(m, models.shelve, times[pt], rng);
        m = evolve_stochastic(m, models.detect, params.detect_time, rng);
        int det = (lost && t_loss <= span)
                      ? poisson_draw(rng, counts.dark_rate * params.detect_time)
                      : draw_counts(m, counts, params.detect_time, rng);
        if (det >= thresholds.detect_cutoff) ++local;  // still read as ground
      }
      errors.fetch_add(local, std::memory_order_relaxed);
    });
    out[pt].errors = errors.load();
  }
  return out;
}

std::vector<FringePoint> simulate_rabi(std::span<const double> times, double t_pi,
                                       const ReadoutChannel& readout,
                                       std::uint64_t shots_per_point,
                                       std::uint64_t seed) {
  if (!(t_pi > 0.0)) throw std::invalid_argument("rabi: t_pi must be > 0");
  if (shots_per_point == 0)
    throw std::invalid_argument("rabi: shots_per_point must be >= 1");
  std::vector<FringePoint> out;
  out.reserve(times.size());
  for (std::size_t pt = 0; pt < times.size(); ++pt) {
    double s = std::sin(M_PI * times[pt] / (2.0 * t_pi));
    double p_one = s * s;
    FringePoint f;
    f.x = times[pt];
    f.shots = shots_per_point;
    for (std::uint64_t j = 0; j < shots_per_point; ++j) {
      Prng rng = shot_rng(seed, pt * shots_per_point + j);
      bool one = rng.uniform_unit() < p_one;
      double flip = one ? readout.eps_one_as_zero : readout.eps_zero_as_one;
      if (rng.uniform_unit() < flip) one = !one;
      if (one) ++f.ones;
    }
    out.push_back(f);
  }
  return out;
}

std::vector<FringePoint> simulate_ramsey(std::span<const double> delays,
                                         double detuning_hz,
                                         const ReadoutChannel& readout,
                                         std::uint64_t shots_per_point,
                                         std::uint64_t seed) {
  if (shots_per_point == 0)
    throw std::invalid_argument("ramsey: shots_per_point must be >= 1");
  std::vector<FringePoint> out;
  out.reserve(delays.size());
  for (std::size_t pt = 0; pt < delays.size(); ++pt) {
    double p_one = 0.5 * (1.0 + std::cos(kTwoPi * detuning_hz * delays[pt]));
    FringePoint f;
    f.x = delays[pt];
    f.shots = shots_per_point;
    for (std::uint64_t j = 0; j < shots_per_point; ++j) {
      Prng rng = shot_rng(seed, pt * shots_per_point + j);
      bool one = rng.uniform_unit() < p_one;
      double flip = one ? readout.eps_one_as_zero : readout.eps_zero_as_one;
      if (rng.uniform_unit() < flip) one = !one;
      if (one) ++f.ones;
    }
    out.push_back(f);
  }
  return out;
}

std::vector<RbPoint> run_randomized_benchmarking(std::span<const int> lengths,
                                                 int sequences_per_length,
                                                 int shots_per_sequence,
                                                 double eps_per_gate,
                                                 const ReadoutChannel& readout,
                                                 std::uint64_t seed) {
  if (lengths.empty()) throw std::invalid_argument("rb: no sequence lengths");
  if (sequences_per_length < 1 || shots_per_sequence < 1)
    throw std::invalid_argument("rb: sequence and shot counts must be >= 1");
  if (!(eps_per_gate >= 0.0 && eps_per_gate < 0.5))
    throw std::invalid_argument("rb: eps_per_gate must lie in [0, 0.5)");
  std::vector<RbPoint> out;
  out.reserve(lengths.size());
  std::uint64_t shots_per_length =
      static_cast<std::uint64_t>(sequences_per_length) * shots_per_sequence;
  for (std::size_t li = 0; li < lengths.size(); ++li) {
    if (lengths[li] < 1) throw std::invalid_argument("rb: length must be >= 1");
    RbPoint point;
    point.sequence_length = lengths[li];
    point.shots = shots_per_length;
    for (std::uint64_t j = 0; j < shots_per_length; ++j) {
      Prng rng = shot_rng(seed, li * shots_per_length + j);
      // Gate identities drop out of a gate-independent flip channel; only
      // the error draws matter. The final inverting gate is ideal.
      int bit = 0;
      for (int g = 0; g < lengths[li]; ++g)
        if (rng.uniform_unit() < eps_per_gate) bit ^= 1;
      double flip = bit == 1 ? readout.eps_one_as_zero : readout.eps_zero_as_one;
      int observed = bit;
      if (rng.uniform_unit() < flip) observed ^= 1;
      if (observed == 0) ++point.survivals;
    }
    out.push_back(point);
  }
  return out;
}

TwoIonResult run_two_ion_discrimination(std::uint64_t n_detection_bins,
                                        const CountModel& counts,
                                        const TwoIonParams& params,
                                        std::uint64_t seed) {
  validate(counts);
  if (n_detection_bins == 0)
    throw std::invalid_argument("two-ion: need at least one detection bin");
  if (params.detect_bins_per_trial < 1)
    throw std::invalid_argument("two-ion: detect_bins_per_trial must be >= 1");
  if (!(params.storage_rate_per_trial >= 0.0 &&
        params.storage_rate_per_trial < 1.0))
    throw std::invalid_argument("two-ion: storage rate must lie in [0, 1)");

  int k = params.detect_bins_per_trial;
  double bin = counts.bin_width;
  double mean_one = (counts.bright_rate + counts.dark_rate) * bin;
  double mean_two = (2.0 * counts.bright_rate + counts.dark_rate) * bin;
  double agg_one = k * mean_one;
  double agg_two = k * mean_two;

  TwoIonResult res;
  res.check_threshold =
      choose_doppler_threshold(mean_one, params.check_error_bound);
  // Mid-threshold minimizing the summed exact tails; first minimum wins.
  int best_c = static_cast<int>(agg_one);
  double best = 2.0;
  for (int c = static_cast<int>(agg_one); c <= static_cast<int>(agg_two) + 1; ++c) {
    double miss = poisson_upper_tail(c, agg_one) + poisson_cdf_below(c, agg_two);
    if (miss < best) {
      best = miss;
      best_c = c;
    }
  }
  res.trial_threshold = best_c;
  // Alternating truth makes the per-trial error the mean of the two tails.
  res.predicted_error = 0.5 * best;

  std::uint64_t trials =
      (n_detection_bins + static_cast<std::uint64_t>(k) - 1) / k;
  int slots = 2 * k + 1;  // checks at even slots, detection at odd slots
  std::vector<int> bin_counts(static_cast<std::size_t>(slots));
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    Prng rng = shot_rng(seed, trial);
    int bright_ions = 1 + static_cast<int>(trial % 2);
    double corrupt_at = static_cast<double>(slots);  // slot units; past the end
    if (params.storage_rate_per_trial > 0.0 &&
        rng.uniform_unit() < params.storage_rate_per_trial)
      corrupt_at = rng.uniform_unit() * slots;
    for (int s = 0; s < slots; ++s) {
      // Fraction of this slot during which the crystal still fluoresces.
      double alive = std::clamp(corrupt_at - s, 0.0, 1.0);
      double mean =
          counts.dark_rate * bin + bright_ions * counts.bright_rate * bin * alive;
      bin_counts[static_cast<std::size_t>(s)] = poisson_draw(rng, mean);
    }
    res.detection_bins += static_cast<std::uint64_t>(k);
    ++res.trials;
    bool vetoed = false;
    for (int s = 0; s < slots; s += 2)
      if (bin_counts[static_cast<std::size_t>(s)] < res.check_threshold) {
        vetoed = true;
        break;
      }
    if (vetoed) {
      ++res.vetoed_trials;
      continue;
    }
    long long agg = 0;
    for (int s = 1; s < slots; s += 2) agg += bin_counts[static_cast<std::size_t>(s)];
    int read_ions = agg >= res.trial_threshold ? 2 : 1;
    if (read_ions != bright_ions) ++res.misclassified;
  }
  return res;
}

namespace {

const char* prepared_name(PreparedState s) {
  return s == PreparedState::zero ? "zero" : "one";
}

}  // namespace

std::string records_csv(std::span<const ShotRecord> records) {
  std::string out =
      "shot_index,prepared,pre_doppler_counts,detect_counts,post_doppler_counts,"
      "restarts,storage_flagged,classified,final_manifold\n";
  char line[192];
  for (const ShotRecord& r : records) {
    std::snprintf(line, sizeof(line), "%llu,%s,%d,%d,%d,%u,%d,%s,%s\n",
                  static_cast<unsigned long long>(r.shot_index),
                  prepared_name(r.prepared), r.pre_doppler_counts,
                  r.detect_counts, r.post_doppler_counts, r.restarts,
                  r.storage_flagged ? 1 : 0, prepared_name(r.classified),
                  std::string(to_string(r.final_manifold)).c_str());
    out += line;
  }
  return out;
}

std::string records_jsonl(std::span<const ShotRecord> records) {
  std::string out;
  for (const ShotRecord& r : records) {
    nlohmann::ordered_json obj;
    obj["shot_index"] = r.shot_index;
    obj["prepared"] = prepared_name(r.prepared);
    obj["pre_doppler_counts"] = r.pre_doppler_counts;
    obj["detect_counts"] = r.detect_counts;
    obj["post_doppler_counts"] = r.post_doppler_counts;
    obj["restarts"] = r.restarts;
    obj["storage_flagged"] = r.storage_flagged;
    obj["classified"] = prepared_name(r.classified);
    obj["final_manifold"] = std::string(to_string(r.final_manifold));
    out += obj.dump();
    out += '\n';
  }
  return out;
}

}  // namespace shelvesim
