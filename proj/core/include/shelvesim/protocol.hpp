#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shelvesim/atomic_model.hpp"
#include "shelvesim/dynamics.hpp"
#include "shelvesim/photon_stats.hpp"

namespace shelvesim {

enum class RepumpScheme { nm935, nm861 };
std::string_view to_string(RepumpScheme s);

// Parameters of the full state-preparation-and-measurement sequence.
// Error probabilities are per shot; times are seconds.
struct ProtocolParams {
  double eps_prep0 = 2.0e-6;   // optical pumping leaves |1> instead of |0>
  double eps_pi = 7.4e-5;      // microwave pi-pulse failure (acts as identity)
  double shelve_time = 200.0e-3;
  double detect_time = 17.0e-3;
  double deshelve_time = 35.0e-3;
  double p_storage = 2.9e-4;   // ion lost during the shot, uniform in time
  int block_size = 50;         // interleave granularity between |0> and |1>
  RepumpScheme repump_scheme = RepumpScheme::nm935;
};

// Throws std::invalid_argument on probabilities outside [0, 1), non-positive
// times, or block_size < 1.
void validate(const ProtocolParams& p);

enum class PreparedState { zero, one };

// Everything observed in one recorded shot. Restart attempts that failed the
// pre-check are folded into `restarts` rather than recorded separately.
struct ShotRecord {
  std::uint64_t shot_index = 0;   // global index; seeds the per-shot stream
  PreparedState prepared = PreparedState::zero;
  int pre_doppler_counts = 0;
  int detect_counts = 0;
  int post_doppler_counts = 0;
  std::uint32_t restarts = 0;        // failed pre-checks before this shot ran
  bool storage_flagged = false;      // post-check below the Doppler cutoff
  PreparedState classified = PreparedState::zero;
  // Manifold at the end of the detection window; LOST when the ion was
  // already gone by then.
  Manifold final_manifold = Manifold::S_F0;
};

std::string records_csv(std::span<const ShotRecord> records);
std::string records_jsonl(std::span<const ShotRecord> records);

// Threshold calibration on its own shots, blind to the campaign proper:
// |0> shots give the dark-count sample (detection counts of correctly
// shelved population are excluded by a coarse cut at half the |1>-side
// bright mean), |1> shots give bright detection and pre-check samples.
struct CalibrationResult {
  Thresholds thresholds;
  double dark_mean_estimate = 0.0;
  double bright_mean_estimate = 0.0;
  double cooling_mean_estimate = 0.0;
  std::uint64_t shots_per_state = 0;
  std::uint64_t first_shot_index = 0;  // [first, first + 2 * shots) reserved
  std::uint64_t parameter_hash = 0;    // freezes the policy the cutoffs came from
};

std::string thresholds_json_text(const CalibrationResult& cal);

// Runs the SPAM sequence for n_per_state shots of each prepared state,
// interleaved in blocks of params.block_size starting with |0>. Shot i uses
// the stream shot_rng(seed, shot_index_offset + i), so results are
// independent of `threads`. Phases per shot:
//   pre-check (restart until pass) -> prep -> optional pi-pulse -> shelve ->
//   detect -> deshelve -> post-check.
std::vector<ShotRecord> run_spam_campaign(const ProtocolParams& params,
                                          const CountModel& counts,
                                          const Thresholds& thresholds,
                                          const AtomicConstants& constants,
                                          const LaserConfig& lasers,
                                          std::uint64_t n_per_state,
                                          std::uint64_t seed, int threads = 1,
                                          std::uint64_t shot_index_offset = 0);

struct BlindedCampaign {
  CalibrationResult calibration;
  std::vector<ShotRecord> records;
};

// Calibration on shot indices [0, 2 * n_calibration), then the campaign on
// [2 * n_calibration, ...): the cutoffs are frozen before any campaign shot
// is drawn and no stream is shared between the two phases.
BlindedCampaign run_blinded_spam(const ProtocolParams& params,
                                 const CountModel& counts,
                                 const AtomicConstants& constants,
                                 const LaserConfig& lasers,
                                 std::uint64_t n_calibration,
                                 std::uint64_t n_per_state, std::uint64_t seed,
                                 double detect_error_bound = 1e-7,
                                 double doppler_error_bound = 1e-6,
                                 int threads = 1);

// Aggregates of a campaign. Inaccuracy excludes storage-flagged shots;
// infidelity keeps them. Wilson intervals are left to the analysis layer.
struct CampaignSummary {
  std::uint64_t shots_zero = 0, shots_one = 0;
  std::uint64_t flagged_zero = 0, flagged_one = 0;
  std::uint64_t errors_zero_unflagged = 0, errors_one_unflagged = 0;
  std::uint64_t errors_zero_all = 0, errors_one_all = 0;
  std::uint64_t restarts = 0;

  std::uint64_t unflagged_zero() const { return shots_zero - flagged_zero; }
  std::uint64_t unflagged_one() const { return shots_one - flagged_one; }
  double inaccuracy_zero() const;
  double inaccuracy_one() const;
  double average_inaccuracy() const;
  // Flagged shots count as errors regardless of their reading.
  double infidelity_zero() const;
  double infidelity_one() const;
  double average_infidelity() const;
};

CampaignSummary summarize_campaign(std::span<const ShotRecord> records);

// One point of a shelve-duration scan: ion prepared in S_F1 exactly (the
// three-pulse transfer idealized), shelved for t, detected; an error is a
// shot still read as ground.
struct ScanPoint {
  double t = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t errors = 0;
  double error_rate() const;
};

std::vector<ScanPoint> run_shelving_scan(std::span<const double> times,
                                         std::uint64_t n_per_point,
                                         const ProtocolParams& params,
                                         const CountModel& counts,
                                         const Thresholds& thresholds,
                                         const AtomicConstants& constants,
                                         const LaserConfig& lasers,
                                         std::uint64_t seed, int threads = 1);

// Readout error channel for the idealized coherence demos: probability of
// reporting the opposite qubit value.
struct ReadoutChannel {
  double eps_zero_as_one = 0.0;
  double eps_one_as_zero = 0.0;
};

struct FringePoint {
  double x = 0.0;          // pulse duration (Rabi) or free delay (Ramsey), s
  std::uint64_t shots = 0;
  std::uint64_t ones = 0;  // shots read out as |1>
  double probability() const;
};

// Rabi flopping: P(|1>) = sin^2(pi t / (2 t_pi)) filtered through readout.
std::vector<FringePoint> simulate_rabi(std::span<const double> times, double t_pi,
                                       const ReadoutChannel& readout,
                                       std::uint64_t shots_per_point,
                                       std::uint64_t seed);

// Ramsey fringes at a fixed detuning: P(|1>) = (1 + cos(2 pi f delay)) / 2.
std::vector<FringePoint> simulate_ramsey(std::span<const double> delays,
                                         double detuning_hz,
                                         const ReadoutChannel& readout,
                                         std::uint64_t shots_per_point,
                                         std::uint64_t seed);

// Randomized-benchmarking survival at one sequence length.
struct RbPoint {
  int sequence_length = 0;
  std::uint64_t shots = 0;
  std::uint64_t survivals = 0;
  double survival() const;
};

// Gates act as independent bit-flip channels of probability eps_per_gate;
// the inverting final gate is ideal, readout applies the channel above.
std::vector<RbPoint> run_randomized_benchmarking(std::span<const int> lengths,
                                                 int sequences_per_length,
                                                 int shots_per_sequence,
                                                 double eps_per_gate,
                                                 const ReadoutChannel& readout,
                                                 std::uint64_t seed);

// Two-ion crystal readout. A trial interleaves cooling-check bins with
// detection bins (check, detect, check, ..., detect, check), sums the
// detection bins, and classifies one-bright vs two-bright against a fixed
// mid-threshold on the sum. Any check bin below its cutoff vetoes the trial.
struct TwoIonParams {
  int detect_bins_per_trial = 6;
  double storage_rate_per_trial = 0.0;  // probability the crystal goes dark
  double check_error_bound = 1e-6;
};

struct TwoIonResult {
  std::uint64_t trials = 0;
  std::uint64_t vetoed_trials = 0;
  std::uint64_t detection_bins = 0;   // generated, including vetoed trials
  std::uint64_t misclassified = 0;    // among non-vetoed trials
  int trial_threshold = 0;            // on summed counts per trial
  int check_threshold = 0;            // per odd bin
  double predicted_error = 0.0;       // per-trial, from exact Poisson tails
};

// Runs ceil(n_detection_bins / detect_bins_per_trial) trials, alternating
// the true state one-bright / two-bright.
TwoIonResult run_two_ion_discrimination(std::uint64_t n_detection_bins,
                                        const CountModel& counts,
                                        const TwoIonParams& params,
                                        std::uint64_t seed);

}  // namespace shelvesim
