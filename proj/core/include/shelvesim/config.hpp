#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "shelvesim/atomic_model.hpp"
#include "shelvesim/photon_stats.hpp"
#include "shelvesim/protocol.hpp"

namespace shelvesim {

// Malformed file, unknown key, unparsable value, or failed semantic
// validation. The message carries file/line context where available.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Cutoff policy: bounds drive calibration; a cutoff >= 0 pins the value and
// skips calibration for that check.
struct ThresholdPolicy {
  double detect_error_bound = 1e-7;
  double doppler_error_bound = 1e-6;
  int detect_cutoff = -1;   // -1: derive from calibration
  int doppler_cutoff = -1;
};

struct ScanSettings {
  std::vector<double> times;  // s
  std::uint64_t shots_per_point = 100000;
};

struct RbSettings {
  // The default grid spans ~2 decay constants at the default eps_per_gate;
  // grids that stop well short of one leave the decay fit unconstrained.
  std::vector<int> lengths = {2, 1000, 4000, 12000};
  int sequences_per_length = 200;
  int shots_per_sequence = 100;
  double eps_per_gate = 7.4e-5;
};

struct TwoIonSettings {
  std::uint64_t detection_bins = 1000000;
  int detect_bins_per_trial = 6;
  double storage_rate_per_trial = 0.0;
};

struct RunSettings {
  std::uint64_t seed = 20200828;
  std::uint64_t shots_per_state = 50000;
  std::uint64_t calibration_shots = 10000;  // per state
  std::string out_dir = "out";
  int threads = 1;
};

// Full configuration of one tool invocation. Defaults reproduce the
// standard single-ion campaign.
struct RunConfig {
  AtomicConstants constants;
  LaserConfig lasers;          // rates only; phase flags are set per phase
  CountModel counts;
  ProtocolParams protocol;
  ThresholdPolicy thresholds;
  ScanSettings scan;
  RbSettings rb;
  TwoIonSettings two_ion;
  RunSettings run;
};

// Rates in [lasers] default from the parsed [constants] before explicit
// keys override them, so changing tau_d alone keeps the pump consistent.
RunConfig parse_config_text(std::string_view text, std::string_view source_name);
RunConfig load_config_file(const std::string& path);

// Environment overrides, applied after the file: SHELVESIM_<SECTION>_<KEY>
// (upper case) carries the same value syntax as the file. `get_env` exists
// for tests; the default reads ::getenv.
void apply_env_overrides(
    RunConfig& config,
    const std::function<const char*(const char*)>& get_env = nullptr);

// Canonical round-trippable rendering (every key, schema order, %.17g).
std::string emit_config_text(const RunConfig& config);

// Cross-field checks beyond the per-struct validate() calls. Throws
// ConfigError.
void validate_config(const RunConfig& config);

// FNV-1a 64-bit; stable fingerprint for manifests and threshold artifacts.
std::uint64_t fnv1a64(std::string_view data);

struct ArtifactEntry {
  std::string name;
  std::uint64_t bytes = 0;
  std::uint64_t hash = 0;  // fnv1a64 of the contents
};

// Reproducibility manifest: tool version, subcommand, the full resolved
// configuration, the RNG scheme, and a digest of every artifact written.
// Deliberately excludes the worker count; outputs do not depend on it.
std::string manifest_json_text(const RunConfig& config, std::string_view subcommand,
                               std::span<const ArtifactEntry> artifacts);

}  // namespace shelvesim
