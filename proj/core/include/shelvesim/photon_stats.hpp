#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "shelvesim/manifold.hpp"
#include "shelvesim/rng.hpp"

namespace shelvesim {

// Photon-counting model for state detection. Rates are mean counts per
// detection window divided by the window, so the defaults reproduce 60
// bright / 0.1 dark counts in 17 ms.
struct CountModel {
  double bright_rate = 60.0 / 17.0e-3;  // detected counts/s, ion fluorescing
  double dark_rate = 0.1 / 17.0e-3;     // detected counts/s, ion dark
  double detect_window = 17.0e-3;       // s
  double bin_width = 10.0e-3;           // s, two-ion interleaved bins
  double efficiency = 1.6e-3;           // informational; folded into rates

  double bright_mean() const { return (bright_rate + dark_rate) * detect_window; }
  double dark_mean() const { return dark_rate * detect_window; }
};

// Throws std::invalid_argument on non-positive windows, negative rates, or
// bright_rate <= dark_rate (thresholding is undefined without separation).
void validate(const CountModel& m);

// Upper tail P(X >= c) for X ~ Poisson(mean); c <= 0 returns 1.
double poisson_upper_tail(int c, double mean);
// Lower tail P(X < c) = P(X <= c-1); c <= 0 returns 0.
double poisson_cdf_below(int c, double mean);

// Smallest cutoff c such that a dark ion exceeds it with probability at most
// error_bound: min c with P(X >= c | dark_mean) <= error_bound. Always
// exists (the tail goes to 0). dark_mean >= 0, 0 < error_bound < 1.
int choose_detection_threshold(double dark_mean, double error_bound);

// Largest cutoff c >= 1 such that a fluorescing ion stays below it with
// probability at most error_bound: max c with P(X < c | mean) <= error_bound.
// Throws std::invalid_argument when even c = 1 fails the bound (the check
// would veto healthy shots too often to be usable).
int choose_doppler_threshold(double fluorescing_mean, double error_bound);

struct Thresholds {
  int detect_cutoff = 0;    // counts >= cutoff -> ground (bright)
  int doppler_cutoff = 0;   // counts < cutoff -> check failed
  double detect_error_bound = 1e-7;
  double doppler_error_bound = 1e-6;
};

enum class StateClass { ground, shelved };

// counts >= detect_cutoff reads as the fluorescing ground manifold.
StateClass classify(int counts, const Thresholds& th);

struct Histogram {
  std::string label;
  std::map<int, std::uint64_t> frequency;
  std::uint64_t total = 0;
};

Histogram build_histogram(std::span<const int> counts, std::string label);
// CSV with header counts,frequency,label; rows ordered by label then count.
std::string histograms_csv(std::span<const Histogram> histograms);
std::string histograms_json_text(std::span<const Histogram> histograms);

// Detection counts for an ion whose detection-long manifold is `state`:
// Poisson(bright_mean) when it fluoresces, Poisson(dark_mean) otherwise,
// scaled to the given window.
int draw_counts(Manifold state, const CountModel& m, double window, Prng& rng);

// Arrival time tags for one window: `count` uniform arrivals on [0, window),
// sorted, quantized to 10 ns. Values in nanoseconds.
std::vector<std::int64_t> draw_time_tags(int count, double window, Prng& rng);
std::string time_tags_text(std::span<const std::int64_t> tags);

}  // namespace shelvesim
