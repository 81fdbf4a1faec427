#include "shelvesim/photon_stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "nlohmann/json.hpp"

namespace shelvesim {

void validate(const CountModel& m) {
  if (!(m.detect_window > 0.0) || !(m.bin_width > 0.0))
    throw std::invalid_argument("count model: windows must be positive");
  if (!(m.bright_rate >= 0.0) || !(m.dark_rate >= 0.0))
    throw std::invalid_argument("count model: rates must be >= 0");
  if (!(m.bright_rate > m.dark_rate))
    throw std::invalid_argument(
        "count model: bright rate must exceed dark rate");
  if (!(m.efficiency > 0.0) || !(m.efficiency <= 1.0))
    throw std::invalid_argument("count model: efficiency must lie in (0, 1]");
}

double poisson_upper_tail(int c, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson tail: mean < 0");
  if (c <= 0) return 1.0;
  if (mean == 0.0) return 0.0;
  // P(X >= c) equals the regularized lower incomplete gamma P(c, mean).
  return boost::math::gamma_p(static_cast<double>(c), mean);
}

double poisson_cdf_below(int c, double mean) {
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson cdf: mean < 0");
  if (c <= 0) return 0.0;
  if (mean == 0.0) return 1.0;
  // P(X <= c-1) equals the regularized upper incomplete gamma Q(c, mean).
  return boost::math::gamma_q(static_cast<double>(c), mean);
}

int choose_detection_threshold(double dark_mean, double error_bound) {
  if (!(dark_mean >= 0.0))
    throw std::invalid_argument("detection threshold: dark mean < 0");
  if (!(error_bound > 0.0 && error_bound < 1.0))
    throw std::invalid_argument("detection threshold: bound must be in (0, 1)");
  int c = 0;
  while (poisson_upper_tail(c, dark_mean) > error_bound) ++c;
  return c;
}

int choose_doppler_threshold(double fluorescing_mean, double error_bound) {
  if (!(fluorescing_mean >= 0.0))
    throw std::invalid_argument("doppler threshold: mean < 0");
  if (!(error_bound > 0.0 && error_bound < 1.0))
    throw std::invalid_argument("doppler threshold: bound must be in (0, 1)");
  if (poisson_cdf_below(1, fluorescing_mean) > error_bound)
    throw std::invalid_argument(
        "doppler threshold: even cutoff 1 vetoes healthy shots beyond the "
        "bound; the check is unusable at this mean");
  int c = 1;
  while (poisson_cdf_below(c + 1, fluorescing_mean) <= error_bound) ++c;
  return c;
}

StateClass classify(int counts, const Thresholds& th) {
  return counts >= th.detect_cutoff ? StateClass::ground : StateClass::shelved;
}

Histogram build_histogram(std::span<const int> counts, std::string label) {
  Histogram h;
  h.label = std::move(label);
  for (int c : counts) {
    ++h.frequency[c];
    ++h.total;
  }
  return h;
}

std::string histograms_csv(std::span<const Histogram> histograms) {
  std::string out = "counts,frequency,label\n";
  for (const Histogram& h : histograms) {
    for (const auto& [count, freq] : h.frequency) {
      char line[128];
      std::snprintf(line, sizeof(line), "%d,%llu,%s\n", count,
                    static_cast<unsigned long long>(freq), h.label.c_str());
      out += line;
    }
  }
  return out;
}

std::string histograms_json_text(std::span<const Histogram> histograms) {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const Histogram& h : histograms) {
    nlohmann::ordered_json entry;
    entry["label"] = h.label;
    entry["total"] = h.total;
    nlohmann::ordered_json bins = nlohmann::ordered_json::array();
    for (const auto& [count, freq] : h.frequency)
      bins.push_back({{"counts", count}, {"frequency", freq}});
    entry["bins"] = std::move(bins);
    root.push_back(std::move(entry));
  }
  return root.dump(2) + "\n";
}

int draw_counts(Manifold state, const CountModel& m, double window, Prng& rng) {
  if (!(window > 0.0)) throw std::invalid_argument("draw_counts: window <= 0");
  double mean = fluoresces(state) ? (m.bright_rate + m.dark_rate) * window
                                  : m.dark_rate * window;
  return poisson_draw(rng, mean);
}

std::vector<std::int64_t> draw_time_tags(int count, double window, Prng& rng) {
  if (count < 0) throw std::invalid_argument("time tags: count < 0");
  if (!(window > 0.0)) throw std::invalid_argument("time tags: window <= 0");
  std::vector<std::int64_t> tags(static_cast<std::size_t>(count));
  for (auto& tag : tags) {
    double t_ns = rng.uniform_unit() * window * 1e9;
    tag = static_cast<std::int64_t>(t_ns / 10.0) * 10;  // 10 ns granularity
  }
  std::sort(tags.begin(), tags.end());
  return tags;
}

std::string time_tags_text(std::span<const std::int64_t> tags) {
  std::string out;
  for (std::int64_t t : tags) {
    out += std::to_string(t);
    out += '\n';
  }
  return out;
}

}  // namespace shelvesim
