#pragma once

#include <cstdint>
#include <random>

namespace shelvesim {

// Every random draw in the simulator flows through this wrapper so that a
// (base_seed, shot_index) pair fully determines a shot, independent of how
// shots are batched across worker threads.
class Prng {
 public:
  explicit Prng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1) with 53 significant bits; never returns 1.0.
  double uniform_unit() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Exponential waiting time for a Poisson process of the given rate (s^-1).
  // rate must be > 0. Uses -log1p(-u) so u = 0 maps to 0, not -0.0 noise.
  double exponential(double rate);

 private:
  std::mt19937_64 gen_;
};

// splitmix64 finalizer; decorrelates consecutive shot indices before they
// seed the per-shot mt19937_64 stream.
std::uint64_t splitmix64(std::uint64_t x);

// Independent stream for one shot of a campaign.
Prng shot_rng(std::uint64_t base_seed, std::uint64_t shot_index);

// Poisson variate by Knuth's product method, chunked so the running product
// stays representable for large means. mean must be >= 0 and finite.
int poisson_draw(Prng& rng, double mean);

}  // namespace shelvesim
