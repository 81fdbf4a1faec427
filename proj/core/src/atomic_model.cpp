#include "shelvesim/atomic_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "shelvesim/manifold.hpp"
#include "shelvesim/rng.hpp"

namespace shelvesim {

std::string_view to_string(Manifold m) {
  switch (m) {
    case Manifold::S_F0: return "S_F0";
    case Manifold::S_F1: return "S_F1";
    case Manifold::D52: return "D52";
    case Manifold::D32_F1: return "D32_F1";
    case Manifold::D32_F2: return "D32_F2";
    case Manifold::F72: return "F72";
    case Manifold::LOST: return "LOST";
  }
  return "?";
}

std::optional<Manifold> manifold_from_string(std::string_view name) {
  for (Manifold m : all_manifolds()) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

double Prng::exponential(double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
  return -std::log1p(-uniform_unit()) / rate;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Prng shot_rng(std::uint64_t base_seed, std::uint64_t shot_index) {
  return Prng(splitmix64(base_seed + shot_index));
}

int poisson_draw(Prng& rng, double mean) {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("poisson_draw: mean must be finite and >= 0");
  int total = 0;
  // Knuth's product method per chunk; e^-500 is still normal, so the
  // running product never underflows within a chunk.
  while (mean > 0.0) {
    double chunk = mean > 500.0 ? 500.0 : mean;
    mean -= chunk;
    double limit = std::exp(-chunk);
    double product = rng.uniform_unit();
    while (product >= limit) {
      ++total;
      product *= rng.uniform_unit();
    }
  }
  return total;
}

void validate(const AtomicConstants& c) {
  if (!(c.zeta > 0.0 && c.zeta <= 1.0))
    throw std::invalid_argument("constants: zeta must lie in (0, 1]");
  if (!(c.tau_d > 0.0) || !std::isfinite(c.tau_d))
    throw std::invalid_argument("constants: tau_d must be positive");
  if (!(c.a_m1 >= 0.0) || !std::isfinite(c.a_m1))
    throw std::invalid_argument("constants: a_m1 must be >= 0");
  if (!(c.tau_deshelve > 0.0) || !std::isfinite(c.tau_deshelve))
    throw std::invalid_argument("constants: tau_deshelve must be positive");
  // The error law treats the M1 leak perturbatively; outside this regime
  // its closed form (and the budget arithmetic built on it) is invalid.
  if (c.a_m1 * c.tau_d >= 1e-2)
    throw std::invalid_argument(
        "constants: a_m1 * tau_d = " + std::to_string(c.a_m1 * c.tau_d) +
        " leaves the weak-decay regime (must be < 1e-2)");
  if (c.zeta + c.a_m1 * c.tau_d > 1.0)
    throw std::invalid_argument(
        "constants: zeta + a_m1 * tau_d exceeds 1, D5/2 branchings invalid");
}

void validate(const LaserConfig& lasers) {
  auto need = [](bool on, double rate, const char* name) {
    if (on && (!(rate > 0.0) || !std::isfinite(rate)))
      throw std::invalid_argument(std::string("lasers: enabled ") + name +
                                  " needs a positive finite rate");
  };
  need(lasers.on_411, lasers.pump_rate_411, "411 drive");
  need(lasers.on_935, lasers.repump_rate_935, "935 repump");
  need(lasers.on_861, lasers.repump_rate_861, "861 depump");
  need(lasers.on_deshelve_760, lasers.deshelve_rate_760, "760 deshelve");
  for (double r : {lasers.pump_rate_411, lasers.repump_rate_935,
                   lasers.repump_rate_861, lasers.deshelve_rate_760}) {
    if (r < 0.0 || !std::isfinite(r))
      throw std::invalid_argument("lasers: rates must be finite and >= 0");
  }
}

double deshelve_rate_for_return(double tau_return, double repump_rate) {
  if (!(tau_return > 0.0) || !(repump_rate > 0.0))
    throw std::invalid_argument("deshelve solve: times and rates must be > 0");
  // Ground-state return through F7/2 -> D3/2 -> S with step rates (r, b):
  //   P_not_returned(t) = (r e^{-b t} - b e^{-r t}) / (r - b)
  // Monotone decreasing in r at fixed t, but even r -> infinity cannot beat
  // the repump-only bound e^{-b t}.
  double b = repump_rate;
  double t = tau_return;
  double target = std::exp(-1.0);
  if (std::exp(-b * t) >= target)
    throw std::invalid_argument(
        "deshelve solve: repump too slow to reach 1/e return at tau_return");
  auto remaining = [&](double r) {
    if (std::abs(r - b) < 1e-9 * b)  // confluent limit r = b
      return std::exp(-b * t) * (1.0 + b * t);
    return (r * std::exp(-b * t) - b * std::exp(-r * t)) / (r - b);
  };
  double lo = 1e-12, hi = 1.0;
  while (remaining(hi) > target) hi *= 2.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    (remaining(mid) > target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

LaserConfig default_lasers(const AtomicConstants& c) {
  validate(c);
  LaserConfig lasers;
  lasers.pump_rate_411 = 50.0 / c.tau_d;
  lasers.repump_rate_935 = 1.0e4;
  lasers.repump_rate_861 = 1.0e4;
  lasers.deshelve_rate_760 =
      deshelve_rate_for_return(c.tau_deshelve, lasers.repump_rate_935);
  return lasers;
}

double RateModel::exit_rate(Manifold from) const {
  double sum = 0.0;
  for (double r : rate[static_cast<int>(from)]) sum += r;
  return sum;
}

double RateModel::generator(Manifold from, Manifold to) const {
  if (from == to) return -exit_rate(from);
  return rate[static_cast<int>(from)][static_cast<int>(to)];
}

RateModel build_rate_model(const AtomicConstants& c, const LaserConfig& lasers) {
  validate(c);
  validate(lasers);
  RateModel m;
  auto add = [&m](Manifold from, Manifold to, double r) {
    if (r != 0.0) m.rate[static_cast<int>(from)][static_cast<int>(to)] += r;
  };

  // D5/2 exits at 1/tau_d total: fraction zeta to the F7/2 shelf, the M1
  // leak a_m1 * tau_d to D3/2 F=2, remainder recycled to S_F1.
  double gd = 1.0 / c.tau_d;
  add(Manifold::D52, Manifold::F72, c.zeta * gd);
  add(Manifold::D52, Manifold::D32_F2, c.a_m1);
  add(Manifold::D52, Manifold::S_F1, (1.0 - c.zeta - c.a_m1 * c.tau_d) * gd);

  // Saturated 411 nm drive: equal stimulated exchange both ways.
  if (lasers.on_411) {
    add(Manifold::S_F1, Manifold::D52, lasers.pump_rate_411);
    add(Manifold::D52, Manifold::S_F1, lasers.pump_rate_411);
  }
  // Collapsed 935 return path; the 1/3 into the undriven S F=0 is what
  // turns the M1 leak into a shelving error.
  if (lasers.on_935) {
    for (Manifold d32 : {Manifold::D32_F1, Manifold::D32_F2}) {
      add(d32, Manifold::S_F0, lasers.repump_rate_935 / 3.0);
      add(d32, Manifold::S_F1, lasers.repump_rate_935 * 2.0 / 3.0);
    }
  }
  // F-selective 861 path returns everything to S F=1, so it closes the
  // M1-leak error channel instead of feeding it.
  if (lasers.on_861) {
    add(Manifold::D32_F2, Manifold::S_F1, lasers.repump_rate_861);
  }
  // Deshelve excitation lands in D3/2 F=1 (976 assist folded in); the 935
  // repump completes the return.
  if (lasers.on_deshelve_760) {
    add(Manifold::F72, Manifold::D32_F1, lasers.deshelve_rate_760);
  }
  return m;
}

double slow_shelving_eigenvalue(const AtomicConstants& c, const LaserConfig& lasers) {
  RateModel m = build_rate_model(c, lasers);
  // 2x2 block over (S_F1, D5/2); branches elsewhere act as absorption, so
  // the block generator is the full generator restricted to the pair.
  double a11 = -m.exit_rate(Manifold::S_F1);
  double a12 = m.rate[static_cast<int>(Manifold::D52)][static_cast<int>(Manifold::S_F1)];
  double a21 = m.rate[static_cast<int>(Manifold::S_F1)][static_cast<int>(Manifold::D52)];
  double a22 = -m.exit_rate(Manifold::D52);
  double tr = a11 + a22;
  double det = a11 * a22 - a12 * a21;
  double disc = tr * tr - 4.0 * det;
  if (disc < 0.0) disc = 0.0;  // the block is dissipative; roots are real
  return 0.5 * (tr + std::sqrt(disc));
}

}  // namespace shelvesim
