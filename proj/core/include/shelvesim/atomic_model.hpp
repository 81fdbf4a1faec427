#pragma once

#include <array>

#include "shelvesim/manifold.hpp"

namespace shelvesim {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Fixed properties of the 171Yb+ level structure used by the rate model.
// Rates are s^-1 (angular where they originate from angular frequencies),
// times are seconds.
struct AtomicConstants {
  double zeta = 0.824;              // D5/2 branching fraction to F7/2
  double tau_d = 7.2e-3;            // D5/2 lifetime
  double a_m1 = kTwoPi * 4.5e-3;    // rare M1 leak D5/2 -> D3/2 F=2
  double tau_deshelve = 350e-6;     // target 1/e ground-state return time
  double gamma_411 = kTwoPi * 22.0; // natural linewidth of the 411 nm line
  double omega_qubit = kTwoPi * 12.64e9;  // hyperfine qubit splitting
};

// Measured value of the M1 leak rate, as opposed to the theory default
// stored in AtomicConstants.
inline constexpr double kAM1Measured = kTwoPi * 4.1e-3;

// Throws std::invalid_argument on: zeta outside (0, 1], non-positive tau_d
// or tau_deshelve, negative a_m1, a_m1 * tau_d >= 1e-2 (the error law
// treats the leak perturbatively and is meaningless outside the weak-decay
// regime), or zeta + a_m1 * tau_d > 1 (D5/2 branchings must sum to 1).
void validate(const AtomicConstants& c);

// Which lasers are on during a phase of the sequence, and the incoherent
// rates they drive. Flags select channels; rates set their magnitude.
struct LaserConfig {
  bool on_411 = false;           // shelving drive S_F1 <-> D5/2
  bool on_935 = false;           // repump D3/2 -> S (both F levels)
  bool on_861 = false;           // depump D3/2 F=2 -> S_F1 (alternative scheme)
  bool on_deshelve_760 = false;  // F7/2 -> D3/2 F=1 (976 assist folded in)
  bool on_976 = false;           // bookkeeping only; no separate channel
  bool on_cooling = false;       // 370 nm cooling/detection light

  double pump_rate_411 = 50.0 / 7.2e-3;  // saturated two-way exchange rate
  double repump_rate_935 = 1.0e4;
  double repump_rate_861 = 1.0e4;
  double deshelve_rate_760 = 4285.073743869078;  // see deshelve_rate_for_return
};

// Throws std::invalid_argument if any rate attached to an enabled flag is
// non-positive or non-finite.
void validate(const LaserConfig& lasers);

// Rate that makes the two-step return chain F7/2 -> D3/2 -> S reach 1/e
// remaining ground-state deficit at tau_return, given the repump rate of the
// second step. Throws std::invalid_argument when no rate can achieve it
// (tau_return <= 1/repump_rate leaves the second step too slow on its own).
double deshelve_rate_for_return(double tau_return, double repump_rate);

// Default laser rates consistent with the given constants: 411 exchange at
// 50/tau_d, repumps at 1e4 s^-1, 760 solved for tau_deshelve. Flags all off.
LaserConfig default_lasers(const AtomicConstants& c);

// Markov generator over the seven manifolds. rate[i][j] is the transition
// rate i -> j (i != j); diagonal entries are zero, exits are implicit.
struct RateModel {
  std::array<std::array<double, kManifoldCount>, kManifoldCount> rate{};

  double exit_rate(Manifold from) const;
  // Generator matrix row for ODE integration: Q[i][i] = -exit, rows sum to 0.
  double generator(Manifold from, Manifold to) const;
};

// Assembles the channel set for one phase. D5/2 always exits at 1/tau_d,
// branching zeta to F7/2, a_m1 * tau_d to D3/2 F=2 (the M1 leak), and the
// remainder back to S_F1. D3/2 and F7/2 have no spontaneous exits on these
// timescales; they empty only through the enabled lasers:
//   on_411:          S_F1 -> D5/2 and stimulated D5/2 -> S_F1, both at
//                    pump_rate_411 (saturated two-way exchange)
//   on_935:          each D3/2 level -> S_F0 at repump_rate_935 / 3 and
//                    -> S_F1 at 2/3 of it (collapsed E1 return path)
//   on_861:          D3/2 F=2 -> S_F1 at repump_rate_861 (F-selective)
//   on_deshelve_760: F7/2 -> D3/2 F=1 at deshelve_rate_760
// on_cooling and on_976 add no channels. Validates both inputs first.
RateModel build_rate_model(const AtomicConstants& c, const LaserConfig& lasers);

// Slow relaxation eigenvalue (negative, s^-1) of the S_F1/D5/2 exchange
// block under the given configuration, treating branches out of the pair as
// absorption. For the default shelving configuration this sits within 5% of
// -zeta / (2 tau_d), the decay constant of the transient error term.
double slow_shelving_eigenvalue(const AtomicConstants& c, const LaserConfig& lasers);

}  // namespace shelvesim
