#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "shelvesim/atomic_model.hpp"
#include "shelvesim/manifold.hpp"
#include "shelvesim/rng.hpp"

namespace shelvesim {

// Closed-form shelving error after a drive of duration t:
//   eps(t) = tau_d * a_m1 / (3 zeta) + (1 - zeta/2) * exp(-t zeta / (2 tau_d))
// First term: floor from the M1 leak into D3/2 F=2, one third of which the
// 935 repump strands in the undriven S F=0. Second term: population still
// cycling in the S_F1/D5/2 exchange, weighted by its failure-to-shelve
// probability. t must be >= 0; constants are validated.
double shelving_error_analytic(double t, const AtomicConstants& c);

// The two terms individually, for overlays and budget rows.
double shelving_error_floor(const AtomicConstants& c);
double shelving_error_transient(double t, const AtomicConstants& c);

// Population distribution over the seven manifolds. Deterministic
// counterpart of a single stochastic trajectory.
struct PopulationVector {
  std::array<double, kManifoldCount> p{};

  static PopulationVector pure(Manifold m);
  double sum() const;
  double operator[](Manifold m) const { return p[static_cast<int>(m)]; }
  double& operator[](Manifold m) { return p[static_cast<int>(m)]; }
  double ground_population() const;   // S_F0 + S_F1
};

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  // Allowed drift of sum(p) from 1; the generator rows sum to zero exactly,
  // so larger drift means the integrator failed.
  double conservation_tol = 1e-9;
  std::size_t max_steps = 50'000'000;
};

// Integration could not meet tolerances within max_steps, or probability
// conservation broke.
struct IntegrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Master-equation evolution dp/dt = p Q for duration t (t >= 0). Adaptive
// Dormand-Prince 5(4); throws IntegrationError per OdeOptions.
PopulationVector evolve_ode(const PopulationVector& initial, const RateModel& model,
                            double t, const OdeOptions& options = {});

struct TrajectoryEvent {
  double time;      // absolute time within the evolution, seconds
  Manifold from;
  Manifold to;
};

struct Trajectory {
  Manifold initial;
  Manifold final_state;
  double duration;
  std::vector<TrajectoryEvent> events;
};

// One Gillespie sample of the jump process for duration t. Event times and
// order are reproducible for a given Prng state.
Trajectory sample_trajectory(Manifold initial, const RateModel& model, double t,
                             Prng& rng);

// Same sampler without event recording; returns only the end state.
Manifold evolve_stochastic(Manifold initial, const RateModel& model, double t,
                           Prng& rng);

}  // namespace shelvesim
