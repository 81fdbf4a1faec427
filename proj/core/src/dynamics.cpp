#include "shelvesim/dynamics.hpp"

#include <algorithm>
#include <boost/numeric/odeint.hpp>
#include <cmath>
#include <stdexcept>

namespace shelvesim {

double shelving_error_floor(const AtomicConstants& c) {
  validate(c);
  return c.tau_d * c.a_m1 / (3.0 * c.zeta);
}

double shelving_error_transient(double t, const AtomicConstants& c) {
  validate(c);
  if (!(t >= 0.0)) throw std::invalid_argument("shelving error: t must be >= 0");
  return (1.0 - c.zeta / 2.0) * std::exp(-t * c.zeta / (2.0 * c.tau_d));
}

double shelving_error_analytic(double t, const AtomicConstants& c) {
  return shelving_error_floor(c) + shelving_error_transient(t, c);
}

PopulationVector PopulationVector::pure(Manifold m) {
  PopulationVector v;
  v.p[static_cast<int>(m)] = 1.0;
  return v;
}

double PopulationVector::sum() const {
  double s = 0.0;
  for (double x : p) s += x;
  return s;
}

double PopulationVector::ground_population() const {
  return (*this)[Manifold::S_F0] + (*this)[Manifold::S_F1];
}

namespace {

using State = std::array<double, kManifoldCount>;

struct MasterEquation {
  const RateModel& model;

  void operator()(const State& p, State& dpdt, double /*t*/) const {
    for (int j = 0; j < kManifoldCount; ++j) dpdt[j] = 0.0;
    for (int i = 0; i < kManifoldCount; ++i) {
      double exit = 0.0;
      for (int j = 0; j < kManifoldCount; ++j) {
        double r = model.rate[i][j];
        if (r != 0.0) {
          dpdt[j] += r * p[i];
          exit += r;
        }
      }
      dpdt[i] -= exit * p[i];
    }
  }
};

}  // namespace

PopulationVector evolve_ode(const PopulationVector& initial, const RateModel& model,
                            double t, const OdeOptions& options) {
  if (!(t >= 0.0)) throw std::invalid_argument("evolve_ode: t must be >= 0");
  if (t == 0.0) return initial;

  namespace odeint = boost::numeric::odeint;
  auto stepper = odeint::make_controlled<odeint::runge_kutta_dopri5<State>>(
      options.abs_tol, options.rel_tol);

  State p = initial.p;
  MasterEquation rhs{model};
  // Start near the fastest timescale so the controller does not burn its
  // step budget recovering from a wild first guess.
  double max_rate = 0.0;
  for (int i = 0; i < kManifoldCount; ++i)
    max_rate = std::max(max_rate, model.exit_rate(static_cast<Manifold>(i)));
  double dt = max_rate > 0.0 ? std::min(t, 0.1 / max_rate) : t;

  double time = 0.0;
  std::size_t steps = 0;
  while (time < t) {
    if (time + dt > t) dt = t - time;
    odeint::controlled_step_result result = odeint::fail;
    // A controlled step may shrink dt several times before succeeding; each
    // attempt counts against max_steps.
    do {
      result = stepper.try_step(rhs, p, time, dt);
      if (++steps > options.max_steps)
        throw IntegrationError("evolve_ode: exceeded max_steps before t");
    } while (result == odeint::fail);
  }

  PopulationVector out;
  out.p = p;
  double drift = std::abs(out.sum() - initial.sum());
  if (drift > options.conservation_tol)
    throw IntegrationError("evolve_ode: probability drift " +
                           std::to_string(drift) + " exceeds tolerance");
  return out;
}

namespace {

// Shared Gillespie core; the recorder is a no-op for evolve_stochastic.
template <typename OnJump>
Manifold gillespie(Manifold initial, const RateModel& model, double t, Prng& rng,
                   OnJump&& on_jump) {
  if (!(t >= 0.0))
    throw std::invalid_argument("sample_trajectory: t must be >= 0");
  Manifold state = initial;
  double time = 0.0;
  for (;;) {
    double exit = model.exit_rate(state);
    if (exit <= 0.0) return state;  // absorbing under this configuration
    time += rng.exponential(exit);
    if (time >= t) return state;
    // Inverse-CDF pick over the exit channels, in manifold order.
    double u = rng.uniform_unit() * exit;
    const auto& row = model.rate[static_cast<int>(state)];
    int target = -1;
    double acc = 0.0;
    for (int j = 0; j < kManifoldCount; ++j) {
      acc += row[j];
      if (u < acc) {
        target = j;
        break;
      }
    }
    if (target < 0) {  // u landed on accumulated rounding; take the last channel
      for (int j = kManifoldCount - 1; j >= 0; --j)
        if (row[j] > 0.0) {
          target = j;
          break;
        }
    }
    Manifold next = static_cast<Manifold>(target);
    on_jump(time, state, next);
    state = next;
  }
}

}  // namespace

Trajectory sample_trajectory(Manifold initial, const RateModel& model, double t,
                             Prng& rng) {
  Trajectory traj;
  traj.initial = initial;
  traj.duration = t;
  traj.final_state =
      gillespie(initial, model, t, rng, [&traj](double when, Manifold from, Manifold to) {
        traj.events.push_back({when, from, to});
      });
  return traj;
}

Manifold evolve_stochastic(Manifold initial, const RateModel& model, double t,
                           Prng& rng) {
  return gillespie(initial, model, t, rng, [](double, Manifold, Manifold) {});
}

}  // namespace shelvesim
