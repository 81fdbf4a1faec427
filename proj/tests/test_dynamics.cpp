// Analytic error model, master-equation integration, and trajectory sampling.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "shelvesim/atomic_model.hpp"
#include "shelvesim/dynamics.hpp"
#include "shelvesim/rng.hpp"

using namespace shelvesim;

namespace {

LaserConfig shelve_lasers(const AtomicConstants& c, bool use_861 = false) {
  LaserConfig l = default_lasers(c);
  l.on_411 = true;
  l.on_935 = !use_861;
  l.on_861 = use_861;
  return l;
}

oracle::Vec7 to_vec(const PopulationVector& p) {
  oracle::Vec7 v{};
  for (int i = 0; i < kManifoldCount; ++i) v[i] = p.p[i];
  return v;
}

}  // namespace

TEST_CASE("analytic error model reproduces its fixed points") {
  AtomicConstants c;
  // Asymptotic floor tau_d A / (3 zeta) and the 200 ms transient, evaluated
  // independently with long doubles when these tests were frozen.
  CHECK(shelving_error_floor(c) ==
        doctest::Approx(8.235242878342176e-05).epsilon(1e-12));
  CHECK(shelving_error_transient(0.2, c) ==
        doctest::Approx(6.296776164076787e-06).epsilon(1e-12));
  CHECK(shelving_error_analytic(0.2, c) ==
        doctest::Approx(8.864920494749855e-05).epsilon(1e-12));

  AtomicConstants measured = c;
  measured.a_m1 = kAM1Measured;
  CHECK(shelving_error_floor(measured) ==
        doctest::Approx(7.503221289156205e-05).epsilon(1e-12));

  // The transient decays with eigenvalue zeta / (2 tau_d).
  double ratio = shelving_error_transient(0.2, c) / shelving_error_transient(0.1, c);
  CHECK(ratio == doctest::Approx(std::exp(-0.1 * c.zeta / (2.0 * c.tau_d))));
  CHECK(shelving_error_analytic(1e4, c) ==
        doctest::Approx(shelving_error_floor(c)).epsilon(1e-12));
  CHECK_THROWS_AS(shelving_error_analytic(-1.0, c), std::invalid_argument);
}

TEST_CASE("population vector bookkeeping") {
  PopulationVector p = PopulationVector::pure(Manifold::S_F1);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p[Manifold::S_F1] == doctest::Approx(1.0));
  CHECK(p.ground_population() == doctest::Approx(1.0));
  PopulationVector d = PopulationVector::pure(Manifold::F72);
  CHECK(d.ground_population() == doctest::Approx(0.0));
}

TEST_CASE("ODE evolution matches a long-double matrix exponential") {
  AtomicConstants c;
  RateModel model = build_rate_model(c, shelve_lasers(c));
  PopulationVector p0 = PopulationVector::pure(Manifold::S_F1);
  for (double t : {1e-3, 2e-2, 0.2}) {
    PopulationVector p = evolve_ode(p0, model, t);
    oracle::Vec7 exact = oracle::evolve_exact(model, to_vec(p0), t);
    for (int i = 0; i < kManifoldCount; ++i)
      CHECK(std::fabs(p.p[i] - static_cast<double>(exact[i])) < 1e-9);
    CHECK(std::fabs(p.sum() - 1.0) < 1e-9);
  }
}

TEST_CASE("ODE evolution matches the exponential under the 861 scheme") {
  AtomicConstants c;
  RateModel model = build_rate_model(c, shelve_lasers(c, true));
  PopulationVector p0 = PopulationVector::pure(Manifold::S_F1);
  PopulationVector p = evolve_ode(p0, model, 0.175);
  oracle::Vec7 exact = oracle::evolve_exact(model, to_vec(p0), 0.175L);
  for (int i = 0; i < kManifoldCount; ++i)
    CHECK(std::fabs(p.p[i] - static_cast<double>(exact[i])) < 1e-9);
}

TEST_CASE("absorbing states stay put under the ODE") {
  AtomicConstants c;
  LaserConfig off = default_lasers(c);
  off.on_411 = off.on_935 = off.on_861 = off.on_deshelve_760 = off.on_976 = false;
  off.on_cooling = false;
  RateModel model = build_rate_model(c, off);
  PopulationVector p = evolve_ode(PopulationVector::pure(Manifold::S_F0), model, 1.0);
  CHECK(p[Manifold::S_F0] == doctest::Approx(1.0).epsilon(1e-12));
  PopulationVector f = evolve_ode(PopulationVector::pure(Manifold::F72), model, 1.0);
  CHECK(f[Manifold::F72] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("step budget violations raise IntegrationError") {
  AtomicConstants c;
  RateModel model = build_rate_model(c, shelve_lasers(c));
  OdeOptions opts;
  opts.max_steps = 3;
  CHECK_THROWS_AS(
      evolve_ode(PopulationVector::pure(Manifold::S_F1), model, 0.2, opts),
      IntegrationError);
}

TEST_CASE("zero-duration evolution is the identity") {
  AtomicConstants c;
  RateModel model = build_rate_model(c, shelve_lasers(c));
  PopulationVector p = evolve_ode(PopulationVector::pure(Manifold::S_F1), model, 0.0);
  CHECK(p[Manifold::S_F1] == doctest::Approx(1.0).epsilon(1e-15));
  Prng rng(5);
  CHECK(evolve_stochastic(Manifold::S_F1, model, 0.0, rng) == Manifold::S_F1);
}

TEST_CASE("trajectories are causally ordered and internally consistent") {
  AtomicConstants c;
  RateModel model = build_rate_model(c, shelve_lasers(c));
  Prng rng = shot_rng(31, 0);
  int with_events = 0;
  for (int i = 0; i < 200; ++i) {
    Trajectory tr = sample_trajectory(Manifold::S_F1, model, 0.05, rng);
    CHECK(tr.initial == Manifold::S_F1);
    CHECK(tr.duration == doctest::Approx(0.05));
    Manifold at = tr.initial;
    double last = 0.0;
    for (const TrajectoryEvent& ev : tr.events) {
      REQUIRE(ev.time >= last);
      REQUIRE(ev.time <= tr.duration);
      REQUIRE(ev.from == at);
      REQUIRE(ev.from != ev.to);
      at = ev.to;
      last = ev.time;
    }
    CHECK(at == tr.final_state);
    if (!tr.events.empty()) ++with_events;
  }
  CHECK(with_events == 200);  // the 411 exchange always fires within 50 ms
}

TEST_CASE("trajectory sampling reproduces ODE populations") {
  AtomicConstants c;
  RateModel model = build_rate_model(c, shelve_lasers(c));
  constexpr int n = 20000;
  const double t = 0.03;
  int shelved = 0;
  for (int i = 0; i < n; ++i) {
    Prng rng = shot_rng(417, i);
    Manifold m = evolve_stochastic(Manifold::S_F1, model, t, rng);
    if (is_shelved(m)) ++shelved;
  }
  PopulationVector p =
      evolve_ode(PopulationVector::pure(Manifold::S_F1), model, t);
  double expected = p[Manifold::D52] + p[Manifold::F72];
  double sigma = std::sqrt(expected * (1.0 - expected) / n);
  CHECK(std::fabs(double(shelved) / n - expected) < 4.0 * sigma);
}

TEST_CASE("spontaneous D5/2 decay branches with the configured ratios") {
  AtomicConstants c;
  LaserConfig off = default_lasers(c);
  off.on_411 = off.on_935 = off.on_861 = off.on_deshelve_760 = off.on_976 = false;
  off.on_cooling = false;
  RateModel model = build_rate_model(c, off);
  constexpr int n = 40000;
  int to_f72 = 0, to_leak = 0, to_ground = 0;
  for (int i = 0; i < n; ++i) {
    Prng rng = shot_rng(902, i);
    Manifold m = evolve_stochastic(Manifold::D52, model, 1.0, rng);
    if (m == Manifold::F72) ++to_f72;
    else if (m == Manifold::D32_F2) ++to_leak;
    else if (m == Manifold::S_F1) ++to_ground;
  }
  CHECK(to_f72 + to_leak + to_ground == n);
  auto near = [n](int count, double p_true, double n_sigma) {
    double sigma = std::sqrt(p_true * (1.0 - p_true) / n);
    return std::fabs(double(count) / n - p_true) < n_sigma * sigma;
  };
  CHECK(near(to_f72, c.zeta, 4.0));
  CHECK(near(to_leak, c.a_m1 * c.tau_d, 4.0));
  CHECK(near(to_ground, 1.0 - c.zeta - c.a_m1 * c.tau_d, 4.0));
}
