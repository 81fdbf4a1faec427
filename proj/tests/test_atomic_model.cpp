// Rate-model construction, constants validation, and RNG primitives.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>

#include "doctest.h"
#include "oracles.hpp"
#include "shelvesim/atomic_model.hpp"
#include "shelvesim/rng.hpp"

using namespace shelvesim;

namespace {

// Canonical stateful splitmix64 stream (public-domain reference algorithm);
// output n of a stream seeded s must equal splitmix64(s + (n-1)*increment).
struct ReferenceSplitMix {
  std::uint64_t state;
  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

LaserConfig lasers_off(const AtomicConstants& c) {
  LaserConfig l = default_lasers(c);
  l.on_411 = l.on_935 = l.on_861 = l.on_deshelve_760 = l.on_976 = false;
  l.on_cooling = false;
  return l;
}

}  // namespace

TEST_CASE("default constants pass validation") {
  AtomicConstants c;
  CHECK_NOTHROW(validate(c));
  CHECK(c.zeta == doctest::Approx(0.824));
  CHECK(c.tau_d == doctest::Approx(7.2e-3));
  CHECK(c.a_m1 == doctest::Approx(kTwoPi * 4.5e-3));
  CHECK(kAM1Measured == doctest::Approx(kTwoPi * 4.1e-3));
  CHECK(c.omega_qubit == doctest::Approx(kTwoPi * 12.64e9));
}

TEST_CASE("constants validation rejects unphysical values") {
  AtomicConstants c;
  c.zeta = 0.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = AtomicConstants{};
  c.zeta = 1.2;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = AtomicConstants{};
  c.tau_d = -1.0;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
  c = AtomicConstants{};
  c.a_m1 = -0.1;
  CHECK_THROWS_AS(validate(c), std::invalid_argument);
}

TEST_CASE("all-lasers-off model has exits only from D5/2") {
  AtomicConstants c;
  RateModel m = build_rate_model(c, lasers_off(c));
  for (Manifold from : all_manifolds()) {
    if (from == Manifold::D52) continue;
    CHECK(m.exit_rate(from) == 0.0);
  }
  CHECK(m.rate[static_cast<int>(Manifold::D52)][static_cast<int>(Manifold::F72)] ==
        doctest::Approx(c.zeta / c.tau_d).epsilon(1e-14));
  CHECK(m.rate[static_cast<int>(Manifold::D52)][static_cast<int>(Manifold::D32_F2)] ==
        doctest::Approx(c.a_m1).epsilon(1e-14));
  CHECK(m.rate[static_cast<int>(Manifold::D52)][static_cast<int>(Manifold::S_F1)] ==
        doctest::Approx((1.0 - c.zeta - c.a_m1 * c.tau_d) / c.tau_d).epsilon(1e-14));
  // The M1 branch is carved out of the total decay, so the exit rate is
  // exactly 1/tau_d.
  CHECK(m.exit_rate(Manifold::D52) == doctest::Approx(1.0 / c.tau_d).epsilon(1e-12));
}

TEST_CASE("411 nm drives a symmetric S(F=1) <-> D5/2 exchange") {
  AtomicConstants c;
  LaserConfig l = lasers_off(c);
  l.on_411 = true;
  RateModel m = build_rate_model(c, l);
  CHECK(m.rate[static_cast<int>(Manifold::S_F1)][static_cast<int>(Manifold::D52)] ==
        doctest::Approx(l.pump_rate_411).epsilon(1e-14));
  CHECK(m.rate[static_cast<int>(Manifold::D52)][static_cast<int>(Manifold::S_F1)] ==
        doctest::Approx(l.pump_rate_411 + (1.0 - c.zeta - c.a_m1 * c.tau_d) / c.tau_d)
            .epsilon(1e-14));
  CHECK(m.exit_rate(Manifold::S_F0) == 0.0);  // |0> is never pumped
}

TEST_CASE("935 nm empties both D3/2 levels with a 1:2 ground split") {
  AtomicConstants c;
  LaserConfig l = lasers_off(c);
  l.on_935 = true;
  RateModel m = build_rate_model(c, l);
  for (Manifold d : {Manifold::D32_F1, Manifold::D32_F2}) {
    CHECK(m.rate[static_cast<int>(d)][static_cast<int>(Manifold::S_F0)] ==
          doctest::Approx(l.repump_rate_935 / 3.0).epsilon(1e-14));
    CHECK(m.rate[static_cast<int>(d)][static_cast<int>(Manifold::S_F1)] ==
          doctest::Approx(2.0 * l.repump_rate_935 / 3.0).epsilon(1e-14));
  }
  CHECK(m.exit_rate(Manifold::F72) == 0.0);
}

TEST_CASE("861 nm empties only D3/2 F=2, entirely into S(F=1)") {
  AtomicConstants c;
  LaserConfig l = lasers_off(c);
  l.on_861 = true;
  RateModel m = build_rate_model(c, l);
  CHECK(m.rate[static_cast<int>(Manifold::D32_F2)][static_cast<int>(Manifold::S_F1)] ==
        doctest::Approx(l.repump_rate_861).epsilon(1e-14));
  CHECK(m.rate[static_cast<int>(Manifold::D32_F2)][static_cast<int>(Manifold::S_F0)] ==
        0.0);
  CHECK(m.exit_rate(Manifold::D32_F1) == 0.0);
}

TEST_CASE("760 nm deshelving moves F7/2 into D3/2 F=1") {
  AtomicConstants c;
  LaserConfig l = lasers_off(c);
  l.on_deshelve_760 = true;
  l.on_976 = true;
  RateModel m = build_rate_model(c, l);
  CHECK(m.rate[static_cast<int>(Manifold::F72)][static_cast<int>(Manifold::D32_F1)] ==
        doctest::Approx(l.deshelve_rate_760).epsilon(1e-14));
  CHECK(m.exit_rate(Manifold::F72) == doctest::Approx(l.deshelve_rate_760));
}

TEST_CASE("generator rows sum to zero") {
  AtomicConstants c;
  LaserConfig l = default_lasers(c);
  l.on_411 = l.on_935 = true;
  RateModel m = build_rate_model(c, l);
  for (Manifold from : all_manifolds()) {
    double row = 0.0;
    for (Manifold to : all_manifolds()) row += m.generator(from, to);
    CHECK(std::fabs(row) < 1e-12);
  }
}

TEST_CASE("slow shelving eigenvalue sits near -zeta / (2 tau_d)") {
  AtomicConstants c;
  LaserConfig l = default_lasers(c);
  l.on_411 = l.on_935 = true;
  double lambda = slow_shelving_eigenvalue(c, l);
  double target = -c.zeta / (2.0 * c.tau_d);
  CHECK(lambda < 0.0);
  CHECK(std::fabs(lambda - target) < 0.01 * std::fabs(target));

  // The value must satisfy the characteristic polynomial of the
  // S(F=1)/D5/2 block exactly.
  RateModel m = build_rate_model(c, l);
  double a = -m.exit_rate(Manifold::S_F1);
  double b = m.rate[static_cast<int>(Manifold::D52)][static_cast<int>(Manifold::S_F1)];
  double cc = m.rate[static_cast<int>(Manifold::S_F1)][static_cast<int>(Manifold::D52)];
  double d = -m.exit_rate(Manifold::D52);
  double residual = (a - lambda) * (d - lambda) - b * cc;
  CHECK(std::fabs(residual) < 1e-6 * std::fabs(a * d));
}

TEST_CASE("splitmix64 matches the reference stream") {
  constexpr std::uint64_t kIncrement = 0x9e3779b97f4a7c15ULL;
  for (std::uint64_t seed : {0ULL, 1ULL, 20200828ULL, 0xdeadbeefULL}) {
    ReferenceSplitMix ref{seed};
    CHECK(splitmix64(seed) == ref.next());
    CHECK(splitmix64(seed + kIncrement) == ref.next());
    CHECK(splitmix64(seed + 2 * kIncrement) == ref.next());
  }
}

TEST_CASE("shot streams are deterministic and index-separated") {
  Prng a = shot_rng(42, 7);
  Prng b = shot_rng(42, 7);
  Prng c = shot_rng(42, 8);
  CHECK(a.raw() == b.raw());
  CHECK(a.raw() == b.raw());
  Prng a2 = shot_rng(42, 7);
  CHECK(a2.raw() != c.raw());  // adjacent indices decorrelate
}

TEST_CASE("uniform_unit stays in [0, 1) with mean 1/2") {
  Prng rng(123);
  double sum = 0.0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) {
    double u = rng.uniform_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  // sigma of the mean is 1/sqrt(12 n) ~ 9.1e-4; allow 5 sigma.
  CHECK(std::fabs(sum / n - 0.5) < 5.0 / std::sqrt(12.0 * n));
}

TEST_CASE("exponential sampling has the right mean") {
  Prng rng(77);
  double rate = 140.0;
  double sum = 0.0;
  constexpr int n = 100000;
  for (int i = 0; i < n; ++i) sum += rng.exponential(rate);
  CHECK(std::fabs(sum / n - 1.0 / rate) < 5.0 / (rate * std::sqrt(double(n))));
  CHECK_THROWS_AS(rng.exponential(0.0), std::invalid_argument);
}

TEST_CASE("poisson_draw reproduces mean and variance") {
  Prng rng(99);
  for (double mean : {3.5, 700.0}) {  // second case exercises chunking
    const int n = mean > 100 ? 20000 : 100000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      double k = poisson_draw(rng, mean);
      sum += k;
      sum_sq += k * k;
    }
    double m = sum / n;
    double var = sum_sq / n - m * m;
    CHECK(std::fabs(m - mean) < 5.0 * std::sqrt(mean / n));
    CHECK(std::fabs(var - mean) < 0.1 * mean);
  }
  CHECK(poisson_draw(rng, 0.0) == 0);
}

TEST_CASE("deshelve rate solver hits 1/e survival through the chain") {
  AtomicConstants c;
  double repump = 1e4;
  double r = deshelve_rate_for_return(c.tau_deshelve, repump);
  CHECK(r == doctest::Approx(4285.073743869078).epsilon(1e-12));
  // Survival of the two-step chain F7/2 -> D3/2 -> S after time tau:
  // (r e^{-b tau} - b e^{-r tau}) / (r - b) with b the repump rate.
  long double t = c.tau_deshelve;
  long double remaining = (static_cast<long double>(r) * std::exp(-repump * t) -
                           repump * std::exp(-r * t)) /
                          (r - repump);
  CHECK(std::fabs(static_cast<double>(remaining) - std::exp(-1.0)) < 1e-9);
}

TEST_CASE("laser validation rejects enabled channels with zero rate") {
  AtomicConstants c;
  LaserConfig l = default_lasers(c);
  l.on_935 = true;
  l.repump_rate_935 = 0.0;
  CHECK_THROWS_AS(validate(l), std::invalid_argument);
  l = default_lasers(c);
  l.pump_rate_411 = -3.0;
  CHECK_THROWS_AS(validate(l), std::invalid_argument);
}

TEST_CASE("manifold helpers agree on fluorescence and shelving") {
  std::set<Manifold> seen;
  for (Manifold m : all_manifolds()) {
    seen.insert(m);
    auto back = manifold_from_string(to_string(m));
    REQUIRE(back.has_value());
    CHECK(*back == m);
    CHECK(fluoresces(m) == (m == Manifold::S_F0 || m == Manifold::S_F1));
    CHECK(is_shelved(m) == (m == Manifold::D52 || m == Manifold::F72));
  }
  CHECK(seen.size() == static_cast<std::size_t>(kManifoldCount));
  CHECK_FALSE(manifold_from_string("nonsense").has_value());
}
