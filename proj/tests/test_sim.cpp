#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <memory>

#include "relaytune/sim.hpp"

using namespace relaytune;

namespace {

BlockDiagram pure_integrator() {
  return BlockDiagram::leaf(integrator_block());
}

}  // namespace

TEST_CASE("integrator under unit proportional feedback approaches 1 - exp(-t)") {
  PDLaw law(PDGains{1.0, 0.0});
  SimConfig cfg;
  cfg.duration = 5.0;
  auto ts = simulate(pure_integrator(), law, Setpoint::step(1.0), cfg);
  REQUIRE(ts.t.size() == 5000);
  double worst = 0.0;
  for (size_t i = 0; i < ts.t.size(); ++i) {
    double exact = 1.0 - std::exp(-ts.t[i]);
    worst = std::max(worst, std::abs(ts.pv[i] - exact));
    CHECK(ts.r[i] == 1.0);
  }
  CHECK(worst < 1e-6);
  // logged control output is the instantaneous proportional action
  CHECK(ts.u[0] == doctest::Approx(1.0));
  CHECK(ts.u[3000] == doctest::Approx(std::exp(-3.0)).epsilon(1e-4));
}

TEST_CASE("mean squared step error matches the closed form for a first-order loop") {
  // e(t) = exp(-t), so (1/T) int e^2 = (1 - exp(-2T)) / (2T)
  double t_s = 5.0;
  double q = ise_unit_step(PDGains{1.0, 0.0}, pure_integrator(), t_s);
  double exact = (1.0 - std::exp(-2.0 * t_s)) / (2.0 * t_s);
  CHECK(q == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("constant plant input drives exact hold-equivalent responses") {
  ZeroLaw zero;
  SimConfig cfg;
  cfg.duration = 2.0;
  cfg.bias = 1.0;

  SUBCASE("lag then integrator") {
    // the inter-stage signal is exponential, so the first-order-hold corrector
    // leaves a dt^2/12 trapezoid residue: about 1.7e-9 here, far under the
    // 1e-6 budget of the engine
    auto plant = BlockDiagram::series(
        {BlockDiagram::leaf(first_order_block(0.5)), BlockDiagram::leaf(integrator_block())});
    auto ts = simulate(plant, zero, Setpoint::step(0.0), cfg);
    for (size_t i = 0; i < ts.t.size(); i += 97) {
      double t = ts.t[i];
      double exact = t - 0.5 * (1.0 - std::exp(-t / 0.5));
      CHECK(std::abs(ts.pv[i] - exact) < 5e-9);
    }
  }

  SUBCASE("transport delay ahead of an integrator") {
    auto delayed = integrator_block();
    delayed.delay = 0.05;
    auto plant = BlockDiagram::leaf(delayed);
    auto ts = simulate(plant, zero, Setpoint::step(0.0), cfg);
    for (size_t i = 0; i < ts.t.size(); i += 53) {
      double exact = std::max(0.0, ts.t[i] - 0.05);
      CHECK(std::abs(ts.pv[i] - exact) < 1e-9);
    }
  }
}

TEST_CASE("responses scale linearly with the setpoint, bit for bit") {
  auto plant = BlockDiagram::series(
      {BlockDiagram::leaf(first_order_block(0.2)), BlockDiagram::leaf(integrator_block())});
  SimConfig cfg;
  cfg.duration = 3.0;
  PDLaw a(PDGains{0.8, 0.3}), b(PDGains{0.8, 0.3});
  auto one = simulate(plant, a, Setpoint::step(1.0), cfg);
  auto two = simulate(plant, b, Setpoint::step(2.0), cfg);
  for (size_t i = 0; i < one.pv.size(); ++i) {
    CHECK(two.pv[i] == 2.0 * one.pv[i]);
    CHECK(two.u[i] == 2.0 * one.u[i]);
  }
}

TEST_CASE("identical seeds reproduce noisy runs exactly; seeds matter") {
  auto plant = pure_integrator();
  SimConfig cfg;
  cfg.duration = 1.0;
  cfg.noise_sigma = 1e-3;
  cfg.seed = 42;
  PDLaw l1(PDGains{1.0, 0.0}), l2(PDGains{1.0, 0.0}), l3(PDGains{1.0, 0.0});
  auto a = simulate(plant, l1, Setpoint::step(1.0), cfg);
  auto b = simulate(plant, l2, Setpoint::step(1.0), cfg);
  REQUIRE(a.pv.size() == b.pv.size());
  CHECK(std::memcmp(a.pv.data(), b.pv.data(), a.pv.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.u.data(), b.u.data(), a.u.size() * sizeof(double)) == 0);

  cfg.seed = 43;
  auto c = simulate(plant, l3, Setpoint::step(1.0), cfg);
  bool any_diff = false;
  for (size_t i = 0; i < a.pv.size(); ++i) any_diff |= (a.pv[i] != c.pv[i]);
  CHECK(any_diff);
}

TEST_CASE("halving the internal step moves the trajectory by under 0.1 percent") {
  InnerParams p{0.03, 0.3, 0.015, 3.0};
  auto plant = inner_plant(p);
  SimConfig coarse;
  coarse.duration = 10.0;
  SimConfig fine = coarse;
  fine.internal_step = 5e-5;
  PDLaw la(PDGains{0.5, 0.2}), lb(PDGains{0.5, 0.2});
  auto a = simulate(plant, la, Setpoint::step(1.0), coarse);
  auto b = simulate(plant, lb, Setpoint::step(1.0), fine);
  REQUIRE(a.pv.size() == b.pv.size());
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < a.pv.size(); ++i) {
    num = std::max(num, std::abs(a.pv[i] - b.pv[i]));
    den = std::max(den, std::abs(b.pv[i]));
  }
  CHECK(num / den < 1e-3);
}

TEST_CASE("unstable loops trip the divergence guard") {
  InnerParams p{0.015, 0.2, 0.1, 100.0};
  auto plant = inner_plant(p);
  PDLaw law(PDGains{50.0, 0.0});
  SimConfig cfg;
  cfg.duration = 30.0;
  CHECK_THROWS_AS(simulate(plant, law, Setpoint::step(1.0), cfg), SimDivergence);
  CHECK_THROWS_AS(ise_unit_step(PDGains{50.0, 0.0}, plant, 30.0), SimDivergence);
}

TEST_CASE("quiescent loops stay at zero") {
  ZeroLaw law;
  SimConfig cfg;
  cfg.duration = 1.0;
  auto ts = simulate(inner_plant(InnerParams{0.05, 0.5, 0.02, 2.0}), law, Setpoint::step(0.0),
                     cfg);
  for (double v : ts.pv) CHECK(v == 0.0);
  for (double v : ts.u) CHECK(v == 0.0);
}

TEST_CASE("proportional-integral law integrates with the trapezoid rule") {
  PILaw law(PIGains{2.0, 0.5});
  law.reset();
  // error ramps 0 -> 1 over ten steps of 0.1 s
  double e_prev = 0.0;
  for (int i = 1; i <= 10; ++i) {
    double e = 0.1 * i;
    law.output(e_prev, 0.0, i - 1);
    law.commit(e_prev, e, 0.1);
    e_prev = e;
  }
  // int_0^1 0.5 t dt = 0.25, trapezoid is exact on a linear ramp
  CHECK(law.integral() == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(law.output(1.0, 0.0, 10) == doctest::Approx(2.0 + 0.25).epsilon(1e-12));
}

TEST_CASE("configuration and diagram validation") {
  PDLaw law(PDGains{1.0, 0.0});
  SimConfig bad;
  bad.log_step = 2.5e-4;  // not an integer multiple of 1e-4
  CHECK_THROWS_AS(simulate(pure_integrator(), law, Setpoint::step(1.0), bad), SimError);
  SimConfig neg;
  neg.duration = -1.0;
  CHECK_THROWS_AS(simulate(pure_integrator(), law, Setpoint::step(1.0), neg), SimError);

  // direct-feedthrough output has no well-posed loop error
  auto gain_only = BlockDiagram::leaf(gain_block(2.0));
  SimConfig cfg;
  CHECK_THROWS_AS(simulate(gain_only, law, Setpoint::step(1.0), cfg), SimError);
}
