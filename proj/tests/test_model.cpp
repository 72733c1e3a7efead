#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>

#include "relaytune/model.hpp"

using namespace relaytune;
using cplx = std::complex<double>;

namespace {

const double pi = 3.14159265358979323846;

// independent evaluation of k e^{-tau s}/(s (tp s+1)(t1 s+1)) factor by factor
cplx inner_ref(double tp, double t1, double tau, double k, double w) {
  cplx jw(0.0, w);
  cplx g = k * std::exp(-jw * tau);
  g /= jw;
  g /= (tp * jw + 1.0);
  g /= (t1 * jw + 1.0);
  return g;
}

double inner_phase_deg(double tp, double t1, double tau, double w) {
  return (-pi / 2 - std::atan(tp * w) - std::atan(t1 * w) - tau * w) * 180.0 / pi;
}

}  // namespace

TEST_CASE("frequency response of the attitude-form plant matches factorwise arithmetic") {
  InnerParams p{0.1, 0.5, 0.05, 1.0};
  auto d = inner_plant(p);
  cplx g = freq_response(d, 2.0);
  cplx ref = inner_ref(0.1, 0.5, 0.05, 1.0, 2.0);
  CHECK(std::abs(g - ref) < 1e-12);
  CHECK(std::abs(g) == doctest::Approx(0.3467).epsilon(1e-3));
  CHECK(std::arg(g) * 180.0 / pi == doctest::Approx(-152.0).epsilon(1e-3));
}

TEST_CASE("phase tends to -90 degrees at low frequency for a single integrator") {
  auto d = inner_plant({0.2, 1.0, 0.02, 3.0});
  double phi = unwrapped_phase(d, 1e-5) * 180.0 / pi;
  CHECK(phi == doctest::Approx(-90.0).epsilon(1e-3));
}

TEST_CASE("improper or malformed blocks are rejected") {
  RationalBlock improper{{1.0, 2.0}, {1.0}, 0.0};
  CHECK_THROWS_AS(BlockDiagram::leaf(improper), ModelError);
  RationalBlock high_order{{1.0}, {1.0, 1.0, 1.0, 1.0}, 0.0};
  CHECK_THROWS_AS(BlockDiagram::leaf(high_order), ModelError);
  RationalBlock neg_delay{{1.0}, {1.0, 1.0}, -0.1};
  CHECK_THROWS_AS(BlockDiagram::leaf(neg_delay), ModelError);
  CHECK_THROWS_AS(inner_plant({-0.1, 0.5, 0.05, 1.0}), ModelError);
}

TEST_CASE("harmonic balance against a test-side bisection oracle") {
  InnerParams p{0.1, 0.5, 0.05, 1.0};
  double beta = -0.6, h = 0.1;
  double target = -180.0 + std::asin(beta) * 180.0 / pi;

  // oracle: phase formula per factor, bisected to machine-level tolerance
  double lo = 0.1, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (inner_phase_deg(p.t_prop, p.t_1, p.tau, mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  double w_ref = 0.5 * (lo + hi);
  double a_ref = 4.0 * h * std::abs(inner_ref(p.t_prop, p.t_1, p.tau, 1.0, w_ref)) / pi;

  auto hb = solve_harmonic_balance(inner_plant(p), beta, h);
  REQUIRE(hb.has_value());
  CHECK(hb->omega0 == doctest::Approx(w_ref).epsilon(1e-6));
  CHECK(hb->a0 == doctest::Approx(a_ref).epsilon(1e-6));
}

TEST_CASE("describing function magnitude and angle") {
  double a0 = 0.25, h = 0.1;
  for (double beta : {-0.7, 0.0, 0.5}) {
    cplx nd = describing_function(a0, beta, h);
    CHECK(std::abs(nd) == doctest::Approx(4.0 * h / (pi * a0)).epsilon(1e-12));
    CHECK(std::arg(nd) == doctest::Approx(-std::asin(beta)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(solve_harmonic_balance(inner_plant({0.1, 0.5, 0.05, 1.0}), 1.0, 0.1),
                  ModelError);
  CHECK_THROWS_AS(describing_function(0.0, 0.0, 0.1), ModelError);
}

TEST_CASE("no phase crossing yields no harmonic balance solution") {
  auto d = BlockDiagram::leaf(integrator_block());
  CHECK_FALSE(solve_harmonic_balance(d, 0.0, 0.1).has_value());
}

TEST_CASE("phase margin of e^{-s}/s loop") {
  auto d = BlockDiagram::leaf(RationalBlock{{1.0}, {0.0, 1.0}, 1.0});
  auto m = loop_margins({1.0, 0.0}, d);
  REQUIRE(m.has_value());
  CHECK(m->omega_crossover == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(m->phase_margin_deg == doctest::Approx(90.0 - 180.0 / pi).epsilon(1e-6));
}

TEST_CASE("relative degree of the open-loop composition from attitude command") {
  auto full = outer_plant(inner_plant({0.1, 0.5, 0.05, 1.0}), {0.2, 0.03});
  CHECK(full.relative_degree() == 5);
  CHECK(full.integrators_at_dc() == 2);
}

TEST_CASE("unwrapped phase of the double-integrator chain tracks the factor sum") {
  OuterParams q{0.2, 0.03};
  InnerParams p{0.1, 0.5, 0.05, 1.0};
  auto full = outer_plant(inner_plant(p), q);
  for (double w : {0.05, 0.3, 1.0, 3.0, 8.0}) {
    double ref = -pi - std::atan(p.t_prop * w) - std::atan(p.t_1 * w) - std::atan(q.t_2 * w) -
                 (p.tau + q.tau_side) * w;
    CHECK(unwrapped_phase(full, w) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("closed loop response equals CG/(1+CG)") {
  auto plant = inner_plant({0.1, 0.5, 0.05, 1.0});
  PDGains c{1.4, 0.3};
  auto cl = BlockDiagram::feedback(BlockDiagram::pd(c), plant);
  for (double w : {0.1, 1.0, 5.0}) {
    cplx l = (c.kp + cplx(0.0, w * c.kd)) * freq_response(plant, w);
    CHECK(std::abs(freq_response(cl, w) - l / (1.0 + l)) < 1e-12);
  }
  CHECK(cl.integrators_at_dc() == 0);
  CHECK(std::abs(freq_response(cl, 1e-6) - cplx(1.0, 0.0)) < 1e-4);
}
