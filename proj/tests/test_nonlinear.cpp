#include "doctest.h"

#include <cmath>
#include <random>

#include "nonlinear.hpp"
#include "oracles.hpp"

using namespace edp;

TEST_CASE("pressure laws are normalized at unit density") {
  for (const auto& law : {PressureLaw::quadratic(), PressureLaw::gamma_law(1.4), PressureLaw::gamma_law(3.0)}) {
    CHECK(law.dP(1.0) == doctest::Approx(1.0));
    CHECK(g3_value(0.0, law) == 0.0);
  }
  CHECK(g3_value(0.25, PressureLaw::quadratic()) == doctest::Approx(0.25));
  CHECK(g3_value(0.25, PressureLaw::gamma_law(1.4)) == doctest::Approx(std::pow(1.25, 0.4) - 1.0));
  CHECK_THROWS_AS(g3_value(-1.0, PressureLaw::quadratic()), Error);
  CHECK_THROWS_AS(PressureLaw::gamma_law(3.5), Error);
}

TEST_CASE("g4 and g5 agree with their definitions") {
  const auto law = PressureLaw::gamma_law(1.4);
  const RealField a{0.1, -0.2, 0.0};
  const RealField psi{0.05, 0.3, -0.1};
  const auto g = g45_eval(a, psi, law);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(g.g4[i] == doctest::Approx(std::exp(0.4 * (a[i] + psi[i])) - 1.0));
    CHECK(g.g5[i] == doctest::Approx(std::exp(0.4 * (a[i] + psi[i])) - std::exp(0.4 * a[i])));
  }
}

TEST_CASE("A matches a dense Fourier oracle") {
  const Grid grid(3, 8, 2.5);
  const oracle::DenseFourier F(grid);
  std::mt19937_64 rng(8);
  const State u = oracle::smooth_random_state(grid, 3, 0.5, rng);
  const State Au = apply_A(grid, u);
  auto ac = F.analyze(u.a());
  std::vector<std::vector<cplx>> vc;
  for (int i = 0; i < 3; ++i) vc.push_back(F.analyze(u.v(i)));
  std::vector<cplx> div(F.size());
  for (int i = 0; i < 3; ++i) {
    const auto d = F.partial(vc[i], i);
    for (std::size_t f = 0; f < div.size(); ++f) div[f] += d[f];
  }
  CHECK(oracle::max_abs_diff(Au.a(), F.synthesize(div)) < 1e-12);
  for (int i = 0; i < 3; ++i) {
    auto g = F.partial(ac, i);
    for (std::size_t f = 0; f < g.size(); ++f) g[f] += vc[i][f];
    CHECK(oracle::max_abs_diff(Au.v(i), F.synthesize(g)) < 1e-12);
  }
}

TEST_CASE("B matches brute-force convolution on a small grid") {
  const Grid grid(3, 8, 2.0);
  const oracle::DenseFourier F(grid);
  std::mt19937_64 rng(21);
  const State ut = oracle::smooth_random_state(grid, 3, 0.3, rng);
  const State u = oracle::smooth_random_state(grid, 3, 1.0, rng);
  const State B = apply_B(grid, ut, u, PressureLaw::quadratic());
  const auto ref = oracle::brute_force_B(F, ut, u, [](double a) { return std::expm1(a); });
  for (int c = 0; c < 4; ++c) CHECK(oracle::max_abs_diff(B.comps[c], F.synthesize(ref[c])) < 1e-12);
}

TEST_CASE("low and high assembly recombine into the full right-hand side") {
  const Grid grid(3, 8, 8.0);
  const CutoffPair cut(grid, 0.2, 0.45);
  std::mt19937_64 rng(4);
  const State u = oracle::smooth_random_state(grid, 3, 0.2, rng);
  const State g = oracle::smooth_random_state(grid, 2, 0.1, rng);
  State G = g;
  G.a() = grid.zero_field();
  const auto law = PressureLaw::quadratic();
  const State F1 = assemble_F1(grid, cut, u, G, law);
  const State Finf = assemble_Finfty(grid, cut, u, G, law);
  const State uh = project_high(grid, cut, u);
  const State lhs = F1 + Finf - project_high(grid, cut, apply_B(grid, u, uh, law));
  const State rhs = full_rhs(grid, u, G, law) + apply_A(grid, u);
  CHECK(oracle::max_abs_diff(lhs, rhs) < 1e-13);
}

TEST_CASE("forcing field evaluates profile times time factor") {
  const Grid grid(2, 16, 10.0);
  ForcingSpec spec;
  ForcingTerm t;
  t.amplitude = 0.5;
  t.direction = {0.0, 2.0, 0.0};
  t.sigma = 2.0;
  t.q = 2;
  t.phase = 0.3;
  spec.terms = {t};
  spec.period = 1.5;
  const ForcingField g(grid, spec);
  const State G = g.evaluate(0.2);
  const double tf = std::cos(2.0 * std::numbers::pi * 2.0 * 0.2 / 1.5 + 0.3);
  for (std::size_t p = 0; p < grid.num_points(); p += 7) {
    const double r = grid.distance_to_origin(p);
    CHECK(G.v(1)[p] == doctest::Approx(0.5 * std::exp(-r * r / 8.0) * tf));
    CHECK(G.v(0)[p] == 0.0);
    CHECK(G.a()[p] == 0.0);
  }
}
