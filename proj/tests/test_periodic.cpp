#include "doctest.h"

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "periodic.hpp"

using namespace edp;

TEST_CASE("weak forcing gives the linear time-harmonic response") {
  const Grid grid(3, 16, 16.0 * std::numbers::pi);
  const CutoffPair cut(grid, 0.1, 0.4);
  ForcingSpec spec;
  ForcingTerm term;
  term.amplitude = 1e-6;
  spec.terms = {term};
  const ForcingField g(grid, spec);
  PeriodicSettings settings;
  settings.M = 32;
  const auto result = iterate_periodic(grid, cut, g, PressureLaw::quadratic(), settings);
  REQUIRE(result.orbit.converged);
  CHECK(result.orbit.periodicity_defect < 1e-6);

  // u(0) = 1/2 [(i w + A)^{-1} + (-i w + A)^{-1}] g^
  const double omega = 2.0 * std::numbers::pi;
  const auto u0 = transform_forward(grid, result.orbit.trajectory.states.front());
  const auto& gs = g.term_spectrum(0);
  double err = 0.0, scale = 0.0;
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    if (grid.is_nyquist(q)) continue;
    const auto& w = grid.wavevector(q);
    const Eigen::MatrixXcd A = -oracle::minus_symbol({w[0], w[1], w[2]});
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(4, 4);
    Eigen::VectorXcd gq(4);
    for (int c = 0; c < 4; ++c) gq(c) = gs.comps[c][q];
    const Eigen::VectorXcd ref = 0.5 * ((cplx(0.0, omega) * I + A).lu().solve(gq) +
                                        (cplx(0.0, -omega) * I + A).lu().solve(gq));
    for (int c = 0; c < 4; ++c) {
      err = std::max(err, std::abs(ref(c) - u0.comps[c][q]));
      scale = std::max(scale, std::abs(ref(c)));
    }
  }
  CHECK(scale > 0.0);
  CHECK(err < 1e-4 * scale);
}

TEST_CASE("unforced problem has the zero orbit") {
  const Grid grid(3, 8, 8.0 * std::numbers::pi);
  const CutoffPair cut(grid, 0.2, 0.4);
  ForcingSpec spec;
  ForcingTerm term;
  term.amplitude = 0.0;
  spec.terms = {term};
  const ForcingField g(grid, spec);
  PeriodicSettings settings;
  settings.M = 16;
  const auto result = iterate_periodic(grid, cut, g, PressureLaw::quadratic(), settings);
  CHECK(result.orbit.converged);
  for (const auto& st : result.orbit.trajectory.states) CHECK(linf_norm(st) == 0.0);
}

TEST_CASE("low solve rejects forcing with a net mass source") {
  const Grid grid(2, 8, 8.0 * std::numbers::pi);
  const CutoffPair cut(grid, 0.2, 0.4);
  Trajectory f;
  f.period = 1.0;
  f.M = 16;
  for (int m = 0; m <= 16; ++m) {
    State s = grid.zero_state();
    for (auto& x : s.a()) x = 1.0;
    f.states.push_back(s);
  }
  try {
    periodic_from_forcing_low(grid, cut, f);
    FAIL("expected a compatibility error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::compatibility);
  }
}

TEST_CASE("mass-mode removal subtracts the period average") {
  const Grid grid(2, 8, 8.0 * std::numbers::pi);
  const CutoffPair cut(grid, 0.2, 0.4);
  const auto subset = support_subset(grid, cut.low);
  std::size_t zero = subset.size();
  for (std::size_t k = 0; k < subset.size(); ++k)
    if (subset.modes[k] == 0) zero = k;
  REQUIRE(zero < subset.size());
  SubsetTrajectory f;
  f.period = 1.0;
  f.M = 4;
  for (int m = 0; m <= 4; ++m) {
    SpectralState s;
    s.comps.assign(3, SpectralField(subset.size(), cplx{}));
    s.comps[0][zero] = cplx(1.0 + m, 0.0);
    f.states.push_back(s);
  }
  const double removed = remove_mass_mode(grid, subset, f);
  CHECK(removed == doctest::Approx(2.5));
  CHECK(f.states[0].comps[0][zero].real() == doctest::Approx(-1.5));
}
