#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "integrators.hpp"
#include "oracles.hpp"

using namespace edp;

namespace {

Eigen::VectorXcd mode_vector(const SpectralState& u, std::size_t q) {
  Eigen::VectorXcd x(static_cast<int>(u.comps.size()));
  for (std::size_t c = 0; c < u.comps.size(); ++c) x(static_cast<int>(c)) = u.comps[c][q];
  return x;
}

std::vector<double> xi_vector(const Grid& grid, std::size_t q) {
  const auto& w = grid.wavevector(q);
  return std::vector<double>(w.begin(), w.begin() + grid.dim());
}

}  // namespace

TEST_CASE("exact forcing integral matches quadrature mode by mode") {
  const Grid grid(2, 8, 3.0);
  ForcingSpec spec;
  ForcingTerm cosine;
  cosine.amplitude = 0.7;
  cosine.direction = {1.0, 1.0, 0.0};
  cosine.sigma = 0.8;
  cosine.q = 2;
  cosine.phase = 0.4;
  ForcingTerm steady = cosine;
  steady.time = TimeProfile::constant;
  steady.direction = {0.0, 1.0, 0.0};
  steady.amplitude = -0.3;
  spec.terms = {cosine, steady};
  spec.period = 1.3;
  const ForcingField g(grid, spec);
  const double t0 = 0.37, tau = 0.2;
  const ForcingPropagator prop(grid, g, tau);
  SpectralState out = grid.zero_spectral_state();
  prop.apply_add(grid, t0, out);

  const double omega = 2.0 * std::numbers::pi * 2.0 / 1.3;
  double err = 0.0, scale = 0.0;
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    if (grid.is_nyquist(q)) continue;
    const auto xi = xi_vector(grid, q);
    const Eigen::MatrixXcd z = oracle::minus_symbol(xi);
    const Eigen::VectorXcd g0 = mode_vector(g.term_spectrum(0), q);
    const Eigen::VectorXcd g1 = mode_vector(g.term_spectrum(1), q);
    const auto ref = oracle::quadrature(
        [&](double s) {
          const Eigen::VectorXcd rhs = g0 * std::cos(omega * (t0 + s) + 0.4) + g1;
          return Eigen::MatrixXcd(oracle::taylor_expm((tau - s) * z) * rhs);
        },
        tau, 8);
    err = std::max(err, (ref - mode_vector(out, q)).cwiseAbs().maxCoeff());
    scale = std::max(scale, ref.cwiseAbs().maxCoeff());
  }
  CHECK(scale > 0.0);
  CHECK(err < 1e-13 * std::max(1.0, scale));
}

TEST_CASE("Duhamel segment is exact for forcing linear in time") {
  const Grid grid(3, 8, 2.0);
  std::mt19937_64 rng(17);
  const double h = 0.15;
  const auto u0 = transform_forward(grid, oracle::smooth_random_state(grid, 2, 1.0, rng));
  const auto f0 = transform_forward(grid, oracle::smooth_random_state(grid, 2, 1.0, rng));
  const auto f1 = transform_forward(grid, oracle::smooth_random_state(grid, 2, 1.0, rng));
  SpectralState u = u0;
  const DuhamelSegment seg(grid, h);
  seg.advance(grid, u, f0, f1);
  double err = 0.0;
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    if (grid.is_nyquist(q)) continue;
    const Eigen::MatrixXcd z = oracle::minus_symbol(xi_vector(grid, q));
    const Eigen::VectorXcd a = mode_vector(f0, q), b = mode_vector(f1, q);
    Eigen::VectorXcd ref = oracle::taylor_expm(h * z) * mode_vector(u0, q);
    ref += oracle::quadrature(
        [&](double s) {
          return Eigen::MatrixXcd(oracle::taylor_expm((h - s) * z) * ((1.0 - s / h) * a + (s / h) * b));
        },
        h, 4);
    err = std::max(err, (ref - mode_vector(u, q)).cwiseAbs().maxCoeff());
  }
  CHECK(err < 1e-13);
}

TEST_CASE("linear flow composes") {
  const Grid grid(2, 16, 6.0);
  std::mt19937_64 rng(9);
  const State u0 = oracle::smooth_random_state(grid, 4, 1.0, rng);
  const State a = linear_flow(grid, linear_flow(grid, u0, 0.25), 0.5);
  const State b = linear_flow(grid, u0, 0.75);
  CHECK(oracle::max_abs_diff(a, b) < 1e-14);
}

TEST_CASE("nonlinear stepper keeps the rest state and guards the CFL limit") {
  const Grid grid(3, 8, 2.0);
  const NonlinearStepper stepper(grid, PressureLaw::quadratic(), 0.01);
  SpectralState u = grid.zero_spectral_state();
  stepper.step(u, 0.0, nullptr);
  CHECK(spectral_l2_norm(grid, u) == 0.0);
  CHECK_THROWS_AS(check_cfl(grid, 1.0, 10.0), Error);
  CHECK_NOTHROW(check_cfl(grid, 1e-3, 1.0));
}

TEST_CASE("high stepper with frozen zero coefficients is the exact flow") {
  const Grid grid(3, 16, 8.0);
  const CutoffPair cut(grid, 0.45, 0.49);
  std::mt19937_64 rng(12);
  SpectralState w = transform_forward(grid, project_high(grid, cut, oracle::smooth_random_state(grid, 5, 1.0, rng)));
  apply_support_mask(w, cut.high);
  const SpectralState w0 = w;
  const auto z = zero_coefficients(grid);
  const HighLinearStepper stepper(grid, cut, 0.1);
  for (int k = 0; k < 5; ++k) stepper.step(w, z, z, nullptr, nullptr);
  SpectralState ref = w0;
  ModeOperator(grid, ModeFunction::propagator, 0.5).apply(grid, ref);
  apply_support_mask(ref, cut.high);
  ref -= w;
  CHECK(spectral_l2_norm(grid, ref) < 1e-13 * spectral_l2_norm(grid, w0));
}
