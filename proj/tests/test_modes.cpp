#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "modes.hpp"
#include "oracles.hpp"

using namespace edp;

namespace {

std::vector<double> xi_of(double k, double theta, double phi) {
  return {k * std::sin(theta) * std::cos(phi), k * std::sin(theta) * std::sin(phi), k * std::cos(theta)};
}

double max_abs(const ModeMatrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("spectral projections resolve the identity") {
  for (double k : {0.05, 0.3, 0.7, 2.5}) {
    const auto xi = xi_of(k, 0.4, 1.1);
    const auto d = decompose_mode(xi);
    const auto I = ModeMatrix::Identity(4, 4);
    CHECK(max_abs(d.pi0 + d.pi_plus + d.pi_minus - I) < 1e-12);
    CHECK(max_abs(d.pi_plus * d.pi_minus) < 1e-12);
    const ModeMatrix A = symbol_matrix(xi);
    CHECK(max_abs(A * d.pi_plus + d.lambda_plus * d.pi_plus) < 1e-12);
  }
}

TEST_CASE("zero wavevector and degenerate band") {
  const std::vector<double> zero{0.0, 0.0, 0.0};
  CHECK_THROWS_AS(decompose_mode(zero), Error);
  const auto d = decompose_mode(xi_of(0.5, 0.3, 0.2));
  CHECK(d.degenerate_flag);
  const auto e = branch_eigenvalues(0.0);
  CHECK(e.plus == cplx(0.0, 0.0));
  CHECK(!std::signbit(e.plus.real()));
  CHECK(e.minus == cplx(-1.0, 0.0));
}

TEST_CASE("propagator matches a Taylor scaling-and-squaring exponential") {
  for (double k : {0.01, 0.2, 0.49995, 0.5, 0.50003, 1.3, 4.0}) {
    const auto xi = xi_of(k, 1.0, 0.3);
    for (double t : {0.1, 1.0, 3.0}) {
      const ModeMatrix ref = oracle::taylor_expm(t * oracle::minus_symbol(xi));
      CHECK(max_abs(propagator_matrix(xi, t) - ref) < 1e-10);
    }
  }
}

TEST_CASE("resolvent inverts I - e^{-TA}") {
  const auto xi = xi_of(0.8, 0.5, 0.5);
  const ModeMatrix R = resolvent_matrix(xi, 1.0);
  const ModeMatrix S = propagator_matrix(xi, 1.0);
  CHECK(max_abs(R * (ModeMatrix::Identity(4, 4) - S) - ModeMatrix::Identity(4, 4)) < 1e-12);
  const std::vector<double> zero{0.0, 0.0, 0.0};
  const ModeMatrix R0 = resolvent_matrix(zero, 1.0);
  CHECK(std::abs(R0(0, 0)) == 0.0);
  CHECK(R0(1, 1).real() == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))));
}

TEST_CASE("shifted segment integrals match quadrature") {
  // f(z) = int_0^tau e^{(tau - s) z} ds at z = -B_k + shift, B_k = [[0, i k], [i k, 1]]
  const double tau = 0.4;
  for (double k : {0.0, 0.25, 0.5, 0.9}) {
    for (cplx shift : {cplx{}, cplx(0.0, 2.0 * std::numbers::pi), cplx(0.0, -6.0)}) {
      Eigen::MatrixXcd z(2, 2);
      z << shift, cplx(0.0, -k), cplx(0.0, -k), -1.0 + shift;
      const auto ref = oracle::quadrature([&](double s) { return oracle::taylor_expm((tau - s) * z); }, tau, 16);
      const auto b = longitudinal_block(k, ModeFunction::segment_constant, tau, kDefaultEpsDeg, shift);
      double err = 0.0;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) err = std::max(err, std::abs(b[2 * r + c] - ref(r, c)));
      CHECK(err < 1e-11);

      const auto ref_lin = oracle::quadrature(
          [&](double s) { return Eigen::MatrixXcd(oracle::taylor_expm((tau - s) * z) * (s / tau)); }, tau, 16);
      const auto bl = longitudinal_block(k, ModeFunction::segment_linear, tau, kDefaultEpsDeg, shift);
      err = 0.0;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) err = std::max(err, std::abs(bl[2 * r + c] - ref_lin(r, c)));
      CHECK(err < 1e-11);
    }
  }
}

TEST_CASE("mode operator applies the propagator matrix mode by mode") {
  const Grid grid(3, 8, 3.0);
  std::mt19937_64 rng(11);
  const State u = oracle::smooth_random_state(grid, 3, 1.0, rng);
  SpectralState us = transform_forward(grid, u);
  const SpectralState before = us;
  const ModeOperator op(grid, ModeFunction::propagator, 0.7);
  op.apply(grid, us);
  double err = 0.0;
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    if (grid.is_nyquist(q)) continue;
    const auto& w = grid.wavevector(q);
    const std::vector<double> xi(w.begin(), w.end());
    const ModeMatrix P = oracle::taylor_expm(0.7 * oracle::minus_symbol(xi));
    Eigen::VectorXcd x(4);
    for (int c = 0; c < 4; ++c) x(c) = before.comps[c][q];
    const Eigen::VectorXcd y = P * x;
    for (int c = 0; c < 4; ++c) err = std::max(err, std::abs(y(c) - us.comps[c][q]));
  }
  CHECK(err < 1e-13);
}

TEST_CASE("semigroup property of the field operator") {
  const Grid grid(2, 16, 5.0);
  std::mt19937_64 rng(2);
  const State u = oracle::smooth_random_state(grid, 5, 1.0, rng);
  SpectralState a = transform_forward(grid, u);
  SpectralState b = a;
  const ModeOperator p1(grid, ModeFunction::propagator, 0.3);
  const ModeOperator p2(grid, ModeFunction::propagator, 0.6);
  p1.apply(grid, a);
  p1.apply(grid, a);
  p2.apply(grid, b);
  a -= b;
  CHECK(spectral_l2_norm(grid, a) < 1e-13 * spectral_l2_norm(grid, b));
}

TEST_CASE("e2 kernel at equal times is diagonal") {
  const Grid grid(3, 32, 8.0 * std::numbers::pi);
  const CutoffPair cut(grid, 0.1, 0.4);
  KernelSelector sel;
  sel.family = KernelFamily::e2;
  sel.t = 0.3;
  sel.s = 0.3;
  sel.row = 1;
  sel.col = 2;
  const auto off = kernel_field(grid, cut, 1.0, sel);
  sel.col = 1;
  const auto diag = kernel_field(grid, cut, 1.0, sel);
  CHECK(linf_norm(off) < 1e-14 * linf_norm(diag));
}
