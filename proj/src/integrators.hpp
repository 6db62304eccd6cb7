#pragma once

#include <functional>
#include <span>
#include <vector>

#include "grid.hpp"
#include "modes.hpp"
#include "nonlinear.hpp"

namespace edp {

/// M + 1 states at t_m = m T / M.
struct Trajectory {
  double period = 1.0;
  int M = 0;
  std::vector<State> states;

  double dt() const { return period / M; }
  double time(int m) const { return period * m / M; }
  /// Linear interpolation in time; t is wrapped into [0, T].
  State at(double t) const;
};

void validate_time_nodes(int M, double period);

/// e^{-tA} applied mode by mode. Nyquist coefficients are dropped.
State linear_flow(const Grid& grid, const State& u0, double t, double eps_deg = kDefaultEpsDeg);

/// One segment of the exact Duhamel recursion with F linear in time on the
/// segment: u <- e^{-hA} u + int_0^h e^{-(h-s)A} F(s) ds.
class DuhamelSegment {
 public:
  DuhamelSegment(const Grid& grid, double h, double eps_deg = kDefaultEpsDeg);
  DuhamelSegment(const Grid& grid, const ModeSubset& subset, double h, double eps_deg = kDefaultEpsDeg);

  /// f0, f1: forcing at the segment ends.
  void advance(const Grid& grid, SpectralState& u, const SpectralState& f0, const SpectralState& f1) const;

 private:
  ModeOperator propagator_;
  ModeOperator constant_;
  ModeOperator linear_;
};

/// int_0^t e^{-(t-tau)A} F(tau) dtau for F given at the trajectory nodes and
/// interpolated linearly in between; t in [0, T].
State duhamel(const Grid& grid, const Trajectory& forcing, double t, double eps_deg = kDefaultEpsDeg);

/// Exact Duhamel integral of the external forcing over one segment:
///   out += int_{t0}^{t0+tau} e^{-(t0+tau-s)A} chi G(g(s)) ds.
/// Each term's time profile is known in closed form (constant or a cosine),
/// so no interpolation in time is involved. chi is an optional multiplier;
/// with a subset the result is stored over that subset.
class ForcingPropagator {
 public:
  ForcingPropagator(const Grid& grid, const ForcingField& g, double tau, std::span<const double> multiplier = {},
                    const ModeSubset* subset = nullptr, double eps_deg = kDefaultEpsDeg);

  void apply_add(const Grid& grid, double t0, SpectralState& out) const;
  double tau() const { return tau_; }

 private:
  struct Term {
    bool constant = false;
    double omega = 0.0;
    double phase = 0.0;
    SpectralState profile;
    std::vector<ModeOperator> ops;  // constant: one; cosine: shifts -i omega, +i omega
  };
  double tau_;
  std::vector<Term> terms_;
};

/// Adds the forcing at time t, scaled by c, into a spectral accumulator.
using SpectralForcing = std::function<void(double t, double c, SpectralState& acc)>;

/// Strang-split exponential integrator for
///   d/dt w + A w + P_inf(B[u~] w) = F_inf + P_inf G(g):
/// half-step exact affine flow (with the external forcing integrated exactly
/// by a half-step ForcingPropagator), explicit midpoint on the remaining
/// terms, second half-step, then restriction to the high-frequency support.
class HighLinearStepper {
 public:
  HighLinearStepper(const Grid& grid, const CutoffPair& cut, double dt, double eps_deg = kDefaultEpsDeg);

  /// c0, c1: coefficients at t and t + dt. f0, f1: state-dependent forcing at
  /// the same times, already restricted to high frequencies (both null when
  /// absent). g_half: external forcing over dt / 2, or null.
  void step(SpectralState& w, const FrozenCoefficients& c0, const FrozenCoefficients& c1,
            const SpectralState* f0, const SpectralState* f1, const ForcingPropagator* g_half = nullptr,
            double t = 0.0) const;

  double dt() const { return dt_; }

 private:
  void middle(const FrozenCoefficients& c, const SpectralState& w, const SpectralState* f,
              SpectralState& out) const;

  const Grid& grid_;
  const CutoffPair& cut_;
  double dt_;
  ModeOperator half_;
};

/// Same splitting for d/dt u + A u + B[u] u = G(t).
class NonlinearStepper {
 public:
  NonlinearStepper(const Grid& grid, const PressureLaw& law, double dt, double eps_deg = kDefaultEpsDeg);

  /// forcing is sampled inside the midpoint stage; g_half (over dt / 2) is
  /// integrated exactly in the half flows. Either may be null.
  void step(SpectralState& u, double t, const SpectralForcing* forcing,
            const ForcingPropagator* g_half = nullptr) const;
  double dt() const { return dt_; }

 private:
  SpectralState middle(const SpectralState& w, double t, const SpectralForcing* forcing) const;

  const Grid& grid_;
  PressureLaw law_;
  double dt_;
  ModeOperator half_;
};

/// Throws cfl when dt * |xi|_max * speed exceeds one.
void check_cfl(const Grid& grid, double dt, double speed);

/// Real-space convenience wrappers: one step from t to t + dt. The
/// coefficient trajectory and forcing are interpolated linearly in time;
/// forcing may be null.
State step_high_linear(const Grid& grid, const CutoffPair& cut, const State& w, const Trajectory& u_tilde,
                       const Trajectory* forcing, double t, double dt, const PressureLaw& law,
                       double eps_deg = kDefaultEpsDeg);
State step_nonlinear(const Grid& grid, const State& u, const ForcingField* g, double t, double dt,
                     const PressureLaw& law, double eps_deg = kDefaultEpsDeg);

SpectralForcing forcing_callback(const ForcingField& g);

}  // namespace edp
