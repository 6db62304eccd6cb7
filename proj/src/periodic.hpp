#pragma once

#include <optional>
#include <vector>

#include "grid.hpp"
#include "integrators.hpp"
#include "modes.hpp"
#include "nonlinear.hpp"

namespace edp {

enum class MonodromyMethod {
  preconditioned,  // x <- x + R0 (b + S x - x), R0 = (I - e^{-TA})^{-1} on high modes
  neumann,         // x <- S x + b
};

struct PeriodicSettings {
  double period = 1.0;
  int M = 128;
  int s = 3;
  double tol_outer = 1e-8;
  double tol_neumann = 1e-9;
  double eps_deg = kDefaultEpsDeg;
  int max_outer = 50;
  int max_monodromy_iters = 200;
  MonodromyMethod method = MonodromyMethod::preconditioned;
};

/// Trajectory stored over a subset of modes (spectral coefficients).
struct SubsetTrajectory {
  double period = 1.0;
  int M = 0;
  std::vector<SpectralState> states;
};

/// Subtracts the period average of the xi = 0 density coefficient (nodes
/// 0..M-1) from every node; returns the removed magnitude.
double remove_mass_mode(const Grid& grid, const ModeSubset& subset, SubsetTrajectory& forcing);

/// Exactly periodic solution of d/dt u + A u = F + G over the subset, F linear
/// between nodes: u(0) = (I - e^{-TA})^{-1} int_0^T e^{-(T-s)A} (F + G)(s) ds.
/// G is the optional external forcing integrated exactly per segment
/// (g_step built with tau = T / M over the same subset).
/// The zero mode is taken in the gauge where its density starts at 0.
SubsetTrajectory periodic_from_forcing_low(const Grid& grid, const ModeSubset& subset,
                                           const SubsetTrajectory& forcing, double eps_deg = kDefaultEpsDeg,
                                           const ForcingPropagator* g_step = nullptr);

/// Real-space form: restricts F1 to the low support, checks the zero-mode
/// compatibility (compatibility error if its time average is not negligible).
Trajectory periodic_from_forcing_low(const Grid& grid, const CutoffPair& cut, const Trajectory& forcing,
                                     double eps_deg = kDefaultEpsDeg);

/// Coefficients and high-frequency forcing of the linearized high system,
/// derived from a previous orbit u~ (null: zero orbit), its low part u1 and g.
class HighSystem {
 public:
  HighSystem(const Grid& grid, const CutoffPair& cut, const PressureLaw& law, const Trajectory* u_tilde,
             const SubsetTrajectory* u1_tilde, const ModeSubset* low_subset, const ForcingField* g, double period,
             int M);

  FrozenCoefficients coefficients(int m) const;
  /// State-dependent part of F_inf at node m: -P_inf B[u~] u1~. The
  /// external part P_inf G(g) is carried by g_half().
  SpectralState forcing(int m, const FrozenCoefficients& c) const;
  bool has_forcing() const;
  bool has_coupling() const;
  /// Exact half-step integral of P_inf G(g), or null without forcing.
  const ForcingPropagator* g_half() const { return g_half_ ? &*g_half_ : nullptr; }

  double period() const { return period_; }
  int M() const { return M_; }

 private:
  const Grid& grid_;
  const CutoffPair& cut_;
  PressureLaw law_;
  const Trajectory* u_tilde_;
  const SubsetTrajectory* u1_tilde_;
  const ModeSubset* low_subset_;
  const ForcingField* g_;
  double period_;
  int M_;
  std::optional<ForcingPropagator> g_half_;
};

/// Integrates the high system over one period from w (spectral). forced =
/// false drops F_inf and G. Each node state (including t = 0) is passed to
/// on_node when given.
SpectralState integrate_high_period(const Grid& grid, const HighSystem& sys, const HighLinearStepper& stepper,
                                    SpectralState w, bool forced,
                                    const std::function<void(int, const SpectralState&)>& on_node = {});

/// u_inf(T) for the homogeneous high system started at u0.
State monodromy_apply(const Grid& grid, const CutoffPair& cut, const State& u0, const Trajectory* u_tilde,
                      const PressureLaw& law, int M, double period, double eps_deg = kDefaultEpsDeg);

struct MonodromyResult {
  SpectralState u0;
  int iterations = 0;
  bool converged = false;
  double last_increment = 0.0;
  std::vector<double> increments;  // H^s, relative to the current iterate
  std::vector<double> ratios;
};

/// Fixed point of x = S(T) x + b, b the forced one-period response from 0.
MonodromyResult periodic_init_high(const Grid& grid, const CutoffPair& cut, const HighSystem& sys,
                                   const PeriodicSettings& settings);

struct ConvergenceRecord {
  int iteration = 0;
  double increment_l2 = 0.0;
  double increment_hs = 0.0;
  double increment_x = 0.0;  // X^s surrogate, relative to the new iterate
  double ratio = 0.0;        // increment_x / previous increment_x (0 for the first)
  double mass_mode_defect = 0.0;
  int monodromy_iterations = 0;
  double monodromy_last_ratio = 0.0;
  double wall_seconds = 0.0;
};

struct ConvergenceLog {
  std::vector<ConvergenceRecord> records;
};

struct OrbitNorms {
  double l2_max = 0.0;
  double hs_max = 0.0;
  double x1_max = 0.0;
  double y1_max = 0.0;
  double linf_max = 0.0;
  /// sum_j ||(1+|x|^{d-2+j}) d^j a||_inf + ||(1+|x|^{d-1}) v||_inf, max over nodes
  double weighted_sup_max = 0.0;
};

struct PeriodicOrbit {
  Trajectory trajectory;
  SubsetTrajectory low;
  double periodicity_defect = 0.0;  // nonzero modes, relative
  double zero_mode_defect = 0.0;    // |mean density drift| over one period, relative
  double residual = 0.0;
  double mass_mode_defect = 0.0;  // last removed zero-mode average / forcing amplitude
  OrbitNorms norms;
  bool converged = false;
};

struct PeriodicResult {
  PeriodicOrbit orbit;
  ConvergenceLog log;
};

/// Outer fixed-point iteration alternating the low and high updates. Throws
/// divergence / non_convergence with the log attached to the error message;
/// use iterate_periodic_logged to keep the log on failure.
PeriodicResult iterate_periodic(const Grid& grid, const CutoffPair& cut, const ForcingField& g,
                                const PressureLaw& law, const PeriodicSettings& settings);

/// As iterate_periodic but reports failures through `failure` instead of
/// throwing for divergence / non-convergence.
PeriodicResult iterate_periodic_logged(const Grid& grid, const CutoffPair& cut, const ForcingField& g,
                                       const PressureLaw& law, const PeriodicSettings& settings,
                                       std::optional<Error>& failure);

/// max_m ||D_t u + A u + B[u] u - G(g)||_2 / max_m ||u||_2 with fourth-order
/// periodic central differences in time; the xi = 0 density mode is excluded.
double pde_residual(const Grid& grid, const Trajectory& orbit, const ForcingField* g, const PressureLaw& law);

/// ||u(T) - u(0)|| over nonzero modes / max_m ||u_m||.
double periodicity_defect(const Grid& grid, const Trajectory& orbit);

OrbitNorms orbit_norms(const Grid& grid, const Trajectory& orbit, int s);

/// X^s surrogate of u - minus (minus may be null): max over nodes of
/// (H^s + X1 + Y1) plus the max over interior nodes of the L2 norm of the
/// central time difference of the density.
double xs_surrogate(const Grid& grid, const Trajectory& u, const Trajectory* minus, int s);

}  // namespace edp
