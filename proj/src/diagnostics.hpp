#pragma once

#include <string>
#include <vector>

#include "grid.hpp"
#include "integrators.hpp"
#include "modes.hpp"
#include "nonlinear.hpp"
#include "periodic.hpp"

namespace edp {

/// Discrete [g]_s: max over the M + 1 time nodes of (||g||_L1 + ||w^d g||_inf)
/// plus the trapezoidal time-L2 norm of ||g||_{H^{s-1}_{d-1}}.
double g_bracket_norm(const Grid& grid, const ForcingField& g, int s, int M);

struct EnergyPair {
  double E = 0.0;
  double D = 0.0;
};

/// E = |a|^2_{H^k_l} + |v|^2_{H^k_l} + 1/2 sum_{|alpha|<=k} int g3(phi~) |w^l d^alpha a|^2
/// D = sum_i |d_i a|^2_{H^{k-1}_l} + |v|^2_{H^k_l}
EnergyPair energy_functionals(const Grid& grid, const State& u, const RealField& phi_tilde, int k, int ell,
                              const PressureLaw& law);

struct DecayFit {
  std::vector<double> x;
  std::vector<double> y;  // log of the fitted values
  double slope = 0.0;
  double intercept = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
  double residual = 0.0;  // rms of the log-space residual
};

/// Least-squares slope of log(value) against t over samples with t in [lo, hi].
DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& values, double lo, double hi);

/// Unweighted least squares of log(max |f| per bin) against log(r) over
/// 64 logarithmic radial bins covering [r_lo, r_hi]; empty bins are skipped.
DecayFit radial_decay_fit(const Grid& grid, const RealField& f, double r_lo, double r_hi, int bins = 64);

struct KernelFit {
  std::string name;
  KernelSelector selector;
  DecayFit fit;
};

std::string kernel_name(const KernelSelector& sel);

/// Kernel fields for each selector with radial slopes on |x| in [5, L/2].
/// Branch kernels use `branch_cut` (typically a narrower mollifier), the
/// others use `cut`.
std::vector<KernelFit> kernel_decay_report(const Grid& grid, const CutoffPair& cut, const CutoffPair& branch_cut,
                                           double period, const std::vector<KernelSelector>& selectors,
                                           double eps_deg = kDefaultEpsDeg);

/// Seeded sum of localized Gaussian bumps in every component, scaled to
/// H^s norm delta0.
State random_perturbation(const Grid& grid, int s, double delta0, std::uint64_t seed);

struct StabilityReport {
  std::vector<double> t;
  std::vector<double> l2;
  std::vector<double> hs;
  std::vector<double> linf;
  std::vector<double> dissipation;   // int_0^t (|grad psi|^2_{H^{s-1}} + |w|^2_{H^s})
  std::vector<double> energy_ratio;  // (|(psi,w)|^2_{H^s} + dissipation) / |u0|^2_{H^s}
  std::vector<double> drift;         // |reference(t) - u_per(t)|_2 / max |u_per|_2
  double linf_ratio = 0.0;           // final / initial
  double log_linf_slope = 0.0;
  double energy_ratio_slope = 0.0;  // per period, period-end samples of the second half
  double energy_ratio_max = 0.0;
  double max_drift = 0.0;
  bool decaying = false;
};

/// Evolves u_per(0) + perturbation and u_per(0) with the nonlinear stepper
/// over horizon_periods periods; psi, w is the difference of the two runs.
StabilityReport stability_experiment(const Grid& grid, const Trajectory& orbit, const State& perturbation,
                                     int horizon_periods, const ForcingField* g, const PressureLaw& law, int s,
                                     double eps_deg = kDefaultEpsDeg);

/// Fitted exponential rate of the H^s energy of w under the homogeneous high
/// system with coefficients from the orbit (null: zero), sampled at nodes.
struct HighDecay {
  std::vector<double> t;
  std::vector<double> energy;
  DecayFit fit;
};
HighDecay high_frequency_decay(const Grid& grid, const CutoffPair& cut, const State& w0, const Trajectory* orbit,
                               const PressureLaw& law, int periods, int s, double eps_deg = kDefaultEpsDeg);

/// Random coefficients on the high-frequency support (Nyquist excluded),
/// scaled to unit L2 norm.
State random_high_frequency_state(const Grid& grid, const CutoffPair& cut, std::uint64_t seed);

}  // namespace edp
