#pragma once

#include <Eigen/Dense>

#include <array>
#include <span>
#include <vector>

#include "grid.hpp"

namespace edp {

using ModeMatrix = Eigen::MatrixXcd;

inline constexpr double kDefaultEpsDeg = 1e-4;

/// A_xi = [[0, i xi^T], [i xi, I]], size dim+1.
ModeMatrix symbol_matrix(std::span<const double> xi);

struct EigenvaluePair {
  cplx plus;
  cplx minus;
};

/// lambda_pm = (-1 +- sqrt(1 - 4|xi|^2)) / 2, principal root. The eigenvalues
/// of -A_xi are these two plus lambda_0 = -1 (multiplicity dim-1).
EigenvaluePair branch_eigenvalues(double xi_norm);

bool is_degenerate(double xi_norm, double eps_deg);

struct ModeDecomposition {
  cplx lambda0{-1.0, 0.0};
  cplx lambda_plus;
  cplx lambda_minus;
  ModeMatrix pi0;
  ModeMatrix pi_plus;
  ModeMatrix pi_minus;
  bool degenerate_flag = false;
};

/// Eigenvalues and spectral projections of -A_xi. Throws zero_wavevector for
/// xi = 0. In the degenerate band only the eigenvalues are filled in and
/// degenerate_flag is set; the projections are left empty.
ModeDecomposition decompose_mode(std::span<const double> xi, double eps_deg = kDefaultEpsDeg);

/// Scaling and squaring with a degree-13 Pade approximant.
ModeMatrix matrix_exponential(const ModeMatrix& m);

/// exp(-t A_xi).
ModeMatrix propagator_matrix(std::span<const double> xi, double t, double eps_deg = kDefaultEpsDeg);

/// (I - exp(-T A_xi))^{-1}; at xi = 0 the pseudo-inverse diag(0, (1-e^{-T})^{-1} I).
ModeMatrix resolvent_matrix(std::span<const double> xi, double period, double eps_deg = kDefaultEpsDeg);

// ---------------------------------------------------------------------------
// Field-level per-mode operators.
//
// Every analytic function of A_xi splits into a 2x2 block on (a, xi^.v) and a
// scalar on the transverse velocity, so a whole-grid operator is stored as
// five complex numbers per mode.

enum class ModeFunction {
  propagator,        // e^{tau lambda}
  resolvent,         // (1 - e^{tau lambda})^{-1}
  segment_constant,  // int_0^tau e^{(tau-s) lambda} ds
  segment_linear,    // int_0^tau e^{(tau-s) lambda} (s/tau) ds
};

/// Scalar value of the function at an eigenvalue lambda of -A_xi.
cplx mode_function_value(ModeFunction f, double tau, cplx lambda);

using Block2 = std::array<cplx, 4>;  // row-major on (a, v_longitudinal)

/// f(-B_k + shift) for B_k = [[0, i k], [i k, 1]]; dense fallback inside the
/// degenerate band. A nonzero shift is used for time-harmonic forcing.
Block2 longitudinal_block(double k, ModeFunction f, double tau, double eps_deg, cplx shift = {});

/// Ordered list of half-spectrum mode indices. A SpectralState "over a
/// subset" stores one coefficient per listed mode, in list order.
struct ModeSubset {
  std::vector<std::size_t> modes;
  std::size_t size() const { return modes.size(); }
};

/// Modes where the multiplier is nonzero, Nyquist modes excluded.
ModeSubset support_subset(const Grid& grid, std::span<const double> multiplier);
SpectralState gather(const ModeSubset& subset, const SpectralState& full);
/// Writes the subset coefficients into a zero-initialized full state.
SpectralState scatter(const Grid& grid, const ModeSubset& subset, const SpectralState& sub);

class ModeOperator {
 public:
  /// f(-A + shift) mode by mode.
  ModeOperator(const Grid& grid, ModeFunction f, double tau, double eps_deg = kDefaultEpsDeg, cplx shift = {});
  /// Operator acting on states stored over the given subset.
  ModeOperator(const Grid& grid, const ModeSubset& subset, ModeFunction f, double tau,
               double eps_deg = kDefaultEpsDeg, cplx shift = {});

  /// In-place application. Nyquist-plane coefficients are set to zero.
  void apply(const Grid& grid, SpectralState& u) const;
  /// out += this(u), same Nyquist convention.
  void apply_add(const Grid& grid, const SpectralState& u, SpectralState& out) const;

  ModeFunction function() const { return function_; }
  double tau() const { return tau_; }

 private:
  void build(const Grid& grid, ModeFunction f, double tau, double eps_deg, cplx shift);

  ModeFunction function_;
  double tau_;
  std::vector<std::size_t> modes_;  // empty: all modes in storage order
  std::vector<Block2> block_;
  std::vector<cplx> transverse_;
};

// ---------------------------------------------------------------------------
// Real-space kernels of cut-off symbols.

enum class KernelFamily {
  e1_branch,  // chi_0 (1 - e^{lambda_k T})^{-1} Pi_k
  e1_full,    // chi_0 e^{-t A} (I - e^{-T A})^{-1} e^{-(T - sigma) A}
  e2,         // chi_0 e^{-(t - tau) A}
};

struct KernelSelector {
  KernelFamily family = KernelFamily::e2;
  int branch = 1;  // +1, 0, -1 (e1_branch only)
  int row = 1;     // 1-based over (a, v_1, ..., v_dim)
  int col = 1;
  double t = 0.0;
  double s = 0.0;  // sigma for e1_full, tau for e2
};

/// Symbol entry of the selected family at one wavevector (cutoff excluded).
cplx kernel_symbol(std::span<const double> xi, double period, const KernelSelector& sel, double eps_deg);

/// Real-space kernel component: inverse Fourier transform of chi_0 times the
/// symbol entry. Throws degenerate_mode if e1_branch meets the degenerate band
/// inside the mollifier support.
RealField kernel_field(const Grid& grid, const CutoffPair& cut, double period, const KernelSelector& sel,
                       double eps_deg = kDefaultEpsDeg);

}  // namespace edp
