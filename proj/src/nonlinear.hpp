#pragma once

#include <array>
#include <string>
#include <vector>

#include "grid.hpp"

namespace edp {

/// Barotropic pressure law normalized so that P'(1) = 1.
class PressureLaw {
 public:
  enum class Kind { quadratic, gamma };

  static PressureLaw quadratic();
  /// P = rho^gamma / gamma, gamma in (1, 3].
  static PressureLaw gamma_law(double gamma);

  Kind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  /// "quadratic" or "gamma:<value>".
  std::string name() const;

  double P(double rho) const;
  double dP(double rho) const;
  double d2P(double rho) const;

 private:
  PressureLaw(Kind kind, double gamma);

  Kind kind_;
  double gamma_;
};

// ---------------------------------------------------------------------------
// Forcing

enum class Envelope { gaussian, rational };
enum class TimeProfile { cosine, constant };

struct ForcingTerm {
  double amplitude = 1e-3;
  std::array<double, 3> direction{1.0, 0.0, 0.0};
  Envelope envelope = Envelope::gaussian;
  double sigma = 4.0;  // gaussian: exp(-|x|^2 / (2 sigma^2))
  double p = 4.0;      // rational: (1 + |x|^2)^(-p/2)
  TimeProfile time = TimeProfile::cosine;
  int q = 1;  // cos(2 pi q t / T + phase)
  double phase = 0.0;
};

struct ForcingSpec {
  std::vector<ForcingTerm> terms;
  double period = 1.0;

  bool is_zero() const;
};

double envelope_value(const ForcingTerm& term, double r);
double time_factor(const ForcingTerm& term, double period, double t);

/// The forcing tabulated on a grid: one vector field per term, combined with
/// the time factors on evaluation. Each term's direction is normalized.
class ForcingField {
 public:
  ForcingField(const Grid& grid, const ForcingSpec& spec);

  /// G(g(t)) = (0; g(., t)).
  State evaluate(double t) const;
  /// Adds c * G(g(t)) to the spectral state.
  void add_spectral(double t, double c, SpectralState& out) const;
  /// Spatial profile of term k (amplitude and direction included).
  const State& term_field(std::size_t k) const { return fields_[k]; }
  const SpectralState& term_spectrum(std::size_t k) const { return spectra_[k]; }
  const ForcingSpec& spec() const { return spec_; }
  double period() const { return spec_.period; }

 private:
  ForcingSpec spec_;
  int dim_;
  std::size_t num_points_;
  std::vector<State> fields_;
  std::vector<SpectralState> spectra_;
};

// ---------------------------------------------------------------------------
// Pointwise nonlinear functions

/// P'(1 + phi) - 1. Throws vacuum if 1 + phi <= 0.
RealField g3_eval(const RealField& phi, const PressureLaw& law);
double g3_value(double phi, const PressureLaw& law);

struct G45 {
  RealField g4;  // P'(e^{a_per + psi}) - 1
  RealField g5;  // P'(e^{psi + a_per}) - P'(e^{a_per})
};
G45 g45_eval(const RealField& a_per, const RealField& psi, const PressureLaw& law);

/// g2(phi) = int_0^1 dtheta / (1 + theta phi), midpoint rule with 64 nodes.
double g2_aux(double phi);
/// P2(phi) = int_0^1 P''(1 + theta phi) dtheta, midpoint rule with 64 nodes.
double p2_aux(double phi, const PressureLaw& law);

struct IdentityResidual {
  double max_abs = 0.0;
  double relative = 0.0;
};
/// Pointwise residual of g3(phi) grad a against (1 + g2(phi) phi) grad(P2(phi) phi^2)
/// for the state's density component; diagnostic only.
IdentityResidual auxiliary_identity_residual(const Grid& grid, const RealField& a, const PressureLaw& law);

// ---------------------------------------------------------------------------
// Spectral assembly

/// Zero every coefficient with some |m_i| > n/3.
void dealias(const Grid& grid, SpectralField& f);
void dealias(const Grid& grid, SpectralState& u);

/// Coefficient fields of B[u~] sampled on the grid: dealiased v~ and the
/// dealiased g3(e^{a~} - 1), with a~ dealiased before exponentiation.
struct FrozenCoefficients {
  std::vector<RealField> v;
  RealField g3;
  double max_speed = 0.0;  // ||v~||_inf + ||g3||_inf
  bool zero = false;       // all fields identically zero

  /// (1 - theta) * lhs + theta * rhs, fieldwise.
  static FrozenCoefficients interpolate(const FrozenCoefficients& lhs, const FrozenCoefficients& rhs,
                                        double theta);
};

FrozenCoefficients zero_coefficients(const Grid& grid);
FrozenCoefficients prepare_coefficients(const Grid& grid, const SpectralState& u_tilde, const PressureLaw& law);
FrozenCoefficients prepare_coefficients(const Grid& grid, const State& u_tilde, const PressureLaw& law);

/// Coefficients of B[c]u: (v~.grad a; v~.grad v + g3 grad a), dealiased.
SpectralState apply_B_spectral(const Grid& grid, const FrozenCoefficients& c, const SpectralState& u);
State apply_B(const Grid& grid, const State& u_tilde, const State& u, const PressureLaw& law);

/// Au = (div v; grad a + v), spectrally.
SpectralState apply_A_spectral(const Grid& grid, const SpectralState& u);
State apply_A(const Grid& grid, const State& u);

/// F1 = P1[-B[u]u + G(g)], Finf = P_inf[-B[u]u1 + G(g)], with u1 = P1 u.
State assemble_F1(const Grid& grid, const CutoffPair& cut, const State& u, const State& g_state,
                  const PressureLaw& law);
State assemble_Finfty(const Grid& grid, const CutoffPair& cut, const State& u, const State& g_state,
                      const PressureLaw& law);

/// -Au - B[u]u + G(g).
State full_rhs(const Grid& grid, const State& u, const State& g_state, const PressureLaw& law);

}  // namespace edp
