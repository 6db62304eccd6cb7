#include "nonlinear.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace edp {

PressureLaw::PressureLaw(Kind kind, double gamma) : kind_(kind), gamma_(gamma) {}

PressureLaw PressureLaw::quadratic() { return PressureLaw(Kind::quadratic, 2.0); }

PressureLaw PressureLaw::gamma_law(double gamma) {
  if (!(gamma > 1.0 && gamma <= 3.0)) throw Error(ErrorKind::validation, "gamma must lie in (1, 3]");
  PressureLaw law(Kind::gamma, gamma);
  if (std::abs(law.dP(1.0) - 1.0) > 1e-12) throw Error(ErrorKind::validation, "pressure law must satisfy P'(1) = 1");
  return law;
}

std::string PressureLaw::name() const {
  if (kind_ == Kind::quadratic) return "quadratic";
  std::ostringstream os;
  os.precision(17);
  os << "gamma:" << gamma_;
  return os.str();
}

double PressureLaw::P(double rho) const {
  if (kind_ == Kind::quadratic) return 0.5 * rho * rho;
  return std::pow(rho, gamma_) / gamma_;
}

double PressureLaw::dP(double rho) const {
  if (kind_ == Kind::quadratic) return rho;
  return std::pow(rho, gamma_ - 1.0);
}

double PressureLaw::d2P(double rho) const {
  if (kind_ == Kind::quadratic) return 1.0;
  return (gamma_ - 1.0) * std::pow(rho, gamma_ - 2.0);
}

// ---------------------------------------------------------------------------

bool ForcingSpec::is_zero() const {
  return std::all_of(terms.begin(), terms.end(), [](const ForcingTerm& t) { return t.amplitude == 0.0; });
}

double envelope_value(const ForcingTerm& term, double r) {
  if (term.envelope == Envelope::gaussian) return std::exp(-r * r / (2.0 * term.sigma * term.sigma));
  return std::pow(1.0 + r * r, -0.5 * term.p);
}

double time_factor(const ForcingTerm& term, double period, double t) {
  if (term.time == TimeProfile::constant) return 1.0;
  return std::cos(2.0 * std::numbers::pi * term.q * t / period + term.phase);
}

ForcingField::ForcingField(const Grid& grid, const ForcingSpec& spec)
    : spec_(spec), dim_(grid.dim()), num_points_(grid.num_points()) {
  for (const auto& term : spec_.terms) {
    double norm = 0.0;
    for (int i = 0; i < dim_; ++i) norm += term.direction[i] * term.direction[i];
    norm = std::sqrt(norm);
    if (norm == 0.0) throw Error(ErrorKind::validation, "forcing direction must be nonzero");
    State f = grid.zero_state();
    if (term.amplitude != 0.0) {
      for (std::size_t p = 0; p < num_points_; ++p) {
        const double e = term.amplitude * envelope_value(term, grid.distance_to_origin(p));
        for (int i = 0; i < dim_; ++i) f.v(i)[p] = e * term.direction[i] / norm;
      }
    }
    spectra_.push_back(transform_forward(grid, f));
    fields_.push_back(std::move(f));
  }
}

State ForcingField::evaluate(double t) const {
  State out;
  out.comps.assign(static_cast<std::size_t>(dim_ + 1), RealField(num_points_, 0.0));
  for (std::size_t k = 0; k < fields_.size(); ++k) {
    const double c = time_factor(spec_.terms[k], spec_.period, t);
    if (c == 0.0 || spec_.terms[k].amplitude == 0.0) continue;
    for (int i = 1; i <= dim_; ++i) {
      const auto& src = fields_[k].comps[i];
      auto& dst = out.comps[i];
      for (std::size_t p = 0; p < num_points_; ++p) dst[p] += c * src[p];
    }
  }
  return out;
}

void ForcingField::add_spectral(double t, double c, SpectralState& out) const {
  for (std::size_t k = 0; k < spectra_.size(); ++k) {
    if (spec_.terms[k].amplitude == 0.0) continue;
    const double f = c * time_factor(spec_.terms[k], spec_.period, t);
    if (f == 0.0) continue;
    out.axpy(f, spectra_[k]);
  }
}

// ---------------------------------------------------------------------------

double g3_value(double phi, const PressureLaw& law) {
  if (!(1.0 + phi > 0.0)) throw Error(ErrorKind::vacuum, "density 1 + phi must stay positive");
  if (law.kind() == PressureLaw::Kind::quadratic) return phi;
  return std::expm1((law.gamma() - 1.0) * std::log1p(phi));
}

RealField g3_eval(const RealField& phi, const PressureLaw& law) {
  RealField out(phi.size());
  for (std::size_t p = 0; p < phi.size(); ++p) out[p] = g3_value(phi[p], law);
  return out;
}

namespace {

// P'(e^a) - 1, evaluated without cancellation.
double g3_of_log_density(double a, const PressureLaw& law) {
  if (law.kind() == PressureLaw::Kind::quadratic) return std::expm1(a);
  return std::expm1((law.gamma() - 1.0) * a);
}

constexpr double kMaxExponent = 700.0;

}  // namespace

G45 g45_eval(const RealField& a_per, const RealField& psi, const PressureLaw& law) {
  if (a_per.size() != psi.size()) throw Error(ErrorKind::shape_mismatch, "g45_eval: field sizes differ");
  G45 out{RealField(psi.size()), RealField(psi.size())};
  const double exponent = law.kind() == PressureLaw::Kind::quadratic ? 1.0 : law.gamma() - 1.0;
  for (std::size_t p = 0; p < psi.size(); ++p) {
    const double total = a_per[p] + psi[p];
    if (!std::isfinite(total) || std::abs(total) > kMaxExponent || std::abs(a_per[p]) > kMaxExponent)
      throw Error(ErrorKind::overflow, "g45_eval: exponent out of range");
    out.g4[p] = g3_of_log_density(total, law);
    // P'(e^{a+psi}) - P'(e^a) = P'(e^a) (e^{c psi} - 1) for power laws P' = rho^c.
    out.g5[p] = std::exp(exponent * a_per[p]) * std::expm1(exponent * psi[p]);
  }
  return out;
}

namespace {
constexpr int kAuxNodes = 64;
}

double g2_aux(double phi) {
  double s = 0.0;
  for (int j = 0; j < kAuxNodes; ++j) {
    const double theta = (j + 0.5) / kAuxNodes;
    s += 1.0 / (1.0 + theta * phi);
  }
  return s / kAuxNodes;
}

double p2_aux(double phi, const PressureLaw& law) {
  double s = 0.0;
  for (int j = 0; j < kAuxNodes; ++j) {
    const double theta = (j + 0.5) / kAuxNodes;
    s += law.d2P(1.0 + theta * phi);
  }
  return s / kAuxNodes;
}

IdentityResidual auxiliary_identity_residual(const Grid& grid, const RealField& a, const PressureLaw& law) {
  const std::size_t np = grid.num_points();
  RealField phi(np), inner(np), prefactor(np), g3(np);
  for (std::size_t p = 0; p < np; ++p) {
    phi[p] = std::expm1(a[p]);
    g3[p] = g3_value(phi[p], law);
    inner[p] = p2_aux(phi[p], law) * phi[p] * phi[p];
    prefactor[p] = 1.0 + g2_aux(phi[p]) * phi[p];
  }
  const auto ca = grid.forward(a);
  const auto ci = grid.forward(inner);
  IdentityResidual out;
  double lhs_max = 0.0;
  for (int i = 0; i < grid.dim(); ++i) {
    MultiIndex alpha{0, 0, 0};
    alpha[i] = 1;
    const auto da = derivative(grid, ca, alpha);
    const auto di = derivative(grid, ci, alpha);
    for (std::size_t p = 0; p < np; ++p) {
      const double lhs = g3[p] * da[p];
      const double rhs = prefactor[p] * di[p];
      out.max_abs = std::max(out.max_abs, std::abs(lhs - rhs));
      lhs_max = std::max(lhs_max, std::abs(lhs));
    }
  }
  out.relative = lhs_max > 0.0 ? out.max_abs / lhs_max : out.max_abs;
  return out;
}

// ---------------------------------------------------------------------------

void dealias(const Grid& grid, SpectralField& f) {
  for (std::size_t q = 0; q < f.size(); ++q)
    if (grid.is_truncated(q)) f[q] = cplx{};
}

void dealias(const Grid& grid, SpectralState& u) {
  for (auto& f : u.comps) dealias(grid, f);
}

FrozenCoefficients FrozenCoefficients::interpolate(const FrozenCoefficients& lhs, const FrozenCoefficients& rhs,
                                                   double theta) {
  FrozenCoefficients out;
  const double w0 = 1.0 - theta;
  auto mix = [&](const RealField& x, const RealField& y) {
    RealField r(x.size());
    for (std::size_t p = 0; p < x.size(); ++p) r[p] = w0 * x[p] + theta * y[p];
    return r;
  };
  out.v.reserve(lhs.v.size());
  for (std::size_t i = 0; i < lhs.v.size(); ++i) out.v.push_back(mix(lhs.v[i], rhs.v[i]));
  out.g3 = mix(lhs.g3, rhs.g3);
  out.zero = lhs.zero && rhs.zero;
  out.max_speed = 0.0;
  const std::size_t np = out.g3.size();
  double vmax = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    double s = 0.0;
    for (const auto& vi : out.v) s += vi[p] * vi[p];
    vmax = std::max(vmax, s);
  }
  out.max_speed = std::sqrt(vmax) + linf_norm(out.g3);
  return out;
}

FrozenCoefficients zero_coefficients(const Grid& grid) {
  FrozenCoefficients out;
  out.v.assign(static_cast<std::size_t>(grid.dim()), grid.zero_field());
  out.g3 = grid.zero_field();
  out.zero = true;
  return out;
}

FrozenCoefficients prepare_coefficients(const Grid& grid, const SpectralState& u_tilde, const PressureLaw& law) {
  const int dim = grid.dim();
  FrozenCoefficients out;
  SpectralField c = u_tilde.comps[0];
  dealias(grid, c);
  const RealField a = grid.backward(c);
  RealField g3(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) {
    if (!std::isfinite(a[p]) || std::abs(a[p]) > kMaxExponent)
      throw Error(ErrorKind::overflow, "log-density out of range");
    g3[p] = g3_of_log_density(a[p], law);
  }
  c = grid.forward(g3);
  dealias(grid, c);
  out.g3 = grid.backward(c);
  out.v.reserve(static_cast<std::size_t>(dim));
  bool zero = linf_norm(out.g3) == 0.0;
  for (int i = 0; i < dim; ++i) {
    c = u_tilde.comps[1 + i];
    dealias(grid, c);
    out.v.push_back(grid.backward(c));
    zero = zero && linf_norm(out.v.back()) == 0.0;
  }
  double vmax = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    double s = 0.0;
    for (const auto& vi : out.v) s += vi[p] * vi[p];
    vmax = std::max(vmax, s);
  }
  out.max_speed = std::sqrt(vmax) + linf_norm(out.g3);
  out.zero = zero;
  return out;
}

FrozenCoefficients prepare_coefficients(const Grid& grid, const State& u_tilde, const PressureLaw& law) {
  return prepare_coefficients(grid, transform_forward(grid, u_tilde), law);
}

SpectralState apply_B_spectral(const Grid& grid, const FrozenCoefficients& c, const SpectralState& u) {
  const int dim = grid.dim();
  SpectralState out = grid.zero_spectral_state();
  if (c.zero) return out;
  const std::size_t np = grid.num_points();
  SpectralField a = u.comps[0];
  dealias(grid, a);

  std::vector<RealField> grad_a;
  grad_a.reserve(static_cast<std::size_t>(dim));
  for (int i = 0; i < dim; ++i) {
    MultiIndex alpha{0, 0, 0};
    alpha[i] = 1;
    grad_a.push_back(derivative(grid, a, alpha));
  }

  RealField acc(np);
  // density row: v~ . grad a
  std::fill(acc.begin(), acc.end(), 0.0);
  for (int i = 0; i < dim; ++i)
    for (std::size_t p = 0; p < np; ++p) acc[p] += c.v[i][p] * grad_a[i][p];
  grid.forward(acc, out.comps[0]);

  // velocity rows: v~ . grad v_j + g3 d_j a
  for (int j = 0; j < dim; ++j) {
    SpectralField vj = u.comps[1 + j];
    dealias(grid, vj);
    for (std::size_t p = 0; p < np; ++p) acc[p] = c.g3[p] * grad_a[j][p];
    for (int i = 0; i < dim; ++i) {
      MultiIndex alpha{0, 0, 0};
      alpha[i] = 1;
      const RealField d = derivative(grid, vj, alpha);
      for (std::size_t p = 0; p < np; ++p) acc[p] += c.v[i][p] * d[p];
    }
    grid.forward(acc, out.comps[1 + j]);
  }
  dealias(grid, out);
  return out;
}

State apply_B(const Grid& grid, const State& u_tilde, const State& u, const PressureLaw& law) {
  const auto c = prepare_coefficients(grid, u_tilde, law);
  return transform_backward(grid, apply_B_spectral(grid, c, transform_forward(grid, u)));
}

SpectralState apply_A_spectral(const Grid& grid, const SpectralState& u) {
  const int dim = grid.dim();
  SpectralState out = grid.zero_spectral_state();
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    const auto& xi = grid.wavevector(q);
    cplx div{};
    for (int i = 0; i < dim; ++i) {
      const cplx ik = grid.is_nyquist_axis(q, i) ? cplx{} : cplx{0.0, xi[i]};
      div += ik * u.comps[1 + i][q];
      out.comps[1 + i][q] = ik * u.comps[0][q] + u.comps[1 + i][q];
    }
    out.comps[0][q] = div;
  }
  return out;
}

State apply_A(const Grid& grid, const State& u) {
  return transform_backward(grid, apply_A_spectral(grid, transform_forward(grid, u)));
}

State assemble_F1(const Grid& grid, const CutoffPair& cut, const State& u, const State& g_state,
                  const PressureLaw& law) {
  const auto us = transform_forward(grid, u);
  const auto c = prepare_coefficients(grid, us, law);
  SpectralState f = transform_forward(grid, g_state);
  f -= apply_B_spectral(grid, c, us);
  apply_multiplier(f, cut.low);
  return transform_backward(grid, f);
}

State assemble_Finfty(const Grid& grid, const CutoffPair& cut, const State& u, const State& g_state,
                      const PressureLaw& law) {
  const auto us = transform_forward(grid, u);
  const auto c = prepare_coefficients(grid, us, law);
  SpectralState u1 = us;
  apply_multiplier(u1, cut.low);
  SpectralState f = transform_forward(grid, g_state);
  f -= apply_B_spectral(grid, c, u1);
  apply_multiplier(f, cut.high);
  return transform_backward(grid, f);
}

State full_rhs(const Grid& grid, const State& u, const State& g_state, const PressureLaw& law) {
  const auto us = transform_forward(grid, u);
  const auto c = prepare_coefficients(grid, us, law);
  SpectralState f = transform_forward(grid, g_state);
  f -= apply_A_spectral(grid, us);
  f -= apply_B_spectral(grid, c, us);
  return transform_backward(grid, f);
}

}  // namespace edp
