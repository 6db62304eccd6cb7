#include "integrators.hpp"

#include <cmath>
#include <numbers>

namespace edp {

State Trajectory::at(double t) const {
  if (states.size() != static_cast<std::size_t>(M) + 1) throw Error(ErrorKind::shape_mismatch, "trajectory size");
  double tw = std::fmod(t, period);
  if (tw < 0.0) tw += period;
  if (t == period) tw = period;
  const double x = tw / dt();
  int m = static_cast<int>(std::floor(x));
  if (m >= M) m = M - 1;
  const double theta = x - m;
  if (theta == 0.0) return states[static_cast<std::size_t>(m)];
  return (1.0 - theta) * states[static_cast<std::size_t>(m)] + theta * states[static_cast<std::size_t>(m) + 1];
}

void validate_time_nodes(int M, double period) {
  if (M < 16) throw Error(ErrorKind::validation, "M must be at least 16");
  if (!(period > 0.0) || !std::isfinite(period)) throw Error(ErrorKind::validation, "T must be positive");
}

State linear_flow(const Grid& grid, const State& u0, double t, double eps_deg) {
  auto s = transform_forward(grid, u0);
  ModeOperator(grid, ModeFunction::propagator, t, eps_deg).apply(grid, s);
  return transform_backward(grid, s);
}

DuhamelSegment::DuhamelSegment(const Grid& grid, double h, double eps_deg)
    : propagator_(grid, ModeFunction::propagator, h, eps_deg),
      constant_(grid, ModeFunction::segment_constant, h, eps_deg),
      linear_(grid, ModeFunction::segment_linear, h, eps_deg) {}

DuhamelSegment::DuhamelSegment(const Grid& grid, const ModeSubset& subset, double h, double eps_deg)
    : propagator_(grid, subset, ModeFunction::propagator, h, eps_deg),
      constant_(grid, subset, ModeFunction::segment_constant, h, eps_deg),
      linear_(grid, subset, ModeFunction::segment_linear, h, eps_deg) {}

void DuhamelSegment::advance(const Grid& grid, SpectralState& u, const SpectralState& f0,
                             const SpectralState& f1) const {
  propagator_.apply(grid, u);
  constant_.apply_add(grid, f0, u);
  SpectralState df = f1;
  df -= f0;
  linear_.apply_add(grid, df, u);
}

State duhamel(const Grid& grid, const Trajectory& forcing, double t, double eps_deg) {
  if (t < 0.0 || t > forcing.period * (1.0 + 1e-14)) throw Error(ErrorKind::validation, "duhamel: t outside [0, T]");
  const double h = forcing.dt();
  const int full = std::min(forcing.M, static_cast<int>(std::floor(t / h + 1e-12)));
  const double rest = t - full * h;
  SpectralState u = grid.zero_spectral_state();
  if (full > 0) {
    const DuhamelSegment seg(grid, h, eps_deg);
    SpectralState f0 = transform_forward(grid, forcing.states[0]);
    for (int m = 0; m < full; ++m) {
      SpectralState f1 = transform_forward(grid, forcing.states[static_cast<std::size_t>(m) + 1]);
      seg.advance(grid, u, f0, f1);
      f0 = std::move(f1);
    }
  }
  if (rest > 1e-14 * forcing.period && full < forcing.M) {
    const DuhamelSegment seg(grid, rest, eps_deg);
    const SpectralState f0 = transform_forward(grid, forcing.states[static_cast<std::size_t>(full)]);
    const SpectralState f1 = transform_forward(grid, forcing.at(t));
    seg.advance(grid, u, f0, f1);
  }
  return transform_backward(grid, u);
}

ForcingPropagator::ForcingPropagator(const Grid& grid, const ForcingField& g, double tau,
                                     std::span<const double> multiplier, const ModeSubset* subset, double eps_deg)
    : tau_(tau) {
  const auto& spec = g.spec();
  for (std::size_t k = 0; k < spec.terms.size(); ++k) {
    const auto& term = spec.terms[k];
    if (term.amplitude == 0.0) continue;
    Term out;
    out.constant = term.time == TimeProfile::constant;
    out.omega = 2.0 * std::numbers::pi * term.q / spec.period;
    out.phase = term.phase;
    SpectralState p = g.term_spectrum(k);
    if (!multiplier.empty()) apply_multiplier(p, multiplier);
    out.profile = subset ? gather(*subset, p) : std::move(p);
    auto make = [&](cplx shift) {
      return subset ? ModeOperator(grid, *subset, ModeFunction::segment_constant, tau, eps_deg, shift)
                    : ModeOperator(grid, ModeFunction::segment_constant, tau, eps_deg, shift);
    };
    if (out.constant) {
      out.ops.push_back(make(cplx{}));
    } else {
      out.ops.push_back(make(cplx{0.0, -out.omega}));
      out.ops.push_back(make(cplx{0.0, out.omega}));
    }
    terms_.push_back(std::move(out));
  }
}

void ForcingPropagator::apply_add(const Grid& grid, double t0, SpectralState& out) const {
  for (const auto& term : terms_) {
    if (term.constant) {
      term.ops[0].apply_add(grid, term.profile, out);
      continue;
    }
    // int_0^tau e^{(tau-r)L} e^{i w r} dr = e^{i w tau} tau phi1(tau (L - i w))
    const double theta = term.omega * (t0 + tau_) + term.phase;
    const cplx e = std::polar(0.5, theta);
    SpectralState x = term.profile;
    term.ops[0].apply(grid, x);
    out.axpy(e, x);
    x = term.profile;
    term.ops[1].apply(grid, x);
    out.axpy(std::conj(e), x);
  }
}

void check_cfl(const Grid& grid, double dt, double speed) {
  if (dt * grid.wavenumber_max() * speed > 1.0)
    throw Error(ErrorKind::cfl, "time step violates dt |xi|_max (|v~|_inf + |g3|_inf) <= 1");
}

// ---------------------------------------------------------------------------

HighLinearStepper::HighLinearStepper(const Grid& grid, const CutoffPair& cut, double dt, double eps_deg)
    : grid_(grid), cut_(cut), dt_(dt), half_(grid, ModeFunction::propagator, 0.5 * dt, eps_deg) {}

void HighLinearStepper::middle(const FrozenCoefficients& c, const SpectralState& w, const SpectralState* f,
                               SpectralState& out) const {
  out = apply_B_spectral(grid_, c, w);
  out *= -1.0;
  apply_multiplier(out, cut_.high);
  if (f) out += *f;
}

void HighLinearStepper::step(SpectralState& w, const FrozenCoefficients& c0, const FrozenCoefficients& c1,
                             const SpectralState* f0, const SpectralState* f1, const ForcingPropagator* g_half,
                             double t) const {
  check_cfl(grid_, dt_, std::max(c0.max_speed, c1.max_speed));
  half_.apply(grid_, w);
  if (g_half) g_half->apply_add(grid_, t, w);
  const bool forced = f0 != nullptr && f1 != nullptr;
  if (!(c0.zero && c1.zero) || forced) {
    SpectralState k;
    middle(c0, w, forced ? f0 : nullptr, k);
    SpectralState mid = w;
    mid.axpy(0.5 * dt_, k);
    SpectralState fmid;
    if (forced) {
      fmid = *f0;
      fmid += *f1;
      fmid *= 0.5;
    }
    const FrozenCoefficients cmid = FrozenCoefficients::interpolate(c0, c1, 0.5);
    middle(cmid, mid, forced ? &fmid : nullptr, k);
    w.axpy(dt_, k);
  }
  half_.apply(grid_, w);
  if (g_half) g_half->apply_add(grid_, t + 0.5 * dt_, w);
  apply_support_mask(w, cut_.high);
}

NonlinearStepper::NonlinearStepper(const Grid& grid, const PressureLaw& law, double dt, double eps_deg)
    : grid_(grid), law_(law), dt_(dt), half_(grid, ModeFunction::propagator, 0.5 * dt, eps_deg) {}

SpectralState NonlinearStepper::middle(const SpectralState& w, double t, const SpectralForcing* forcing) const {
  const auto c = prepare_coefficients(grid_, w, law_);
  check_cfl(grid_, dt_, c.max_speed);
  SpectralState out = apply_B_spectral(grid_, c, w);
  out *= -1.0;
  if (forcing) (*forcing)(t, 1.0, out);
  return out;
}

void NonlinearStepper::step(SpectralState& u, double t, const SpectralForcing* forcing,
                            const ForcingPropagator* g_half) const {
  half_.apply(grid_, u);
  if (g_half) g_half->apply_add(grid_, t, u);
  const SpectralState k1 = middle(u, t, forcing);
  SpectralState mid = u;
  mid.axpy(0.5 * dt_, k1);
  const SpectralState k2 = middle(mid, t + 0.5 * dt_, forcing);
  u.axpy(dt_, k2);
  half_.apply(grid_, u);
  if (g_half) g_half->apply_add(grid_, t + 0.5 * dt_, u);
}

// ---------------------------------------------------------------------------

State step_high_linear(const Grid& grid, const CutoffPair& cut, const State& w, const Trajectory& u_tilde,
                       const Trajectory* forcing, double t, double dt, const PressureLaw& law, double eps_deg) {
  const HighLinearStepper stepper(grid, cut, dt, eps_deg);
  const auto c0 = prepare_coefficients(grid, u_tilde.at(t), law);
  const auto c1 = prepare_coefficients(grid, u_tilde.at(t + dt), law);
  SpectralState ws = transform_forward(grid, w);
  if (forcing) {
    const auto f0 = transform_forward(grid, forcing->at(t));
    const auto f1 = transform_forward(grid, forcing->at(t + dt));
    stepper.step(ws, c0, c1, &f0, &f1);
  } else {
    stepper.step(ws, c0, c1, nullptr, nullptr);
  }
  return transform_backward(grid, ws);
}

SpectralForcing forcing_callback(const ForcingField& g) {
  return [&g](double t, double c, SpectralState& acc) { g.add_spectral(t, c, acc); };
}

State step_nonlinear(const Grid& grid, const State& u, const ForcingField* g, double t, double dt,
                     const PressureLaw& law, double eps_deg) {
  const NonlinearStepper stepper(grid, law, dt, eps_deg);
  SpectralState us = transform_forward(grid, u);
  if (g) {
    const ForcingPropagator g_half(grid, *g, 0.5 * dt, {}, nullptr, eps_deg);
    stepper.step(us, t, nullptr, &g_half);
  } else {
    stepper.step(us, t, nullptr);
  }
  return transform_backward(grid, us);
}

}  // namespace edp
