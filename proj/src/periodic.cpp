#include "periodic.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace edp {

namespace {

SpectralState zero_subset_state(int dim, std::size_t size) {
  SpectralState s;
  s.comps.assign(static_cast<std::size_t>(dim + 1), SpectralField(size, cplx{}));
  return s;
}

// Position of the xi = 0 mode inside a subset, or -1.
long zero_mode_position(const Grid& grid, const ModeSubset& subset) {
  for (std::size_t i = 0; i < subset.size(); ++i)
    if (grid.wavenumber(subset.modes[i]) == 0.0) return static_cast<long>(i);
  return -1;
}

double forcing_amplitude(const ForcingSpec& spec) {
  double s = 0.0;
  for (const auto& t : spec.terms) s += std::abs(t.amplitude);
  return s;
}

}  // namespace

double remove_mass_mode(const Grid& grid, const ModeSubset& subset, SubsetTrajectory& forcing) {
  const long z = zero_mode_position(grid, subset);
  if (z < 0) return 0.0;
  cplx avg{};
  for (int m = 0; m < forcing.M; ++m) avg += forcing.states[static_cast<std::size_t>(m)].comps[0][static_cast<std::size_t>(z)];
  avg /= static_cast<double>(forcing.M);
  for (auto& st : forcing.states) st.comps[0][static_cast<std::size_t>(z)] -= avg;
  return std::abs(avg);
}

SubsetTrajectory periodic_from_forcing_low(const Grid& grid, const ModeSubset& subset,
                                           const SubsetTrajectory& forcing, double eps_deg,
                                           const ForcingPropagator* g_step) {
  validate_time_nodes(forcing.M, forcing.period);
  if (forcing.states.size() != static_cast<std::size_t>(forcing.M) + 1)
    throw Error(ErrorKind::shape_mismatch, "forcing trajectory must hold M + 1 nodes");
  const double h = forcing.period / forcing.M;
  const DuhamelSegment seg(grid, subset, h, eps_deg);
  SpectralState w = zero_subset_state(grid.dim(), subset.size());
  for (int m = 0; m < forcing.M; ++m) {
    seg.advance(grid, w, forcing.states[static_cast<std::size_t>(m)], forcing.states[static_cast<std::size_t>(m) + 1]);
    if (g_step) g_step->apply_add(grid, m * h, w);
  }
  ModeOperator(grid, subset, ModeFunction::resolvent, forcing.period, eps_deg).apply(grid, w);

  SubsetTrajectory out{forcing.period, forcing.M, {}};
  out.states.reserve(static_cast<std::size_t>(forcing.M) + 1);
  out.states.push_back(w);
  for (int m = 0; m < forcing.M; ++m) {
    seg.advance(grid, w, forcing.states[static_cast<std::size_t>(m)], forcing.states[static_cast<std::size_t>(m) + 1]);
    if (g_step) g_step->apply_add(grid, m * h, w);
    out.states.push_back(w);
  }
  return out;
}

Trajectory periodic_from_forcing_low(const Grid& grid, const CutoffPair& cut, const Trajectory& forcing,
                                     double eps_deg) {
  validate_time_nodes(forcing.M, forcing.period);
  const ModeSubset subset = support_subset(grid, cut.low);
  SubsetTrajectory f{forcing.period, forcing.M, {}};
  double scale = 0.0;
  for (const auto& st : forcing.states) {
    auto s = transform_forward(grid, st);
    f.states.push_back(gather(subset, s));
    for (const auto& c : f.states.back().comps)
      for (const auto& x : c) scale = std::max(scale, std::abs(x));
  }
  const long z = zero_mode_position(grid, subset);
  if (z >= 0) {
    cplx avg{};
    for (int m = 0; m < f.M; ++m) avg += f.states[static_cast<std::size_t>(m)].comps[0][static_cast<std::size_t>(z)];
    avg /= static_cast<double>(f.M);
    if (std::abs(avg) > 1e-12 * std::max(scale, 1e-300) && std::abs(avg) > 0.0)
      throw Error(ErrorKind::compatibility, "zero-mode density forcing has nonzero time average");
  }
  const auto sol = periodic_from_forcing_low(grid, subset, f, eps_deg);
  Trajectory out{forcing.period, forcing.M, {}};
  for (const auto& st : sol.states) out.states.push_back(transform_backward(grid, scatter(grid, subset, st)));
  return out;
}

// ---------------------------------------------------------------------------

HighSystem::HighSystem(const Grid& grid, const CutoffPair& cut, const PressureLaw& law, const Trajectory* u_tilde,
                       const SubsetTrajectory* u1_tilde, const ModeSubset* low_subset, const ForcingField* g,
                       double period, int M)
    : grid_(grid),
      cut_(cut),
      law_(law),
      u_tilde_(u_tilde),
      u1_tilde_(u1_tilde),
      low_subset_(low_subset),
      g_(g),
      period_(period),
      M_(M) {
  validate_time_nodes(M, period);
  if (u_tilde && u_tilde->states.size() != static_cast<std::size_t>(M) + 1)
    throw Error(ErrorKind::shape_mismatch, "coefficient trajectory must hold M + 1 nodes");
  if (g && !g->spec().is_zero()) g_half_.emplace(grid, *g, 0.5 * period / M, cut.high);
}

FrozenCoefficients HighSystem::coefficients(int m) const {
  if (!u_tilde_) return zero_coefficients(grid_);
  return prepare_coefficients(grid_, u_tilde_->states[static_cast<std::size_t>(m)], law_);
}

bool HighSystem::has_coupling() const { return u_tilde_ != nullptr && u1_tilde_ != nullptr && low_subset_ != nullptr; }

bool HighSystem::has_forcing() const { return g_half_.has_value() || has_coupling(); }

SpectralState HighSystem::forcing(int m, const FrozenCoefficients& c) const {
  SpectralState f = grid_.zero_spectral_state();
  if (has_coupling() && !c.zero) {
    const auto u1 = scatter(grid_, *low_subset_, u1_tilde_->states[static_cast<std::size_t>(m)]);
    f -= apply_B_spectral(grid_, c, u1);
  }
  apply_multiplier(f, cut_.high);
  return f;
}

SpectralState integrate_high_period(const Grid& grid, const HighSystem& sys, const HighLinearStepper& stepper,
                                    SpectralState w, bool forced,
                                    const std::function<void(int, const SpectralState&)>& on_node) {
  (void)grid;
  const bool coupled = forced && sys.has_coupling();
  const ForcingPropagator* g_half = forced ? sys.g_half() : nullptr;
  const double h = sys.period() / sys.M();
  FrozenCoefficients c0 = sys.coefficients(0);
  SpectralState f0;
  if (coupled) f0 = sys.forcing(0, c0);
  if (on_node) on_node(0, w);
  for (int m = 0; m < sys.M(); ++m) {
    FrozenCoefficients c1 = sys.coefficients(m + 1);
    SpectralState f1;
    if (coupled) {
      f1 = sys.forcing(m + 1, c1);
      stepper.step(w, c0, c1, &f0, &f1, g_half, m * h);
    } else {
      stepper.step(w, c0, c1, nullptr, nullptr, g_half, m * h);
    }
    if (on_node) on_node(m + 1, w);
    c0 = std::move(c1);
    f0 = std::move(f1);
  }
  return w;
}

State monodromy_apply(const Grid& grid, const CutoffPair& cut, const State& u0, const Trajectory* u_tilde,
                      const PressureLaw& law, int M, double period, double eps_deg) {
  const HighSystem sys(grid, cut, law, u_tilde, nullptr, nullptr, nullptr, period, M);
  const HighLinearStepper stepper(grid, cut, period / M, eps_deg);
  auto w = integrate_high_period(grid, sys, stepper, transform_forward(grid, u0), false);
  return transform_backward(grid, w);
}

MonodromyResult periodic_init_high(const Grid& grid, const CutoffPair& cut, const HighSystem& sys,
                                   const PeriodicSettings& settings) {
  const HighLinearStepper stepper(grid, cut, sys.period() / sys.M(), settings.eps_deg);
  MonodromyResult out;
  out.u0 = grid.zero_spectral_state();
  if (!sys.has_forcing()) {
    out.iterations = 1;
    out.converged = true;
    return out;
  }
  const SpectralState b = integrate_high_period(grid, sys, stepper, grid.zero_spectral_state(), true);
  if (sobolev_norm(grid, b, settings.s) == 0.0) {
    out.iterations = 1;
    out.converged = true;
    return out;
  }
  const ModeOperator r0(grid, ModeFunction::resolvent, sys.period(), settings.eps_deg);
  SpectralState& x = out.u0;
  double prev_abs = 0.0;
  int growth_streak = 0;
  for (int k = 1; k <= settings.max_monodromy_iters; ++k) {
    SpectralState d;
    if (settings.method == MonodromyMethod::preconditioned) {
      SpectralState r = b;
      if (k > 1) {
        r += integrate_high_period(grid, sys, stepper, x, false);
        r -= x;
      }
      r0.apply(grid, r);
      apply_support_mask(r, cut.high);
      d = std::move(r);
    } else {
      SpectralState next = b;
      if (k > 1) next += integrate_high_period(grid, sys, stepper, x, false);
      d = next;
      d -= x;
    }
    x += d;
    const double inc_abs = sobolev_norm(grid, d, settings.s);
    const double xn = sobolev_norm(grid, x, settings.s);
    const double inc = xn > 0.0 ? inc_abs / xn : inc_abs;
    out.increments.push_back(inc);
    out.iterations = k;
    out.last_increment = inc;
    if (k > 1) {
      const double ratio = prev_abs > 0.0 ? inc_abs / prev_abs : 0.0;
      out.ratios.push_back(ratio);
      growth_streak = ratio >= 1.0 ? growth_streak + 1 : 0;
      if (growth_streak >= 3)
        throw Error(ErrorKind::non_contraction, "monodromy iteration: increment ratio >= 1 three times in a row");
    }
    prev_abs = inc_abs;
    if (inc <= settings.tol_neumann) {
      out.converged = true;
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

double periodicity_defect(const Grid& grid, const Trajectory& orbit) {
  const auto& first = orbit.states.front();
  const auto& last = orbit.states.back();
  auto diff = transform_forward(grid, last - first);
  for (auto& c : diff.comps) c[0] = cplx{};
  double scale = 0.0;
  for (const auto& st : orbit.states) scale = std::max(scale, l2_norm(grid, st));
  const double d = spectral_l2_norm(grid, diff);
  return scale > 0.0 ? d / scale : d;
}

namespace {

double zero_mode_drift(const Grid& grid, const Trajectory& orbit) {
  const double a0 = grid.forward(orbit.states.front().a())[0].real();
  const double a1 = grid.forward(orbit.states.back().a())[0].real();
  double scale = 0.0;
  for (const auto& st : orbit.states) scale = std::max(scale, l2_norm(grid, st));
  const double d = std::abs(a1 - a0) * std::sqrt(grid.volume());
  return scale > 0.0 ? d / scale : d;
}

}  // namespace

double pde_residual(const Grid& grid, const Trajectory& orbit, const ForcingField* g, const PressureLaw& law) {
  const int M = orbit.M;
  const double h = orbit.dt();
  auto node = [&](int m) -> const State& { return orbit.states[static_cast<std::size_t>(((m % M) + M) % M)]; };
  double scale = 0.0;
  for (const auto& st : orbit.states) scale = std::max(scale, l2_norm(grid, st));
  double worst = 0.0;
  for (int m = 0; m < M; ++m) {
    State dt_u = (-1.0 / (12.0 * h)) * node(m + 2);
    dt_u += (8.0 / (12.0 * h)) * node(m + 1);
    dt_u -= (8.0 / (12.0 * h)) * node(m - 1);
    dt_u += (1.0 / (12.0 * h)) * node(m - 2);
    SpectralState r = transform_forward(grid, dt_u);
    const auto us = transform_forward(grid, node(m));
    r += apply_A_spectral(grid, us);
    r += apply_B_spectral(grid, prepare_coefficients(grid, us, law), us);
    if (g) g->add_spectral(orbit.time(m), -1.0, r);
    r.comps[0][0] = cplx{};
    for (auto& c : r.comps)
      for (std::size_t q = 0; q < c.size(); ++q)
        if (grid.is_nyquist(q)) c[q] = cplx{};
    worst = std::max(worst, spectral_l2_norm(grid, r));
  }
  return scale > 0.0 ? worst / scale : worst;
}

namespace {

double weighted_sup_estimate(const Grid& grid, const State& u) {
  const int d = grid.dim();
  const std::size_t np = grid.num_points();
  const auto ca = grid.forward(u.a());
  RealField grad(np, 0.0);
  for (int i = 0; i < d; ++i) {
    MultiIndex alpha{0, 0, 0};
    alpha[i] = 1;
    const auto di = derivative(grid, ca, alpha);
    for (std::size_t p = 0; p < np; ++p) grad[p] += di[p] * di[p];
  }
  double s0 = 0.0, s1 = 0.0, sv = 0.0;
  for (std::size_t p = 0; p < np; ++p) {
    const double r = grid.distance_to_origin(p);
    double vm = 0.0;
    for (int i = 0; i < d; ++i) vm += u.v(i)[p] * u.v(i)[p];
    s0 = std::max(s0, (1.0 + std::pow(r, d - 2)) * std::abs(u.a()[p]));
    s1 = std::max(s1, (1.0 + std::pow(r, d - 1)) * std::sqrt(grad[p]));
    sv = std::max(sv, (1.0 + std::pow(r, d - 1)) * std::sqrt(vm));
  }
  return s0 + s1 + sv;
}

}  // namespace

OrbitNorms orbit_norms(const Grid& grid, const Trajectory& orbit, int s) {
  OrbitNorms n;
  for (const auto& st : orbit.states) {
    n.l2_max = std::max(n.l2_max, l2_norm(grid, st));
    n.hs_max = std::max(n.hs_max, sobolev_norm(grid, st, s));
    n.x1_max = std::max(n.x1_max, x1_norm(grid, st.a()));
    n.y1_max = std::max(n.y1_max, y1_norm(grid, st));
    n.linf_max = std::max(n.linf_max, linf_norm(st));
    n.weighted_sup_max = std::max(n.weighted_sup_max, weighted_sup_estimate(grid, st));
  }
  return n;
}

double xs_surrogate(const Grid& grid, const Trajectory& u, const Trajectory* minus, int s) {
  auto node = [&](std::size_t m) { return minus ? u.states[m] - minus->states[m] : u.states[m]; };
  double space = 0.0;
  for (std::size_t m = 0; m < u.states.size(); ++m) {
    const State d = node(m);
    space = std::max(space, sobolev_norm(grid, d, s) + x1_norm(grid, d.a()) + y1_norm(grid, d));
  }
  double time = 0.0;
  const double h = u.dt();
  for (std::size_t m = 1; m + 1 < u.states.size(); ++m) {
    const State lo = node(m - 1);
    const State hi = node(m + 1);
    RealField da(lo.a().size());
    for (std::size_t p = 0; p < da.size(); ++p) da[p] = (hi.a()[p] - lo.a()[p]) / (2.0 * h);
    time = std::max(time, l2_norm(grid, da));
  }
  return space + time;
}

// ---------------------------------------------------------------------------

PeriodicResult iterate_periodic_logged(const Grid& grid, const CutoffPair& cut, const ForcingField& g,
                                       const PressureLaw& law, const PeriodicSettings& settings,
                                       std::optional<Error>& failure) {
  validate_time_nodes(settings.M, settings.period);
  failure.reset();
  const int M = settings.M;
  const double T = settings.period;
  const ModeSubset low_subset = support_subset(grid, cut.low);
  const double amplitude = forcing_amplitude(g.spec());
  const HighLinearStepper stepper(grid, cut, T / M, settings.eps_deg);
  std::optional<ForcingPropagator> g_low;
  if (!g.spec().is_zero()) g_low.emplace(grid, g, T / M, cut.low, &low_subset, settings.eps_deg);

  PeriodicResult result;
  std::optional<Trajectory> prev;
  std::optional<SubsetTrajectory> prev_low;
  double prev_inc = 0.0;
  int growth_streak = 0;

  for (int N = 0; N < settings.max_outer; ++N) {
    const auto start = std::chrono::steady_clock::now();
    ConvergenceRecord rec;
    rec.iteration = N + 1;

    // Low-frequency part: -P1 B[u^{N-1}] u^{N-1} on the nodes plus P1 G(g)
    // integrated exactly, then the exact periodic solve.
    SubsetTrajectory f1{T, M, {}};
    f1.states.reserve(static_cast<std::size_t>(M) + 1);
    for (int m = 0; m < M; ++m) {
      SpectralState f = grid.zero_spectral_state();
      if (prev) {
        const auto us = transform_forward(grid, prev->states[static_cast<std::size_t>(m)]);
        f -= apply_B_spectral(grid, prepare_coefficients(grid, us, law), us);
      }
      apply_multiplier(f, cut.low);
      f1.states.push_back(gather(low_subset, f));
    }
    f1.states.push_back(f1.states.front());
    const double removed = remove_mass_mode(grid, low_subset, f1);
    rec.mass_mode_defect = amplitude > 0.0 ? removed / amplitude : removed;
    SubsetTrajectory low =
        periodic_from_forcing_low(grid, low_subset, f1, settings.eps_deg, g_low ? &*g_low : nullptr);

    // High-frequency part with coefficients frozen at u^{N-1}.
    Trajectory next{T, M, std::vector<State>(static_cast<std::size_t>(M) + 1)};
    try {
      const HighSystem sys(grid, cut, law, prev ? &*prev : nullptr, prev_low ? &*prev_low : nullptr, &low_subset,
                           &g, T, M);
      const MonodromyResult mono = periodic_init_high(grid, cut, sys, settings);
      rec.monodromy_iterations = mono.iterations;
      rec.monodromy_last_ratio = mono.ratios.empty() ? 0.0 : mono.ratios.back();
      integrate_high_period(grid, sys, stepper, mono.u0, true, [&](int m, const SpectralState& w) {
        SpectralState full = scatter(grid, low_subset, low.states[static_cast<std::size_t>(m)]);
        full += w;
        next.states[static_cast<std::size_t>(m)] = transform_backward(grid, full);
      });
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::non_contraction && e.kind() != ErrorKind::cfl) throw;
      failure = e;
      break;
    }
    for (const auto& st : next.states)
      if (!std::all_of(st.comps.begin(), st.comps.end(), [](const RealField& f) { return all_finite(f); })) {
        failure = Error(ErrorKind::blow_up, "orbit iterate became non-finite");
        break;
      }
    if (failure) break;

    // Increments.
    const double size_x = xs_surrogate(grid, next, nullptr, settings.s);
    const double inc_x = xs_surrogate(grid, next, prev ? &*prev : nullptr, settings.s);
    double inc_l2 = 0.0, inc_hs = 0.0, size_l2 = 0.0, size_hs = 0.0;
    for (std::size_t m = 0; m < next.states.size(); ++m) {
      const State d = prev ? next.states[m] - prev->states[m] : next.states[m];
      inc_l2 = std::max(inc_l2, l2_norm(grid, d));
      inc_hs = std::max(inc_hs, sobolev_norm(grid, d, settings.s));
      size_l2 = std::max(size_l2, l2_norm(grid, next.states[m]));
      size_hs = std::max(size_hs, sobolev_norm(grid, next.states[m], settings.s));
    }
    rec.increment_x = size_x > 0.0 ? inc_x / size_x : inc_x;
    rec.increment_l2 = size_l2 > 0.0 ? inc_l2 / size_l2 : inc_l2;
    rec.increment_hs = size_hs > 0.0 ? inc_hs / size_hs : inc_hs;
    if (N > 0) {
      rec.ratio = prev_inc > 0.0 ? rec.increment_x / prev_inc : 0.0;
      growth_streak = rec.ratio > 1.0 ? growth_streak + 1 : 0;
    }
    prev_inc = rec.increment_x;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.records.push_back(rec);

    prev = std::move(next);
    prev_low = std::move(low);
    result.orbit.mass_mode_defect = rec.mass_mode_defect;

    if (rec.increment_x <= settings.tol_outer) {
      result.orbit.converged = true;
      break;
    }
    if (growth_streak >= 3) {
      failure = Error(ErrorKind::divergence, "outer iteration increments grew three times in a row");
      break;
    }
  }
  if (!failure && !result.orbit.converged)
    failure = Error(ErrorKind::non_convergence, "outer iteration reached max_outer without meeting tol_outer");

  if (prev) {
    result.orbit.trajectory = std::move(*prev);
    result.orbit.low = std::move(*prev_low);
    result.orbit.periodicity_defect = periodicity_defect(grid, result.orbit.trajectory);
    result.orbit.zero_mode_defect = zero_mode_drift(grid, result.orbit.trajectory);
    result.orbit.residual = pde_residual(grid, result.orbit.trajectory, &g, law);
    result.orbit.norms = orbit_norms(grid, result.orbit.trajectory, settings.s);
  } else {
    result.orbit.trajectory = Trajectory{T, M, std::vector<State>(static_cast<std::size_t>(M) + 1, grid.zero_state())};
  }
  return result;
}

PeriodicResult iterate_periodic(const Grid& grid, const CutoffPair& cut, const ForcingField& g,
                                const PressureLaw& law, const PeriodicSettings& settings) {
  std::optional<Error> failure;
  auto result = iterate_periodic_logged(grid, cut, g, law, settings, failure);
  if (failure) {
    std::ostringstream os;
    os << failure->what() << " (iterations:";
    for (const auto& r : result.log.records) os << ' ' << r.increment_x;
    os << ')';
    throw Error(failure->kind(), os.str());
  }
  return result;
}

}  // namespace edp
