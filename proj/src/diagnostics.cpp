#include "diagnostics.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace edp {

double g_bracket_norm(const Grid& grid, const ForcingField& g, int s, int M) {
  const int d = grid.dim();
  if (s < 1) throw Error(ErrorKind::validation, "[g]_s needs s >= 1");
  validate_time_nodes(M, g.period());
  const auto& terms = g.spec().terms;
  const std::size_t K = terms.size();
  if (K == 0 || g.spec().is_zero()) return 0.0;
  const std::size_t np = grid.num_points();
  const RealField w = weight_function(grid);

  // Gram matrix of the spatial profiles in H^{s-1}_{d-1}; the time dependence
  // enters only through the scalar factors.
  std::vector<std::vector<double>> gram(K, std::vector<double>(K, 0.0));
  const int ell = d - 1;
  std::vector<RealField> profile(K);
  for (int j = 0; j < d; ++j) {
    std::vector<SpectralField> coeffs(K);
    for (std::size_t k = 0; k < K; ++k) {
      coeffs[k] = grid.forward(g.term_field(k).v(j));
    }
    for (const auto& alpha : multi_indices(d, s - 1)) {
      for (std::size_t k = 0; k < K; ++k) {
        profile[k] = derivative(grid, coeffs[k], alpha);
        for (std::size_t p = 0; p < np; ++p) profile[k][p] *= std::pow(w[p], ell);
      }
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t l = 0; l < K; ++l) {
          double acc = 0.0;
          for (std::size_t p = 0; p < np; ++p) acc += profile[k][p] * profile[l][p];
          gram[k][l] += acc * grid.cell_volume();
        }
    }
  }

  const double h = g.period() / M;
  double sup_part = 0.0;
  double l2_time = 0.0;
  for (int m = 0; m <= M; ++m) {
    const double t = h * m;
    const State gs = g.evaluate(t);
    double l1 = 0.0, wsup = 0.0;
    for (std::size_t p = 0; p < np; ++p) {
      double mag = 0.0;
      for (int j = 0; j < d; ++j) mag += gs.v(j)[p] * gs.v(j)[p];
      mag = std::sqrt(mag);
      l1 += mag;
      wsup = std::max(wsup, std::pow(w[p], d) * mag);
    }
    sup_part = std::max(sup_part, l1 * grid.cell_volume() + wsup);
    double q = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t l = 0; l < K; ++l)
        q += time_factor(terms[k], g.period(), t) * time_factor(terms[l], g.period(), t) * gram[k][l];
    const double weight = (m == 0 || m == M) ? 0.5 : 1.0;
    l2_time += weight * h * std::max(q, 0.0);
  }
  return sup_part + std::sqrt(l2_time);
}

EnergyPair energy_functionals(const Grid& grid, const State& u, const RealField& phi_tilde, int k, int ell,
                              const PressureLaw& law) {
  if (k < 1) throw Error(ErrorKind::validation, "energy functionals need k >= 1");
  const int d = grid.dim();
  EnergyPair out;
  for (const auto& f : u.comps) {
    const double n = weighted_sobolev_norm(grid, f, k, ell);
    out.E += n * n;
  }
  const RealField g3 = g3_eval(phi_tilde, law);
  const RealField w = weight_function(grid);
  const auto ca = grid.forward(u.a());
  double correction = 0.0;
  for (const auto& alpha : multi_indices(d, k)) {
    const RealField da = derivative(grid, ca, alpha);
    for (std::size_t p = 0; p < da.size(); ++p) {
      const double x = std::pow(w[p], ell) * da[p];
      correction += g3[p] * x * x;
    }
  }
  out.E += 0.5 * correction * grid.cell_volume();

  for (int i = 0; i < d; ++i) {
    MultiIndex alpha{0, 0, 0};
    alpha[i] = 1;
    const double n = weighted_sobolev_norm(grid, derivative(grid, ca, alpha), k - 1, ell);
    out.D += n * n;
  }
  for (int i = 0; i < d; ++i) {
    const double n = weighted_sobolev_norm(grid, u.v(i), k, ell);
    out.D += n * n;
  }
  return out;
}

namespace {

void least_squares(const std::vector<double>& x, const std::vector<double>& y, DecayFit& fit) {
  const double n = static_cast<double>(x.size());
  if (x.size() < 2) throw Error(ErrorKind::validation, "fit window needs at least two samples");
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorKind::validation, "fit window has no spread in the abscissa");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    r += e * e;
  }
  fit.residual = std::sqrt(r / n);
  fit.x = x;
  fit.y = y;
}

}  // namespace

DecayFit decay_rate_fit(const std::vector<double>& t, const std::vector<double>& values, double lo, double hi) {
  if (t.size() != values.size()) throw Error(ErrorKind::shape_mismatch, "decay fit: series lengths differ");
  DecayFit fit;
  fit.window_lo = lo;
  fit.window_hi = hi;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < lo || t[i] > hi) continue;
    if (!(values[i] > 0.0)) throw Error(ErrorKind::validation, "decay fit: non-positive value in window");
    x.push_back(t[i]);
    y.push_back(std::log(values[i]));
  }
  least_squares(x, y, fit);
  return fit;
}

DecayFit radial_decay_fit(const Grid& grid, const RealField& f, double r_lo, double r_hi, int bins) {
  if (!(r_lo > 0.0 && r_hi > r_lo) || bins < 2) throw Error(ErrorKind::validation, "invalid radial fit window");
  std::vector<double> peak(static_cast<std::size_t>(bins), 0.0);
  const double log_lo = std::log(r_lo);
  const double width = (std::log(r_hi) - log_lo) / bins;
  for (std::size_t p = 0; p < f.size(); ++p) {
    const double r = grid.distance_to_origin(p);
    if (r < r_lo || r > r_hi) continue;
    int b = static_cast<int>((std::log(r) - log_lo) / width);
    b = std::clamp(b, 0, bins - 1);
    peak[static_cast<std::size_t>(b)] = std::max(peak[static_cast<std::size_t>(b)], std::abs(f[p]));
  }
  DecayFit fit;
  fit.window_lo = r_lo;
  fit.window_hi = r_hi;
  std::vector<double> x, y;
  for (int b = 0; b < bins; ++b) {
    if (!(peak[static_cast<std::size_t>(b)] > 0.0)) continue;
    x.push_back(log_lo + (b + 0.5) * width);
    y.push_back(std::log(peak[static_cast<std::size_t>(b)]));
  }
  least_squares(x, y, fit);
  return fit;
}

std::string kernel_name(const KernelSelector& sel) {
  std::ostringstream os;
  switch (sel.family) {
    case KernelFamily::e1_branch:
      os << "E1_" << (sel.branch > 0 ? "+" : (sel.branch < 0 ? "-" : "0")) << "_" << sel.row << sel.col;
      break;
    case KernelFamily::e1_full:
      os << "E1_full_" << sel.row << sel.col << "_t" << sel.t << "_s" << sel.s;
      break;
    case KernelFamily::e2:
      os << "E2_" << sel.row << sel.col << "_dt" << (sel.t - sel.s);
      break;
  }
  return os.str();
}

std::vector<KernelFit> kernel_decay_report(const Grid& grid, const CutoffPair& cut, const CutoffPair& branch_cut,
                                           double period, const std::vector<KernelSelector>& selectors,
                                           double eps_deg) {
  std::vector<KernelFit> out;
  const double r_hi = 0.5 * grid.half_length();
  for (const auto& sel : selectors) {
    const CutoffPair& c = sel.family == KernelFamily::e1_branch ? branch_cut : cut;
    const RealField k = kernel_field(grid, c, period, sel, eps_deg);
    out.push_back({kernel_name(sel), sel, radial_decay_fit(grid, k, 5.0, r_hi)});
  }
  return out;
}

State random_perturbation(const Grid& grid, int s, double delta0, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center(-0.25 * grid.half_length(), 0.25 * grid.half_length());
  std::normal_distribution<double> amp(0.0, 1.0);
  constexpr int kBumps = 4;
  constexpr double kWidth = 2.0;
  const int d = grid.dim();
  State u = grid.zero_state();
  const double L = grid.half_length();
  for (int b = 0; b < kBumps; ++b) {
    std::array<double, 3> c{0.0, 0.0, 0.0};
    for (int i = 0; i < d; ++i) c[i] = center(rng);
    std::vector<double> weights(static_cast<std::size_t>(d + 1));
    for (auto& x : weights) x = amp(rng);
    for (std::size_t p = 0; p < grid.num_points(); ++p) {
      const auto x = grid.position(p);
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        double dx = x[i] - c[i];
        if (dx >= L) dx -= 2.0 * L;
        if (dx < -L) dx += 2.0 * L;
        r2 += dx * dx;
      }
      const double e = std::exp(-r2 / (2.0 * kWidth * kWidth));
      for (int comp = 0; comp <= d; ++comp) u.comps[static_cast<std::size_t>(comp)][p] += weights[static_cast<std::size_t>(comp)] * e;
    }
  }
  const double n = sobolev_norm(grid, u, s);
  if (n > 0.0) u *= delta0 / n;
  return u;
}

StabilityReport stability_experiment(const Grid& grid, const Trajectory& orbit, const State& perturbation,
                                     int horizon_periods, const ForcingField* g, const PressureLaw& law, int s,
                                     double eps_deg) {
  if (horizon_periods < 1) throw Error(ErrorKind::validation, "horizon must be at least one period");
  const int M = orbit.M;
  const double h = orbit.dt();
  const NonlinearStepper stepper(grid, law, h, eps_deg);
  std::optional<ForcingPropagator> g_half;
  if (g && !g->spec().is_zero()) g_half.emplace(grid, *g, 0.5 * h, std::span<const double>{}, nullptr, eps_deg);
  const ForcingPropagator* gp = g_half ? &*g_half : nullptr;

  SpectralState ref = transform_forward(grid, orbit.states.front());
  SpectralState run = ref;
  run += transform_forward(grid, perturbation);

  double orbit_scale = 0.0;
  for (const auto& st : orbit.states) orbit_scale = std::max(orbit_scale, l2_norm(grid, st));

  // |grad f|^2_{H^{s-1}} multiplier per mode
  std::vector<double> grad_mult(grid.num_modes());
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    const double k = grid.wavenumber(q);
    grad_mult[q] = grid.multiplicity(q) * k * k * sobolev_multiplier(grid, q, s - 1) * grid.volume();
  }

  StabilityReport rep;
  double hs0 = 0.0, linf0 = 0.0;
  double cumulative = 0.0;
  double prev_integrand = 0.0;
  const int steps = horizon_periods * M;
  for (int n = 0; n <= steps; ++n) {
    if (n > 0) {
      const double t = (n - 1) * h;
      stepper.step(run, t, nullptr, gp);
      stepper.step(ref, t, nullptr, gp);
    }
    SpectralState diff = run;
    diff -= ref;
    const State dr = transform_backward(grid, diff);
    const double l2 = spectral_l2_norm(grid, diff);
    const double hs = sobolev_norm(grid, diff, s);
    const double li = linf_norm(dr);
    double grad_psi = 0.0;
    for (std::size_t q = 0; q < grid.num_modes(); ++q) grad_psi += grad_mult[q] * std::norm(diff.comps[0][q]);
    double w_hs2 = 0.0;
    {
      SpectralState wpart = diff;
      std::fill(wpart.comps[0].begin(), wpart.comps[0].end(), cplx{});
      const double wn = sobolev_norm(grid, wpart, s);
      w_hs2 = wn * wn;
    }
    const double integrand = grad_psi + w_hs2;
    if (n > 0) cumulative += 0.5 * h * (integrand + prev_integrand);
    prev_integrand = integrand;
    if (n == 0) {
      hs0 = hs;
      linf0 = li;
    } else if ((hs0 > 0.0 && hs > 1e3 * hs0) || (linf0 > 0.0 && li > 1e3 * linf0) || !std::isfinite(hs)) {
      throw Error(ErrorKind::blow_up, "perturbation grew beyond 1e3 times its initial size");
    }
    const State ref_state = transform_backward(grid, ref);
    const State per = orbit.states[static_cast<std::size_t>(n % M)];
    const double drift = l2_norm(grid, ref_state - per) / (orbit_scale > 0.0 ? orbit_scale : 1.0);

    rep.t.push_back(n * h);
    rep.l2.push_back(l2);
    rep.hs.push_back(hs);
    rep.linf.push_back(li);
    rep.dissipation.push_back(cumulative);
    rep.energy_ratio.push_back(hs0 > 0.0 ? (hs * hs + cumulative) / (hs0 * hs0) : 0.0);
    rep.drift.push_back(drift);
    rep.max_drift = std::max(rep.max_drift, drift);
    rep.energy_ratio_max = std::max(rep.energy_ratio_max, rep.energy_ratio.back());
  }
  rep.linf_ratio = linf0 > 0.0 ? rep.linf.back() / linf0 : 0.0;
  if (linf0 > 0.0) {
    bool positive = std::all_of(rep.linf.begin(), rep.linf.end(), [](double x) { return x > 0.0; });
    if (positive) rep.log_linf_slope = decay_rate_fit(rep.t, rep.linf, 0.0, rep.t.back()).slope;
    std::vector<double> k, r;
    for (int p = horizon_periods / 2; p <= horizon_periods; ++p) {
      k.push_back(p);
      r.push_back(rep.energy_ratio[static_cast<std::size_t>(p * M)]);
    }
    if (k.size() >= 2) {
      // linear (not logarithmic) trend of the ratio per period
      DecayFit lin;
      least_squares(k, r, lin);
      rep.energy_ratio_slope = lin.slope;
    }
    rep.decaying = rep.linf_ratio <= 0.2 && rep.log_linf_slope < 0.0;
  }
  return rep;
}

HighDecay high_frequency_decay(const Grid& grid, const CutoffPair& cut, const State& w0, const Trajectory* orbit,
                               const PressureLaw& law, int periods, int s, double eps_deg) {
  const int M = orbit ? orbit->M : 128;
  const double T = orbit ? orbit->period : 1.0;
  const HighSystem sys(grid, cut, law, orbit, nullptr, nullptr, nullptr, T, M);
  const HighLinearStepper stepper(grid, cut, T / M, eps_deg);
  HighDecay out;
  SpectralState w = transform_forward(grid, w0);
  apply_support_mask(w, cut.high);
  for (int p = 0; p < periods; ++p) {
    w = integrate_high_period(grid, sys, stepper, w, false, [&](int m, const SpectralState& x) {
      if (m == M && p + 1 < periods) return;  // shared with the next period's node 0
      const double n = sobolev_norm(grid, x, s);
      out.t.push_back(T * p + T * m / M);
      out.energy.push_back(n * n);
    });
  }
  out.fit = decay_rate_fit(out.t, out.energy, 0.0, T * periods);
  return out;
}

State random_high_frequency_state(const Grid& grid, const CutoffPair& cut, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  SpectralState c = grid.zero_spectral_state();
  for (auto& f : c.comps)
    for (std::size_t q = 0; q < f.size(); ++q) {
      const double re = nd(rng);
      const double im = nd(rng);
      if (cut.high[q] > 0.0 && !grid.is_nyquist(q)) f[q] = cplx{re, im};
    }
  State u = transform_backward(grid, c);
  const double n = l2_norm(grid, u);
  if (n > 0.0) u *= 1.0 / n;
  return u;
}

}  // namespace edp
