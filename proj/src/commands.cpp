#include "commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "diagnostics.hpp"
#include "snapshot.hpp"

#ifndef EDP_VERSION_STRING
#define EDP_VERSION_STRING "unknown"
#endif

namespace edp {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::parse:
    case ErrorKind::invalid_field:
    case ErrorKind::compatibility:
    case ErrorKind::shape_mismatch:
      return kExitValidation;
    case ErrorKind::non_contraction:
    case ErrorKind::divergence:
    case ErrorKind::non_convergence:
      return kExitNonConvergence;
    case ErrorKind::blow_up:
    case ErrorKind::cfl:
    case ErrorKind::vacuum:
    case ErrorKind::overflow:
      return kExitBlowUp;
    case ErrorKind::zero_wavevector:
    case ErrorKind::degenerate_mode:
    case ErrorKind::io:
    case ErrorKind::corrupt_file:
      return kExitFailure;
  }
  return kExitFailure;
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"spectrum", "kernels", "solve-periodic", "evolve", "stability", "norms"};
  return names;
}

namespace {

// One run per output directory at a time.
class DirectoryLock {
 public:
  explicit DirectoryLock(const fs::path& dir) : path_(dir / ".lock") {
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0) throw Error(ErrorKind::io, "output directory is locked by another run: " + path_.string());
  }
  ~DirectoryLock() {
    ::close(fd_);
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path path_;
  int fd_ = -1;
};

class CsvWriter {
 public:
  CsvWriter(const fs::path& path, const std::vector<std::string>& columns) : f_(path) {
    if (!f_) throw Error(ErrorKind::io, "cannot write " + path.string());
    f_ << "# schema " << kSummarySchemaVersion << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) f_ << (i ? "," : "") << columns[i];
    f_ << '\n';
  }
  template <class... Ts>
  void row(const Ts&... xs) {
    bool first = true;
    ((f_ << (first ? "" : ","), put(xs), first = false), ...);
    f_ << '\n';
  }

 private:
  template <class T>
  void put(const T& x) {
    if constexpr (std::is_floating_point_v<T>) {
      char buf[32];
      const auto r = std::to_chars(buf, buf + sizeof buf, x);
      f_.write(buf, r.ptr - buf);
    } else {
      f_ << x;
    }
  }

  std::ofstream f_;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << text;
}

// Non-finite numbers are not representable in JSON.
ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

struct Context {
  const SolverConfig& cfg;
  fs::path out;
  std::ostream& log;
  bool quiet;
  const CommandOptions& options;
  std::map<std::string, double> timings;
  ordered_json results = ordered_json::object();  // survives a failing command

  void say(const std::string& s) const {
    if (!quiet) log << s << '\n';
  }
  template <class F>
  auto timed(const std::string& label, F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(f())>) {
      f();
      timings[label] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    } else {
      auto r = f();
      timings[label] += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      return r;
    }
  }
};

ordered_json convergence_json(const ConvergenceLog& log) {
  ordered_json a = ordered_json::array();
  for (const auto& r : log.records) {
    a.push_back({{"iteration", r.iteration},
                 {"increment_x", number(r.increment_x)},
                 {"increment_l2", number(r.increment_l2)},
                 {"increment_hs", number(r.increment_hs)},
                 {"ratio", number(r.ratio)},
                 {"mass_mode_defect", number(r.mass_mode_defect)},
                 {"monodromy_iterations", r.monodromy_iterations},
                 {"monodromy_last_ratio", number(r.monodromy_last_ratio)}});
  }
  return a;
}

ordered_json norms_json(const OrbitNorms& n) {
  return {{"l2_max", number(n.l2_max)},       {"hs_max", number(n.hs_max)},
          {"x1_max", number(n.x1_max)},       {"y1_max", number(n.y1_max)},
          {"linf_max", number(n.linf_max)},   {"weighted_sup_max", number(n.weighted_sup_max)}};
}

// ---------------------------------------------------------------------------

ordered_json cmd_spectrum(Context& ctx, const Grid& grid) {
  constexpr int kSamples = 512;
  const double k_hi = std::numbers::pi * grid.n() / (2.0 * grid.half_length());
  CsvWriter csv(ctx.out / "spectrum.csv", {"xi", "re_lambda_plus", "im_lambda_plus", "re_lambda_minus", "im_lambda_minus"});
  for (int i = 0; i < kSamples; ++i) {
    const double k = k_hi * i / (kSamples - 1);
    const auto ev = branch_eigenvalues(k);
    csv.row(k, ev.plus.real(), ev.plus.imag(), ev.minus.real(), ev.minus.imag());
  }
  // Largest real part over the nonzero table modes; negative means every
  // nonzero mode decays.
  double max_re = -std::numeric_limits<double>::infinity();
  std::size_t degenerate = 0;
  for (std::size_t q = 0; q < grid.num_modes(); ++q) {
    const double k = grid.wavenumber(q);
    if (k == 0.0) continue;
    max_re = std::max(max_re, branch_eigenvalues(k).plus.real());
    if (is_degenerate(k, ctx.cfg.eps_deg)) ++degenerate;
  }
  return {{"samples", kSamples},
          {"xi_max", number(k_hi)},
          {"max_re_lambda_nonzero_modes", number(max_re)},
          {"degenerate_table_modes", degenerate}};
}

struct KernelCheck {
  KernelSelector sel;
  double lo, hi;  // accepted slope range
};

std::vector<KernelCheck> kernel_checks(double T) {
  auto sel = [](KernelFamily f, int b, int r, int c, double t, double s) {
    KernelSelector k;
    k.family = f;
    k.branch = b;
    k.row = r;
    k.col = c;
    k.t = t;
    k.s = s;
    return k;
  };
  const double inf = std::numeric_limits<double>::infinity();
  return {
      {sel(KernelFamily::e1_branch, 1, 1, 1, 0, 0), -1.6, -0.6},
      {sel(KernelFamily::e1_branch, 1, 1, 2, 0, 0), -inf, -1.5},
      {sel(KernelFamily::e1_branch, 1, 2, 2, 0, 0), -inf, -1.5},
      {sel(KernelFamily::e1_branch, 0, 2, 2, 0, 0), -inf, -1.5},
      {sel(KernelFamily::e1_branch, -1, 1, 1, 0, 0), -inf, -1.5},
      {sel(KernelFamily::e1_branch, -1, 2, 2, 0, 0), -inf, -1.5},
      {sel(KernelFamily::e2, 1, 1, 1, 0.5 * T, 0), -inf, -2.4},
      {sel(KernelFamily::e2, 1, 1, 2, 0.5 * T, 0), -inf, -2.4},
      {sel(KernelFamily::e2, 1, 2, 2, 0.5 * T, 0), -inf, -2.4},
  };
}

ordered_json cmd_kernels(Context& ctx, const Grid& grid) {
  const auto& cfg = ctx.cfg;
  const CutoffPair cut(grid, cfg.r1, cfg.r_inf, cfg.r0);
  const CutoffPair branch_cut(grid, cfg.branch_r1, cfg.branch_r_inf, cfg.branch_r0);
  const auto checks = kernel_checks(cfg.T);
  std::vector<KernelSelector> sels;
  for (const auto& c : checks) sels.push_back(c.sel);
  const auto fits = ctx.timed("kernels", [&] { return kernel_decay_report(grid, cut, branch_cut, cfg.T, sels, cfg.eps_deg); });

  CsvWriter table(ctx.out / "kernels.csv",
                  {"name", "slope", "intercept", "residual", "window_lo", "window_hi", "accept_lo", "accept_hi", "pass"});
  CsvWriter profile(ctx.out / "kernel_profiles.csv", {"name", "log_r", "log_max_abs"});
  ordered_json arr = ordered_json::array();
  bool all = true;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    const auto& f = fits[i];
    const bool pass = f.fit.slope >= checks[i].lo && f.fit.slope <= checks[i].hi;
    all = all && pass;
    table.row(f.name, f.fit.slope, f.fit.intercept, f.fit.residual, f.fit.window_lo, f.fit.window_hi, checks[i].lo,
              checks[i].hi, pass ? 1 : 0);
    for (std::size_t j = 0; j < f.fit.x.size(); ++j) profile.row(f.name, f.fit.x[j], f.fit.y[j]);
    arr.push_back({{"name", f.name},
                   {"slope", number(f.fit.slope)},
                   {"residual", number(f.fit.residual)},
                   {"accept", {number(checks[i].lo), number(checks[i].hi)}},
                   {"pass", pass}});
    ctx.say(f.name + " slope " + std::to_string(f.fit.slope));
  }
  return {{"fit_window", {5.0, 0.5 * grid.half_length()}},
          {"branch_cutoff", {cfg.branch_r1, cfg.branch_r_inf, cfg.branch_r0}},
          {"kernels", arr},
          {"all_within_bounds", all}};
}

// Shared by solve-periodic and stability. Throws on failure after the log
// has been recorded into `summary`.
PeriodicResult solve_orbit(Context& ctx, const Grid& grid, const CutoffPair& cut, const ForcingField& g,
                           ordered_json& summary) {
  const auto& cfg = ctx.cfg;
  std::optional<Error> failure;
  auto result = ctx.timed("periodic_solve", [&] {
    return iterate_periodic_logged(grid, cut, g, cfg.pressure(), cfg.periodic_settings(), failure);
  });
  for (const auto& r : result.log.records) {
    std::ostringstream os;
    os << "outer " << r.iteration << ": increment " << r.increment_x << ", ratio " << r.ratio << ", monodromy "
       << r.monodromy_iterations;
    ctx.say(os.str());
  }
  CsvWriter csv(ctx.out / "convergence.csv", {"iteration", "increment_x", "increment_l2", "increment_hs", "ratio",
                                              "mass_mode_defect", "monodromy_iterations", "monodromy_last_ratio"});
  bool ratios_below_one = true;
  for (const auto& r : result.log.records) {
    csv.row(r.iteration, r.increment_x, r.increment_l2, r.increment_hs, r.ratio, r.mass_mode_defect,
            r.monodromy_iterations, r.monodromy_last_ratio);
    if (r.iteration > 1 && !(r.ratio < 1.0)) ratios_below_one = false;
  }
  const auto& o = result.orbit;
  summary["orbit"] = {{"converged", o.converged},
                      {"outer_iterations", result.log.records.size()},
                      {"contraction_ratios_below_one", ratios_below_one},
                      {"periodicity_defect", number(o.periodicity_defect)},
                      {"zero_mode_defect", number(o.zero_mode_defect)},
                      {"mass_mode_defect", number(o.mass_mode_defect)},
                      {"pde_residual", number(o.residual)},
                      {"norms", norms_json(o.norms)}};
  summary["convergence"] = convergence_json(result.log);
  if (failure) throw *failure;
  return result;
}

ordered_json forcing_json(const Grid& grid, const SolverConfig& cfg, const ForcingField& g) {
  const double bracket = g_bracket_norm(grid, g, cfg.s, cfg.M);
  return {{"g_bracket_s", number(bracket)}, {"delta", number(cfg.delta)}, {"below_delta", bracket <= cfg.delta}};
}

ordered_json cmd_solve_periodic(Context& ctx, const Grid& grid) {
  const auto& cfg = ctx.cfg;
  const CutoffPair cut(grid, cfg.r1, cfg.r_inf, cfg.r0);
  const ForcingField g(grid, cfg.forcing_spec());
  ordered_json& out = ctx.results;
  out["forcing"] = forcing_json(grid, cfg, g);
  const auto result = solve_orbit(ctx, grid, cut, g, out);
  const auto& tr = result.orbit.trajectory;
  CsvWriter csv(ctx.out / "orbit_series.csv", {"t", "l2", "hs", "linf"});
  for (int m = 0; m <= tr.M; ++m) {
    const auto& st = tr.states[static_cast<std::size_t>(m)];
    csv.row(tr.time(m), l2_norm(grid, st), sobolev_norm(grid, st, cfg.s), linf_norm(st));
  }
  write_snapshot(grid, tr.states.front(), (ctx.out / "orbit_t0.edpf").string());
  write_snapshot(grid, tr.states[static_cast<std::size_t>(tr.M / 2)], (ctx.out / "orbit_thalf.edpf").string());
  return ctx.results;
}

State initial_state(Context& ctx, const Grid& grid) {
  if (!ctx.options.init_path.empty()) return read_snapshot(ctx.options.init_path, grid);
  return random_perturbation(grid, ctx.cfg.s, ctx.cfg.delta0, ctx.cfg.seed);
}

ordered_json cmd_evolve(Context& ctx, const Grid& grid) {
  const auto& cfg = ctx.cfg;
  const ForcingField g(grid, cfg.forcing_spec());
  const double h = cfg.T / cfg.M;
  const NonlinearStepper stepper(grid, cfg.pressure(), h, cfg.eps_deg);
  std::optional<ForcingPropagator> g_half;
  if (!g.spec().is_zero()) g_half.emplace(grid, g, 0.5 * h, std::span<const double>{}, nullptr, cfg.eps_deg);
  SpectralState u = transform_forward(grid, initial_state(ctx, grid));
  const double hs0 = sobolev_norm(grid, u, cfg.s);
  CsvWriter csv(ctx.out / "evolve_series.csv", {"t", "l2", "hs", "linf"});
  const int steps = cfg.horizon_periods * cfg.M;
  double hs = hs0;
  ctx.timed("evolve", [&] {
    for (int k = 0; k <= steps; ++k) {
      if (k > 0) stepper.step(u, (k - 1) * h, nullptr, g_half ? &*g_half : nullptr);
      if (k % cfg.M != 0 && k != steps) continue;
      const State r = transform_backward(grid, u);
      hs = sobolev_norm(grid, r, cfg.s);
      if (!std::isfinite(hs) || (hs0 > 0.0 && hs > 1e3 * hs0 && hs > 1.0))
        throw Error(ErrorKind::blow_up, "evolved state left the small-data regime");
      csv.row(k * h, l2_norm(grid, r), hs, linf_norm(r));
    }
  });
  const State final_state = transform_backward(grid, u);
  write_snapshot(grid, final_state, (ctx.out / "evolve_final.edpf").string());
  return {{"steps", steps},
          {"dt", number(h)},
          {"hs_initial", number(hs0)},
          {"hs_final", number(hs)},
          {"l2_final", number(l2_norm(grid, final_state))},
          {"linf_final", number(linf_norm(final_state))}};
}

ordered_json cmd_stability(Context& ctx, const Grid& grid) {
  const auto& cfg = ctx.cfg;
  const CutoffPair cut(grid, cfg.r1, cfg.r_inf, cfg.r0);
  const ForcingField g(grid, cfg.forcing_spec());
  ordered_json& out = ctx.results;
  out["forcing"] = forcing_json(grid, cfg, g);
  const auto result = solve_orbit(ctx, grid, cut, g, out);
  const auto& orbit = result.orbit.trajectory;

  const State pert = initial_state(ctx, grid);
  const auto rep = ctx.timed("stability", [&] {
    return stability_experiment(grid, orbit, pert, cfg.horizon_periods, &g, cfg.pressure(), cfg.s, cfg.eps_deg);
  });
  CsvWriter csv(ctx.out / "stability.csv", {"t", "l2", "hs", "linf", "dissipation", "energy_ratio", "drift"});
  for (std::size_t i = 0; i < rep.t.size(); ++i)
    csv.row(rep.t[i], rep.l2[i], rep.hs[i], rep.linf[i], rep.dissipation[i], rep.energy_ratio[i], rep.drift[i]);

  // Homogeneous high-frequency system with coefficients from the orbit.
  const State w0 = random_high_frequency_state(grid, cut, cfg.seed);
  const auto decay = ctx.timed("high_decay", [&] {
    return high_frequency_decay(grid, cut, w0, &orbit, cfg.pressure(), 5, cfg.s, cfg.eps_deg);
  });

  out["stability"] = {{"horizon_periods", cfg.horizon_periods},
                      {"perturbation_hs", number(cfg.delta0)},
                      {"linf_ratio", number(rep.linf_ratio)},
                      {"log_linf_slope", number(rep.log_linf_slope)},
                      {"energy_ratio_slope_per_period", number(rep.energy_ratio_slope)},
                      {"energy_ratio_max", number(rep.energy_ratio_max)},
                      {"max_reference_drift", number(rep.max_drift)},
                      {"decaying", rep.decaying},
                      {"verdict_rule", "decaying iff linf_ratio <= 0.2 and log_linf_slope < 0"}};
  out["high_frequency_decay"] = {{"empirical_rate", number(decay.fit.slope)},
                                 {"window", {number(decay.fit.window_lo), number(decay.fit.window_hi)}}};
  ctx.say("stability: linf ratio " + std::to_string(rep.linf_ratio) + (rep.decaying ? " (decaying)" : ""));
  return ctx.results;
}

ordered_json cmd_norms(Context& ctx, const Grid& grid) {
  const auto& cfg = ctx.cfg;
  const ForcingField g(grid, cfg.forcing_spec());
  ordered_json out;
  out["forcing"] = forcing_json(grid, cfg, g);
  const State u = initial_state(ctx, grid);
  const auto ed = energy_functionals(grid, u, grid.zero_field(), cfg.s, grid.dim() - 1, cfg.pressure());
  out["state"] = {{"source", ctx.options.init_path.empty() ? "random_perturbation" : "snapshot"},
                  {"l2", number(l2_norm(grid, u))},
                  {"hs", number(sobolev_norm(grid, u, cfg.s))},
                  {"weighted_hs", number(weighted_sobolev_norm(grid, u, cfg.s, grid.dim() - 1))},
                  {"x1", number(x1_norm(grid, u.a()))},
                  {"y1", number(y1_norm(grid, u))},
                  {"linf", number(linf_norm(u))},
                  {"energy", number(ed.E)},
                  {"dissipation", number(ed.D)}};
  return out;
}

void write_summary(const fs::path& out, const ordered_json& summary) {
  write_text(out / "summary.json", summary.dump(2) + "\n");
}

}  // namespace

int run_command(const std::string& command, const SolverConfig& cfg, const CommandOptions& options,
                std::ostream& log) {
  const fs::path out = options.out_dir.empty() ? fs::path(cfg.out_dir) : fs::path(options.out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create output directory " + out.string());
  const DirectoryLock lock(out);

  Context ctx{cfg, out, log, options.quiet, options, {}};
  ordered_json summary;
  summary["schema_version"] = kSummarySchemaVersion;
  summary["version"] = EDP_VERSION_STRING;
  summary["command"] = command;
  summary["config"] = serialize_config(cfg);
  summary["outside_theory"] = cfg.outside_theory();
  if (cfg.outside_theory())
    ctx.say("note: dim < 3 or s < dim/2 + 2; results are outside the range covered by the theory");

  int code = kExitOk;
  ordered_json status = {{"ok", true}};
  const auto t0 = std::chrono::steady_clock::now();
  try {
    static const std::map<std::string, std::function<ordered_json(Context&, const Grid&)>> table{
        {"spectrum", cmd_spectrum},   {"kernels", cmd_kernels}, {"solve-periodic", cmd_solve_periodic},
        {"evolve", cmd_evolve},       {"stability", cmd_stability}, {"norms", cmd_norms}};
    const auto it = table.find(command);
    if (it == table.end()) throw Error(ErrorKind::validation, "unknown command '" + command + "'");
    const Grid grid(cfg.dim, cfg.n, cfg.L);
    const ordered_json results = it->second(ctx, grid);
    for (const auto& [k, v] : results.items()) ctx.results[k] = v;
  } catch (const Error& e) {
    code = exit_code_for(e.kind());
    status = {{"ok", false}, {"error_kind", to_string(e.kind())}, {"message", e.what()}};
    if (!options.quiet) log << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
  } catch (const std::exception& e) {
    code = kExitFailure;
    status = {{"ok", false}, {"error_kind", "internal"}, {"message", e.what()}};
    if (!options.quiet) log << "error: " << e.what() << '\n';
  }
  summary["results"] = ctx.results;
  summary["status"] = status;
  summary["exit_code"] = code;
  write_summary(out, summary);

  ordered_json timings;
  timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& [k, v] : ctx.timings) timings[k + "_seconds"] = v;
  write_text(out / "timings.json", timings.dump(2) + "\n");
  return code;
}

int run_command_from_file(const std::string& command, const std::string& config_path,
                          const CommandOptions& options, std::ostream& log) {
  SolverConfig cfg;
  try {
    cfg = config_path.empty() ? parse_config("") : load_config(config_path);
  } catch (const Error& e) {
    if (!options.quiet) log << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    // Still leave a summary behind when an output directory is known.
    const fs::path out = options.out_dir.empty() ? fs::path(SolverConfig{}.out_dir) : fs::path(options.out_dir);
    std::error_code ec;
    fs::create_directories(out, ec);
    if (!ec) {
      ordered_json summary;
      summary["schema_version"] = kSummarySchemaVersion;
      summary["version"] = EDP_VERSION_STRING;
      summary["command"] = command;
      summary["status"] = {{"ok", false}, {"error_kind", to_string(e.kind())}, {"message", e.what()}};
      summary["exit_code"] = exit_code_for(e.kind());
      try {
        write_summary(out, summary);
      } catch (const Error&) {
      }
    }
    return exit_code_for(e.kind());
  }
  try {
    return run_command(command, cfg, options, log);
  } catch (const Error& e) {
    if (!options.quiet) log << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  }
}

}  // namespace edp
