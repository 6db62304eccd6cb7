#pragma once

#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "nonlinear.hpp"
#include "periodic.hpp"

namespace edp {

/// Run configuration. Text form is line-oriented `key = value` with
/// `[section]` headers; see parse_config for the accepted keys.
struct SolverConfig {
  // [grid]
  int dim = 3;
  int n = 64;
  double L = 16.0 * std::numbers::pi;
  // [time]
  double T = 1.0;
  int M = 128;
  int horizon_periods = 10;  // stability / evolve horizon
  // [cutoff]
  double r1 = 0.1;
  double r_inf = 0.4;
  std::optional<double> r0;  // mollifier outer radius, default 2 r_inf
  // Cutoff for the branch kernels; its support must stay inside |xi| < 1/2
  // where the branch projections are defined.
  double branch_r1 = 0.125;
  double branch_r_inf = 0.25;
  double branch_r0 = 0.49;
  int s = 3;
  // [pressure]
  std::string law = "quadratic";
  double gamma = 1.4;
  // [forcing.N]
  std::vector<ForcingTerm> forcing = {ForcingTerm{}};
  // [tolerances]
  double tol_outer = 1e-8;
  double tol_neumann = 1e-9;
  double eps_deg = kDefaultEpsDeg;
  double delta = 1e-2;    // smallness threshold reported against [g]_s
  double delta0 = 1e-3;   // H^s size of stability perturbations
  int max_outer = 50;
  int max_monodromy_iters = 200;
  std::string monodromy = "preconditioned";
  // [output]
  std::string out_dir = "out";
  std::uint64_t seed = 1;

  PressureLaw pressure() const;
  ForcingSpec forcing_spec() const;
  PeriodicSettings periodic_settings() const;
  /// Theory needs dim >= 3 and s >= dim/2 + 2; runs outside are allowed.
  bool outside_theory() const;
};

/// Throws parse (with line number) or validation errors.
SolverConfig parse_config(const std::string& text);
SolverConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const SolverConfig& cfg);

/// Checks every invariant; throws validation naming the violated one.
void validate_config(const SolverConfig& cfg);

}  // namespace edp
