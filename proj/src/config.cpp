#include "config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace edp {

PressureLaw SolverConfig::pressure() const {
  return law == "gamma" ? PressureLaw::gamma_law(gamma) : PressureLaw::quadratic();
}

ForcingSpec SolverConfig::forcing_spec() const { return ForcingSpec{forcing, T}; }

PeriodicSettings SolverConfig::periodic_settings() const {
  PeriodicSettings p;
  p.period = T;
  p.M = M;
  p.s = s;
  p.tol_outer = tol_outer;
  p.tol_neumann = tol_neumann;
  p.eps_deg = eps_deg;
  p.max_outer = max_outer;
  p.max_monodromy_iters = max_monodromy_iters;
  p.method = monodromy == "neumann" ? MonodromyMethod::neumann : MonodromyMethod::preconditioned;
  return p;
}

bool SolverConfig::outside_theory() const { return dim < 3 || s < dim / 2 + 2; }

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(ErrorKind::parse, "line " + std::to_string(line) + ": " + what);
}

// Accepts plain numbers and a trailing "pi" factor ("16pi", "0.5 pi").
double to_double(const std::string& v, int line) {
  std::string body = v;
  double factor = 1.0;
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0) {
    factor = std::numbers::pi;
    body = trim(body.substr(0, body.size() - 2));
    if (!body.empty() && body.back() == '*') body = trim(body.substr(0, body.size() - 1));
    if (body.empty()) body = "1";
  }
  double x = 0.0;
  const auto* end = body.data() + body.size();
  const auto r = std::from_chars(body.data(), end, x);
  if (r.ec != std::errc{} || r.ptr != end) parse_fail(line, "expected a number, got '" + v + "'");
  return x * factor;
}

long long to_integer(const std::string& v, int line) {
  long long x = 0;
  const auto* end = v.data() + v.size();
  const auto r = std::from_chars(v.data(), end, x);
  if (r.ec != std::errc{} || r.ptr != end) parse_fail(line, "expected an integer, got '" + v + "'");
  return x;
}

// Shortest text that reads back to the same double.
std::string num(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

using Setter = std::function<void(const std::string& value, int line)>;

std::map<std::string, Setter> scalar_keys(SolverConfig& c) {
  auto dbl = [](double& field) { return Setter([&field](const std::string& v, int l) { field = to_double(v, l); }); };
  auto integer = [](int& field) {
    return Setter([&field](const std::string& v, int l) { field = static_cast<int>(to_integer(v, l)); });
  };
  auto word = [](std::string& field) { return Setter([&field](const std::string& v, int) { field = v; }); };
  return {
      {"grid.dim", integer(c.dim)},
      {"grid.n", integer(c.n)},
      {"grid.L", dbl(c.L)},
      {"time.T", dbl(c.T)},
      {"time.M", integer(c.M)},
      {"time.horizon_periods", integer(c.horizon_periods)},
      {"cutoff.r1", dbl(c.r1)},
      {"cutoff.r_inf", dbl(c.r_inf)},
      {"cutoff.r0", [&c](const std::string& v, int l) { c.r0 = to_double(v, l); }},
      {"cutoff.branch_r1", dbl(c.branch_r1)},
      {"cutoff.branch_r_inf", dbl(c.branch_r_inf)},
      {"cutoff.branch_r0", dbl(c.branch_r0)},
      {"cutoff.s", integer(c.s)},
      {"pressure.law", word(c.law)},
      {"pressure.gamma", dbl(c.gamma)},
      {"tolerances.tol_outer", dbl(c.tol_outer)},
      {"tolerances.tol_neumann", dbl(c.tol_neumann)},
      {"tolerances.eps_deg", dbl(c.eps_deg)},
      {"tolerances.delta", dbl(c.delta)},
      {"tolerances.delta0", dbl(c.delta0)},
      {"tolerances.max_outer", integer(c.max_outer)},
      {"tolerances.max_monodromy_iters", integer(c.max_monodromy_iters)},
      {"tolerances.monodromy", word(c.monodromy)},
      {"output.dir", word(c.out_dir)},
      {"output.seed",
       [&c](const std::string& v, int l) {
         const long long x = to_integer(v, l);
         if (x < 0) parse_fail(l, "seed must be non-negative");
         c.seed = static_cast<std::uint64_t>(x);
       }},
  };
}

void set_forcing_key(ForcingTerm& t, const std::string& key, const std::string& v, int line) {
  if (key == "amplitude") {
    t.amplitude = to_double(v, line);
  } else if (key == "direction") {
    std::istringstream is(v);
    std::string part;
    std::array<double, 3> d{0.0, 0.0, 0.0};
    int k = 0;
    while (is >> part) {
      if (k == 3) parse_fail(line, "direction takes at most 3 components");
      d[static_cast<std::size_t>(k++)] = to_double(part, line);
    }
    if (k == 0) parse_fail(line, "direction needs at least one component");
    t.direction = d;
  } else if (key == "envelope") {
    if (v == "gaussian") t.envelope = Envelope::gaussian;
    else if (v == "rational") t.envelope = Envelope::rational;
    else parse_fail(line, "envelope must be gaussian or rational");
  } else if (key == "sigma") {
    t.sigma = to_double(v, line);
  } else if (key == "p") {
    t.p = to_double(v, line);
  } else if (key == "time") {
    if (v == "cosine") t.time = TimeProfile::cosine;
    else if (v == "constant") t.time = TimeProfile::constant;
    else parse_fail(line, "time must be cosine or constant");
  } else if (key == "q") {
    t.q = static_cast<int>(to_integer(v, line));
  } else if (key == "phase") {
    t.phase = to_double(v, line);
  } else {
    parse_fail(line, "unknown key '" + key + "' in forcing section");
  }
}

}  // namespace

SolverConfig parse_config(const std::string& text) {
  SolverConfig cfg;
  auto keys = scalar_keys(cfg);
  std::map<int, ForcingTerm> forcing;  // ordered by section number
  std::map<std::string, int> seen;

  std::istringstream in(text);
  std::string raw;
  std::string section;
  int forcing_index = -1;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find_first_of("#;");
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') parse_fail(line, "unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      forcing_index = -1;
      if (section.rfind("forcing.", 0) == 0) {
        const std::string idx = section.substr(8);
        const long long k = to_integer(idx, line);
        if (k < 1) parse_fail(line, "forcing sections are numbered from 1");
        forcing_index = static_cast<int>(k);
        if (forcing.count(forcing_index)) parse_fail(line, "duplicate section [" + section + "]");
        forcing[forcing_index] = ForcingTerm{};
      } else if (section != "grid" && section != "time" && section != "cutoff" && section != "pressure" &&
                 section != "tolerances" && section != "output") {
        parse_fail(line, "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) parse_fail(line, "expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) parse_fail(line, "empty key");
    if (value.empty()) parse_fail(line, "empty value for '" + key + "'");
    if (section.empty()) parse_fail(line, "key outside of a section");
    const std::string full = section + "." + key;
    if (seen.count(full)) parse_fail(line, "duplicate key '" + full + "'");
    seen[full] = line;
    if (forcing_index > 0) {
      set_forcing_key(forcing[forcing_index], key, value, line);
      continue;
    }
    const auto it = keys.find(full);
    if (it == keys.end()) parse_fail(line, "unknown key '" + key + "' in [" + section + "]");
    it->second(value, line);
  }
  if (!forcing.empty()) {
    cfg.forcing.clear();
    for (auto& [k, t] : forcing) cfg.forcing.push_back(t);
  }
  validate_config(cfg);
  return cfg;
}

SolverConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot open config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const SolverConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::validation, m); };
  if (c.dim < 1 || c.dim > 3) fail("dim in {1, 2, 3} required");
  if (c.n < 4 || (c.n & (c.n - 1)) != 0) fail("n must be a power of two >= 4");
  if (!(c.L > 0.0) || !std::isfinite(c.L)) fail("L > 0 required");
  if (!(c.T > 0.0) || !std::isfinite(c.T)) fail("T > 0 required");
  if (c.M < 16) fail("M >= 16 required");
  if (c.horizon_periods < 1) fail("horizon_periods >= 1 required");
  if (!(c.r1 > 0.0 && c.r1 < c.r_inf && c.r_inf < 0.5)) fail("r1 < r_inf < 0.5 required");
  if (!(std::numbers::pi / c.L < c.r1)) fail("pi / L < r1 required (the low ball must contain nonzero modes)");
  if (c.r0 && !(*c.r0 > c.r_inf && *c.r0 <= 2.0 * c.r_inf)) fail("r_inf < r0 <= 2 r_inf required");
  if (!(c.branch_r1 > 0.0 && c.branch_r1 < c.branch_r_inf && c.branch_r_inf < c.branch_r0 &&
        c.branch_r0 <= 2.0 * c.branch_r_inf && c.branch_r0 < 0.5))
    fail("branch_r1 < branch_r_inf < branch_r0 < 0.5 and branch_r0 <= 2 branch_r_inf required");
  if (c.s < 1) fail("s >= 1 required");
  if (c.law != "quadratic" && c.law != "gamma") fail("pressure law must be quadratic or gamma");
  if (c.law == "gamma" && !(c.gamma > 1.0 && c.gamma <= 3.0)) fail("gamma in (1, 3] required");
  for (std::size_t k = 0; k < c.forcing.size(); ++k) {
    const auto& t = c.forcing[k];
    const std::string where = "forcing." + std::to_string(k + 1) + ": ";
    if (!std::isfinite(t.amplitude)) fail(where + "finite amplitude required");
    double norm = 0.0;
    for (double x : t.direction) norm += x * x;
    if (norm == 0.0) fail(where + "nonzero direction required");
    for (int i = c.dim; i < 3; ++i)
      if (t.direction[static_cast<std::size_t>(i)] != 0.0) fail(where + "direction has more components than dim");
    if (!(t.sigma > 0.0)) fail(where + "sigma > 0 required");
    if (!(t.p > 0.0)) fail(where + "p > 0 required");
    if (t.q < 1) fail(where + "q >= 1 required");
  }
  if (!(c.tol_outer > 0.0) || !(c.tol_neumann > 0.0)) fail("tolerances must be positive");
  if (!(c.eps_deg > 0.0 && c.eps_deg < 0.1)) fail("0 < eps_deg < 0.1 required");
  if (!(c.delta > 0.0) || !(c.delta0 > 0.0)) fail("delta, delta0 > 0 required");
  if (c.max_outer < 1 || c.max_monodromy_iters < 1) fail("iteration caps must be >= 1");
  if (c.monodromy != "preconditioned" && c.monodromy != "neumann")
    fail("monodromy must be preconditioned or neumann");
  if (c.out_dir.empty()) fail("output dir must be nonempty");
}

std::string serialize_config(const SolverConfig& c) {
  std::ostringstream os;
  os << "[grid]\n"
     << "dim = " << c.dim << "\n"
     << "n = " << c.n << "\n"
     << "L = " << num(c.L) << "\n\n"
     << "[time]\n"
     << "T = " << num(c.T) << "\n"
     << "M = " << c.M << "\n"
     << "horizon_periods = " << c.horizon_periods << "\n\n"
     << "[cutoff]\n"
     << "r1 = " << num(c.r1) << "\n"
     << "r_inf = " << num(c.r_inf) << "\n";
  if (c.r0) os << "r0 = " << num(*c.r0) << "\n";
  os << "branch_r1 = " << num(c.branch_r1) << "\n"
     << "branch_r_inf = " << num(c.branch_r_inf) << "\n"
     << "branch_r0 = " << num(c.branch_r0) << "\n"
     << "s = " << c.s << "\n\n"
     << "[pressure]\n"
     << "law = " << c.law << "\n"
     << "gamma = " << num(c.gamma) << "\n\n";
  for (std::size_t k = 0; k < c.forcing.size(); ++k) {
    const auto& t = c.forcing[k];
    os << "[forcing." << k + 1 << "]\n"
       << "amplitude = " << num(t.amplitude) << "\n"
       << "direction = " << num(t.direction[0]) << ' ' << num(t.direction[1]) << ' ' << num(t.direction[2]) << "\n"
       << "envelope = " << (t.envelope == Envelope::gaussian ? "gaussian" : "rational") << "\n"
       << "sigma = " << num(t.sigma) << "\n"
       << "p = " << num(t.p) << "\n"
       << "time = " << (t.time == TimeProfile::cosine ? "cosine" : "constant") << "\n"
       << "q = " << t.q << "\n"
       << "phase = " << num(t.phase) << "\n\n";
  }
  os << "[tolerances]\n"
     << "tol_outer = " << num(c.tol_outer) << "\n"
     << "tol_neumann = " << num(c.tol_neumann) << "\n"
     << "eps_deg = " << num(c.eps_deg) << "\n"
     << "delta = " << num(c.delta) << "\n"
     << "delta0 = " << num(c.delta0) << "\n"
     << "max_outer = " << c.max_outer << "\n"
     << "max_monodromy_iters = " << c.max_monodromy_iters << "\n"
     << "monodromy = " << c.monodromy << "\n\n"
     << "[output]\n"
     << "dir = " << c.out_dir << "\n"
     << "seed = " << c.seed << "\n";
  return os.str();
}

}  // namespace edp
