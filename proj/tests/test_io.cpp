#include "doctest.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "oracles.hpp"
#include "snapshot.hpp"

using namespace edp;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  std::string tmpl = (fs::temp_directory_path() / "edp_test_XXXXXX").string();
  if (!mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  return tmpl;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::validation;
}

const char* kSmallConfig = R"(
[grid]
dim = 3
n = 16
L = 16pi

[time]
M = 16
horizon_periods = 1

[forcing.1]
amplitude = 1e-3
)";

}  // namespace

TEST_CASE("default config is valid and round-trips") {
  const SolverConfig cfg;
  CHECK_NOTHROW(validate_config(cfg));
  const std::string text = serialize_config(cfg);
  CHECK(serialize_config(parse_config(text)) == text);
  CHECK(text.find("r1 = 0.1\n") != std::string::npos);
}

TEST_CASE("config parser accepts pi factors and forcing sections") {
  const auto cfg = parse_config(
      "[grid]\nL = 12pi\nn = 32\n[forcing.2]\namplitude = 2e-3\ndirection = 0 1 0\n"
      "[forcing.1]\ntime = constant\n");
  CHECK(cfg.L == doctest::Approx(12.0 * std::numbers::pi));
  REQUIRE(cfg.forcing.size() == 2);
  CHECK(cfg.forcing[0].time == TimeProfile::constant);
  CHECK(cfg.forcing[1].amplitude == 2e-3);
  CHECK(cfg.forcing[1].direction[1] == 1.0);
}

TEST_CASE("config errors name the problem") {
  try {
    parse_config("[grid]\nn = 32\n\nbogus = 1\n");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::parse);
    CHECK(std::string(e.what()).rfind("line 4:", 0) == 0);
  }
  try {
    parse_config("[cutoff]\nr1 = 0.45\n");
    FAIL("expected validation error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::validation);
    CHECK(std::string(e.what()) == "r1 < r_inf < 0.5 required");
  }
  CHECK(kind_of([] { parse_config("[grid]\nn = 48\n"); }) == ErrorKind::validation);
  CHECK(kind_of([] { parse_config("[grid]\nn = 16\nn = 32\n"); }) == ErrorKind::parse);
  CHECK(kind_of([] { parse_config("[time]\nM = 8\n"); }) == ErrorKind::validation);
}

TEST_CASE("snapshot round trip is bit-exact") {
  const Grid grid(3, 8, 5.0);
  std::mt19937_64 rng(1);
  const State u = oracle::smooth_random_state(grid, 3, 1.0, rng);
  const auto bytes = encode_snapshot(grid, u);
  CHECK(bytes.size() == kSnapshotHeaderBytes + 8 * 4 * grid.num_points());
  CHECK(std::memcmp(bytes.data(), "EDPF", 4) == 0);
  SnapshotHeader h;
  const State back = decode_snapshot(bytes, &h);
  CHECK(h.dim == 3);
  CHECK(h.n == 8);
  CHECK(h.L == 5.0);
  for (int c = 0; c < 4; ++c)
    CHECK(std::memcmp(back.comps[c].data(), u.comps[c].data(), 8 * grid.num_points()) == 0);
}

TEST_CASE("corrupt and mismatched snapshots are rejected") {
  const Grid grid(2, 8, 5.0);
  const State u = grid.zero_state();
  auto bytes = encode_snapshot(grid, u);
  auto cut = bytes;
  cut.pop_back();
  CHECK(kind_of([&] { decode_snapshot(cut); }) == ErrorKind::corrupt_file);
  auto bad = bytes;
  bad[0] = 'X';
  CHECK(kind_of([&] { decode_snapshot(bad); }) == ErrorKind::corrupt_file);
  const fs::path dir = scratch_dir();
  write_snapshot(grid, u, (dir / "u.edpf").string());
  const Grid other(2, 16, 5.0);
  CHECK(kind_of([&] { read_snapshot((dir / "u.edpf").string(), other); }) == ErrorKind::shape_mismatch);
  fs::remove_all(dir);
}

TEST_CASE("exit codes follow the error kind") {
  CHECK(exit_code_for(ErrorKind::parse) == 3);
  CHECK(exit_code_for(ErrorKind::non_contraction) == 2);
  CHECK(exit_code_for(ErrorKind::blow_up) == 4);
  CHECK(exit_code_for(ErrorKind::corrupt_file) == 1);
}

TEST_CASE("spectrum command writes a versioned table") {
  const fs::path dir = scratch_dir();
  std::ostringstream log;
  const auto cfg = parse_config(kSmallConfig);
  CommandOptions opt;
  opt.out_dir = (dir / "out").string();
  opt.quiet = true;
  CHECK(run_command("spectrum", cfg, opt, log) == 0);
  const std::string csv = slurp(dir / "out" / "spectrum.csv");
  CHECK(csv.rfind("# schema 1\n", 0) == 0);
  const std::string summary = slurp(dir / "out" / "summary.json");
  CHECK(summary.find("\"schema_version\": 1") != std::string::npos);
  CHECK(!fs::exists(dir / "out" / ".lock"));
  fs::remove_all(dir);
}

TEST_CASE("repeated runs give byte-identical summaries") {
  const fs::path dir = scratch_dir();
  std::ostringstream log;
  const auto cfg = parse_config(kSmallConfig);
  CommandOptions a, b;
  a.out_dir = (dir / "a").string();
  b.out_dir = (dir / "b").string();
  a.quiet = b.quiet = true;
  REQUIRE(run_command("solve-periodic", cfg, a, log) == 0);
  REQUIRE(run_command("solve-periodic", cfg, b, log) == 0);
  CHECK(slurp(dir / "a" / "summary.json") == slurp(dir / "b" / "summary.json"));
  CHECK(slurp(dir / "a" / "orbit_t0.edpf") == slurp(dir / "b" / "orbit_t0.edpf"));
  fs::remove_all(dir);
}

TEST_CASE("a held lock and a bad config fail with their exit codes") {
  const fs::path dir = scratch_dir();
  std::ostringstream log;
  fs::create_directories(dir / "out");
  std::ofstream(dir / "out" / ".lock") << "held";
  CommandOptions opt;
  opt.out_dir = (dir / "out").string();
  opt.quiet = true;
  CHECK(kind_of([&] { run_command("spectrum", parse_config(kSmallConfig), opt, log); }) == ErrorKind::io);
  CHECK(run_command_from_file("spectrum", "", opt, log) == 1);
  CHECK(slurp(dir / "out" / ".lock") == "held");
  std::ofstream(dir / "bad.cfg") << "[cutoff]\nr1 = 0.45\n";
  opt.out_dir = (dir / "out2").string();
  CHECK(run_command_from_file("spectrum", (dir / "bad.cfg").string(), opt, log) == 3);
  CHECK(run_command("no-such-command", parse_config(kSmallConfig), opt, log) == 3);
  fs::remove_all(dir);
}
