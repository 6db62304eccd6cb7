#include "edp/edp.h"

#include <algorithm>
#include <cstring>
#include <iostream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "modes.hpp"
#include "snapshot.hpp"

namespace {

thread_local std::string g_last_error;

template <class F>
int guarded(F&& f) {
  try {
    g_last_error.clear();
    return f();
  } catch (const edp::Error& e) {
    g_last_error = e.what();
    return edp::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EDP_FAILURE;
  } catch (...) {
    g_last_error = "unknown exception";
    return EDP_FAILURE;
  }
}

}  // namespace

extern "C" {

const char* edp_version(void) { return EDP_VERSION_STRING; }

const char* edp_last_error(void) { return g_last_error.c_str(); }

int edp_run_command(const char* command, const char* config_path, const char* out_dir, int quiet) {
  return guarded([&] {
    if (!command) throw edp::Error(edp::ErrorKind::validation, "command is NULL");
    edp::CommandOptions opt;
    if (out_dir) opt.out_dir = out_dir;
    opt.quiet = quiet != 0;
    std::ostringstream log;
    const int code = edp::run_command_from_file(command, config_path ? config_path : "", opt, log);
    if (!quiet) std::cerr << log.str();
    if (code != 0) g_last_error = "command failed with status " + std::to_string(code);
    return code;
  });
}

int edp_config_check(const char* text, char* canonical, size_t capacity, size_t* needed) {
  return guarded([&] {
    const auto cfg = edp::parse_config(text ? text : "");
    const std::string s = edp::serialize_config(cfg);
    if (needed) *needed = s.size() + 1;
    if (canonical && capacity > 0) {
      const size_t n = std::min(capacity - 1, s.size());
      std::memcpy(canonical, s.data(), n);
      canonical[n] = '\0';
    }
    return EDP_OK;
  });
}

int edp_branch_eigenvalues(double k, double out[4]) {
  return guarded([&] {
    if (!out) throw edp::Error(edp::ErrorKind::validation, "output pointer is NULL");
    if (!(k >= 0.0)) throw edp::Error(edp::ErrorKind::validation, "k >= 0 required");
    const auto ev = edp::branch_eigenvalues(k);
    out[0] = ev.plus.real();
    out[1] = ev.plus.imag();
    out[2] = ev.minus.real();
    out[3] = ev.minus.imag();
    return EDP_OK;
  });
}

int edp_snapshot_info(const char* path, int* dim, int* n, double* half_length) {
  return guarded([&] {
    if (!path) throw edp::Error(edp::ErrorKind::validation, "path is NULL");
    edp::SnapshotHeader h;
    edp::read_snapshot(path, &h);
    if (dim) *dim = static_cast<int>(h.dim);
    if (n) *n = static_cast<int>(h.n);
    if (half_length) *half_length = h.L;
    return EDP_OK;
  });
}

}  // extern "C"
