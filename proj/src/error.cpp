#include "error.hpp"

namespace edp {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::parse: return "parse";
    case ErrorKind::invalid_field: return "invalid-field";
    case ErrorKind::vacuum: return "vacuum";
    case ErrorKind::overflow: return "overflow";
    case ErrorKind::zero_wavevector: return "zero-wavevector";
    case ErrorKind::degenerate_mode: return "degenerate-mode";
    case ErrorKind::cfl: return "cfl";
    case ErrorKind::compatibility: return "compatibility";
    case ErrorKind::non_contraction: return "non-contraction";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::non_convergence: return "non-convergence";
    case ErrorKind::blow_up: return "blow-up";
    case ErrorKind::io: return "io";
    case ErrorKind::corrupt_file: return "corrupt-file";
    case ErrorKind::shape_mismatch: return "shape-mismatch";
  }
  return "unknown";
}

}  // namespace edp
