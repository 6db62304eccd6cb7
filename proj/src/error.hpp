#pragma once

#include <stdexcept>
#include <string>

namespace edp {

enum class ErrorKind {
  validation,
  parse,
  invalid_field,
  vacuum,
  overflow,
  zero_wavevector,
  degenerate_mode,
  cfl,
  compatibility,
  non_contraction,
  divergence,
  non_convergence,
  blow_up,
  io,
  corrupt_file,
  shape_mismatch,
};

const char* to_string(ErrorKind kind);

/// Every failure raised by the core carries a kind so the C layer and the CLI
/// can map it onto an error code / exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace edp
