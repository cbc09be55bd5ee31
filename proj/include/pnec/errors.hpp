#pragma once

#include <stdexcept>
#include <string>

namespace pnec {

enum class ErrorCode {
  invalid_argument,
  invalid_covariance,
  degenerate_alignment,
  out_of_bounds,
  degenerate_patch,
  invalid_weight,
  undefined_limit,
  singularity,
  degenerate_configuration,
  degenerate_input,
  numeric_failure,
  config_error,
  io_error,
};

const char* to_string(ErrorCode code);

/// Library-wide exception carrying a machine-checkable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace pnec
