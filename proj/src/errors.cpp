#include "pnec/errors.hpp"

namespace pnec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::invalid_covariance: return "invalid-covariance";
    case ErrorCode::degenerate_alignment: return "degenerate-alignment";
    case ErrorCode::out_of_bounds: return "out-of-bounds";
    case ErrorCode::degenerate_patch: return "degenerate-patch";
    case ErrorCode::invalid_weight: return "invalid-weight";
    case ErrorCode::undefined_limit: return "undefined-limit";
    case ErrorCode::singularity: return "singularity";
    case ErrorCode::degenerate_configuration: return "degenerate-configuration";
    case ErrorCode::degenerate_input: return "degenerate-input";
    case ErrorCode::numeric_failure: return "numeric-failure";
    case ErrorCode::config_error: return "config-error";
    case ErrorCode::io_error: return "io-error";
  }
  return "unknown-error";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace pnec
