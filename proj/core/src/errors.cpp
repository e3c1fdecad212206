#include "wavelab/errors.hpp"

namespace wavelab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument:
      return "invalid-argument";
    case ErrorCode::unsupported_space:
      return "unsupported-space";
    case ErrorCode::compatibility_violation:
      return "compatibility-violation";
    case ErrorCode::solver_failure:
      return "solver-failure";
    case ErrorCode::invalid_state:
      return "invalid-state";
    case ErrorCode::invalid_pair:
      return "invalid-pair";
    case ErrorCode::layout_mismatch:
      return "layout-mismatch";
    case ErrorCode::validation:
      return "validation-error";
    case ErrorCode::io:
      return "io-error";
  }
  return "unknown";
}

}  // namespace wavelab
