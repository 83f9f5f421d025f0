#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flatclust {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  non_finite,
  asymmetric,
  negative_entry,
  triangle_violation,
  out_of_range,
  infeasible,
  too_large,
  empty_input,
  not_bijective,
  zero_mass,
  not_laminar,
  posterior_collapse,
  io,
  parse,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::non_finite: return "non_finite";
    case ErrorCode::asymmetric: return "asymmetric";
    case ErrorCode::negative_entry: return "negative_entry";
    case ErrorCode::triangle_violation: return "triangle_violation";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::infeasible: return "infeasible";
    case ErrorCode::too_large: return "too_large";
    case ErrorCode::empty_input: return "empty_input";
    case ErrorCode::not_bijective: return "not_bijective";
    case ErrorCode::zero_mass: return "zero_mass";
    case ErrorCode::not_laminar: return "not_laminar";
    case ErrorCode::posterior_collapse: return "posterior_collapse";
    case ErrorCode::io: return "io";
    case ErrorCode::parse: return "parse";
  }
  return "unknown";
}

// Every domain failure in the library is reported with this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace detail
}  // namespace flatclust
