#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mvkl {

enum class ErrorKind {
  invalid_input,
  dimension_mismatch,
  numerical_failure,
  unsupported_prediction,
  insufficient_data,
  parse_error,
  config_error,
  io_error,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_input: return "invalid-input";
    case ErrorKind::dimension_mismatch: return "dimension-mismatch";
    case ErrorKind::numerical_failure: return "numerical-failure";
    case ErrorKind::unsupported_prediction: return "unsupported-prediction";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::parse_error: return "parse-error";
    case ErrorKind::config_error: return "config-error";
    case ErrorKind::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace mvkl
