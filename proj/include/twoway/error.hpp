#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace twoway {

enum class ErrorCode {
  NonFinite,
  DimensionMismatch,
  TooSmall,
  RankTooLarge,
  SingularDesign,
  Empty,
  SingularOmega,
  LagTooLarge,
  Degenerate,
  BadValue,
  UnknownFlag,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Non-fatal diagnostics (odd panel truncation, degenerate smoother rows).
// Written to stderr unless silenced; Monte Carlo drivers silence them.
void warn(std::string_view message);
void set_warnings_enabled(bool enabled);
bool warnings_enabled();

}  // namespace twoway
