#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hearth {

enum class Errc {
  EmptySalt,
  MissingTemplate,
  InfeasibleQuota,
  NotEnoughEntries,
  EmptyText,
  ZeroDenominator,
  UnknownAxis,
  NegativeOrNonFinite,
  EndpointUnreachable,
  EmptyAxisSet,
  OutOfRange,
  MalformedTrace,
  NoConsent,
  EmptyCohort,
  EmptyLog,
  DegenerateSample,
  DegenerateLabels,
  CorruptProfile,
  NonMonotonicTimestamp,
  LockHeld,
  ParseError,
  ConfigError,
  InputError,
  Precondition,
};

std::string_view errc_name(Errc code);

// Every recoverable failure in the library is an Error carrying a stable code;
// the CLI maps codes to exit statuses and machine-readable stderr JSON.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace hearth
