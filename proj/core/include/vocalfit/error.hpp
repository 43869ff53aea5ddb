#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vocalfit {

enum class Errc {
  InvalidArgument,
  NearClosure,
  NumericalOverflow,
  TooFewPeaks,
  SignalTooShort,
  EmptyCorpus,
  DimsMismatch,
  ZeroVector,
  EmptyRun,
  MissingTarget,
  IncompleteGrid,
  NoSamples,
  AllOutsideRange,
  MissingResult,
  DegenerateScreen,
  SchemaError,
  ConfigError,
  IoError,
};

std::string_view to_string(Errc code) noexcept;

// Single exception type for the library. The code lets callers (and the CLI's
// exit-status mapping) distinguish data problems from usage problems without
// parsing messages.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace vocalfit
