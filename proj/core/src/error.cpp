#include "vocalfit/error.hpp"

namespace vocalfit {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NearClosure: return "NearClosure";
    case Errc::NumericalOverflow: return "NumericalOverflow";
    case Errc::TooFewPeaks: return "TooFewPeaks";
    case Errc::SignalTooShort: return "SignalTooShort";
    case Errc::EmptyCorpus: return "EmptyCorpus";
    case Errc::DimsMismatch: return "DimsMismatch";
    case Errc::ZeroVector: return "ZeroVector";
    case Errc::EmptyRun: return "EmptyRun";
    case Errc::MissingTarget: return "MissingTarget";
    case Errc::IncompleteGrid: return "IncompleteGrid";
    case Errc::NoSamples: return "NoSamples";
    case Errc::AllOutsideRange: return "AllOutsideRange";
    case Errc::MissingResult: return "MissingResult";
    case Errc::DegenerateScreen: return "DegenerateScreen";
    case Errc::SchemaError: return "SchemaError";
    case Errc::ConfigError: return "ConfigError";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace vocalfit
