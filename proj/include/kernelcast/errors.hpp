#ifndef KERNELCAST_ERRORS_HPP
#define KERNELCAST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kcast {

enum class Err {
  MalformedRow,
  DuplicateTimestamp,
  EmptyFile,
  GapTooLong,
  SpecNotFitted,
  WindowTooShort,
  LagUnavailable,
  PeriodicParamsMissing,
  NotFactorizable,
  ConstantMatrix,
  AllRestartsFailed,
  DimensionMismatch,
  LengthMismatch,
  EmptyPiSet,
  ScaleMismatch,
  InvalidInterval,
  Empty,
  AllTermsSkipped,
  ZeroVariance,
  InsufficientHistory,
  IoError,
  ConfigError,
};

const char* to_string(Err e);

class Error : public std::runtime_error {
 public:
  Error(Err code, const std::string& msg)
      : std::runtime_error(std::string(to_string(code)) + ": " + msg), code_(code) {}
  Err code() const { return code_; }

 private:
  Err code_;
};

[[noreturn]] inline void raise(Err code, const std::string& msg) { throw Error(code, msg); }

inline const char* to_string(Err e) {
  switch (e) {
    case Err::MalformedRow: return "MalformedRow";
    case Err::DuplicateTimestamp: return "DuplicateTimestamp";
    case Err::EmptyFile: return "EmptyFile";
    case Err::GapTooLong: return "GapTooLong";
    case Err::SpecNotFitted: return "SpecNotFitted";
    case Err::WindowTooShort: return "WindowTooShort";
    case Err::LagUnavailable: return "LagUnavailable";
    case Err::PeriodicParamsMissing: return "PeriodicParamsMissing";
    case Err::NotFactorizable: return "NotFactorizable";
    case Err::ConstantMatrix: return "ConstantMatrix";
    case Err::AllRestartsFailed: return "AllRestartsFailed";
    case Err::DimensionMismatch: return "DimensionMismatch";
    case Err::LengthMismatch: return "LengthMismatch";
    case Err::EmptyPiSet: return "EmptyPiSet";
    case Err::ScaleMismatch: return "ScaleMismatch";
    case Err::InvalidInterval: return "InvalidInterval";
    case Err::Empty: return "Empty";
    case Err::AllTermsSkipped: return "AllTermsSkipped";
    case Err::ZeroVariance: return "ZeroVariance";
    case Err::InsufficientHistory: return "InsufficientHistory";
    case Err::IoError: return "IoError";
    case Err::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace kcast

#endif
