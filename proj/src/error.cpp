#include "genreforge/error.hpp"

namespace genreforge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableFile: return "UnreadableFile";
    case ErrorCode::UnsupportedEncoding: return "UnsupportedEncoding";
    case ErrorCode::EmptyAudio: return "EmptyAudio";
    case ErrorCode::DegenerateConfig: return "DegenerateConfig";
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::ClipTooShort: return "ClipTooShort";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NotAPartition: return "NotAPartition";
    case ErrorCode::DegenerateDataset: return "DegenerateDataset";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::InputOutOfRange: return "InputOutOfRange";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::IndivisibleSplit: return "IndivisibleSplit";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnreadableFile:
    case ErrorCode::UnsupportedEncoding:
    case ErrorCode::EmptyAudio:
    case ErrorCode::SignalTooShort:
    case ErrorCode::ClipTooShort:
    case ErrorCode::Io:
      return ErrorCategory::Io;
    case ErrorCode::DegenerateConfig:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::InvalidConfig:
    case ErrorCode::IndivisibleSplit:
    case ErrorCode::TooFewSamples:
    case ErrorCode::DegenerateDataset:
    case ErrorCode::SingleClass:
    case ErrorCode::InputOutOfRange:
    case ErrorCode::DimensionMismatch:
      return ErrorCategory::Config;
    default:
      return ErrorCategory::Internal;
  }
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace genreforge
