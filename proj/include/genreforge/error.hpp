#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genreforge {

enum class ErrorCode {
  // audio ingest
  UnreadableFile,
  UnsupportedEncoding,
  EmptyAudio,
  DegenerateConfig,
  SignalTooShort,
  // features
  LengthMismatch,
  TooShort,
  ClipTooShort,
  // selection
  EmptySet,
  NotAPartition,
  DegenerateDataset,
  SchemaMismatch,
  // autoencoder
  DimensionMismatch,
  StaleCache,
  InputOutOfRange,
  // svm
  SingleClass,
  TooFewSamples,
  // orchestration
  IndivisibleSplit,
  InvalidConfig,
  Io,
  Internal,
};

/// Coarse grouping used to map failures onto process exit codes.
enum class ErrorCategory { Io = 1, Config = 2, Internal = 3 };

std::string_view to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace genreforge
