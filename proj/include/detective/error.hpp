#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace detective {

enum class ErrorCode {
  InvalidArgument,
  Io,
  Parse,
  // corpus
  MissingStartMarker,
  NoSentences,
  EmptyInput,
  BalanceFailed,
  EmptyAfterFiltering,
  // textgen
  TransportError,
  RefusalOrEmpty,
  AuthError,
  InsufficientOutput,
  // features
  EmptyVocabulary,
  // models
  SingleClassTraining,
  NonFiniteLoss,
  VersionMismatch,
  CorruptFile,
  // eval
  TooSmall,
  // judges
  InsufficientItems,
  IncompleteAnswers,
  ZeroVariance,
  TooFewScores,
};

std::string_view error_code_name(ErrorCode code) noexcept;

/// Domain error raised by every module. The code names the failure mode,
/// the message carries the detail shown to CLI and HTTP callers.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace detective
