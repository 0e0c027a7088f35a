#include "detective/error.hpp"

namespace detective {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "IoError";
    case ErrorCode::Parse: return "ParseError";
    case ErrorCode::MissingStartMarker: return "MissingStartMarker";
    case ErrorCode::NoSentences: return "NoSentences";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::BalanceFailed: return "BalanceFailed";
    case ErrorCode::EmptyAfterFiltering: return "EmptyAfterFiltering";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::RefusalOrEmpty: return "RefusalOrEmpty";
    case ErrorCode::AuthError: return "AuthError";
    case ErrorCode::InsufficientOutput: return "InsufficientOutput";
    case ErrorCode::EmptyVocabulary: return "EmptyVocabulary";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::InsufficientItems: return "InsufficientItems";
    case ErrorCode::IncompleteAnswers: return "IncompleteAnswers";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::TooFewScores: return "TooFewScores";
  }
  return "Unknown";
}

}  // namespace detective
