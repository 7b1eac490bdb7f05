// SPDX-License-Identifier: Apache-2.0
#include "fds/common.hpp"

namespace fds {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::ZeroQuaternion: return "ZeroQuaternion";
    case ErrorCode::BehindCamera: return "BehindCamera";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::StateMismatch: return "StateMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonZeroT3: return "NonZeroT3";
    case ErrorCode::NoValidPixels: return "NoValidPixels";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::MissingGroundTruth: return "MissingGroundTruth";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace fds
