// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace fds {

enum class ErrorCode {
  NonPositiveDepth,
  ZeroQuaternion,
  BehindCamera,
  EmptyCloud,
  StateMismatch,
  ShapeMismatch,
  NonZeroT3,
  NoValidPixels,
  BadMagic,
  TruncatedFile,
  MissingGroundTruth,
  FileNotFound,
  InvalidArgument,
  Io,
  Validation,
  NumericalFailure,
};

const char* to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries a stable code so the CLI can
// map it onto exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

}  // namespace fds
