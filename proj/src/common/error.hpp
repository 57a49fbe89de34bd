#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facekey {

// Domain error kinds. The numeric values are mirrored by fk_status in the C API.
enum class ErrorCode : int {
  InvalidArgument = 1,
  InvalidImage,
  InsufficientSamples,
  DegenerateTrainingSet,
  RasterMismatch,
  EmbeddingMismatch,
  MalformedCode,
  ChecksumError,
  AuthenticationFailure,
  KeyError,
  DuplicateIdentity,
  NotAFace,
  StorageFailure,
  UnknownCode,
  ValidationError,
  PolicyViolation,
  InvalidInterval,
  NotRecognized,
  ClockSkew,
  UnknownSuspect,
  PoisonEntry,
  ConfigError,
  ModelMissing,
  UnknownStation,
  MalformedImage,
  Internal,
};

std::string_view error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message, std::string detail = {})
      : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

  ErrorCode code() const noexcept { return code_; }
  // Extra machine-readable payload, e.g. the existing code for DuplicateIdentity.
  const std::string& detail() const noexcept { return detail_; }

private:
  ErrorCode code_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              std::string detail = {}) {
  throw Error(code, message, std::move(detail));
}

}  // namespace facekey
