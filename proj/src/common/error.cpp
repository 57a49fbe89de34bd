#include "common/error.hpp"

namespace facekey {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::InsufficientSamples: return "InsufficientSamples";
    case ErrorCode::DegenerateTrainingSet: return "DegenerateTrainingSet";
    case ErrorCode::RasterMismatch: return "RasterMismatch";
    case ErrorCode::EmbeddingMismatch: return "EmbeddingMismatch";
    case ErrorCode::MalformedCode: return "MalformedCode";
    case ErrorCode::ChecksumError: return "ChecksumError";
    case ErrorCode::AuthenticationFailure: return "AuthenticationFailure";
    case ErrorCode::KeyError: return "KeyError";
    case ErrorCode::DuplicateIdentity: return "DuplicateIdentity";
    case ErrorCode::NotAFace: return "NotAFace";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::PolicyViolation: return "PolicyViolation";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::NotRecognized: return "NotRecognized";
    case ErrorCode::ClockSkew: return "ClockSkew";
    case ErrorCode::UnknownSuspect: return "UnknownSuspect";
    case ErrorCode::PoisonEntry: return "PoisonEntry";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::ModelMissing: return "ModelMissing";
    case ErrorCode::UnknownStation: return "UnknownStation";
    case ErrorCode::MalformedImage: return "MalformedImage";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

}  // namespace facekey
