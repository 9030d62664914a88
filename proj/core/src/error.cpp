#include "pmeval/error.hpp"

#include <string>

namespace pmeval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyEdges: return "EmptyEdges";
    case ErrorCode::NonMonotonicEdges: return "NonMonotonicEdges";
    case ErrorCode::BelowPartition: return "BelowPartition";
    case ErrorCode::DegenerateMass: return "DegenerateMass";
    case ErrorCode::NegativeWeight: return "NegativeWeight";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::RateLimited: return "RateLimited";
    case ErrorCode::CacheMiss: return "CacheMiss";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NoNumber: return "NoNumber";
    case ErrorCode::AmbiguousNumber: return "AmbiguousNumber";
    case ErrorCode::DuplicateThreshold: return "DuplicateThreshold";
    case ErrorCode::ContractBinMismatch: return "ContractBinMismatch";
    case ErrorCode::DuplicatePublication: return "DuplicatePublication";
    case ErrorCode::Unresolved: return "Unresolved";
    case ErrorCode::InvalidForecast: return "InvalidForecast";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::FitFailure: return "FitFailure";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EmptySnapshots: return "EmptySnapshots";
    case ErrorCode::EmptyHub: return "EmptyHub";
    case ErrorCode::EmptyEvents: return "EmptyEvents";
    case ErrorCode::InvalidGrid: return "InvalidGrid";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MissingArtifacts: return "MissingArtifacts";
  }
  return "Unknown";
}

ExitStatus exit_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::CacheMiss:
    case ErrorCode::InvalidGrid:
      return ExitStatus::Config;
    case ErrorCode::HttpError:
    case ErrorCode::RateLimited:
      return ExitStatus::Network;
    default:
      return ExitStatus::Data;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

HttpError::HttpError(int status, std::string body_excerpt)
    : Error(ErrorCode::HttpError,
            "HTTP " + std::to_string(status) + (body_excerpt.empty() ? "" : " " + body_excerpt)),
      status_(status),
      body_(std::move(body_excerpt)) {}

}  // namespace pmeval
