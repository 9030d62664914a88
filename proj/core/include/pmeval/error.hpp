#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pmeval {

enum class ErrorCode {
  // core
  EmptyEdges,
  NonMonotonicEdges,
  BelowPartition,
  DegenerateMass,
  NegativeWeight,
  InvalidDistribution,
  // ingest
  HttpError,
  DecodeError,
  RateLimited,
  CacheMiss,
  IoError,
  SchemaError,
  // contracts
  NoNumber,
  AmbiguousNumber,
  DuplicateThreshold,
  ContractBinMismatch,
  // surveillance
  DuplicatePublication,
  Unresolved,
  // baselines
  InvalidForecast,
  TooShort,
  NonFinite,
  FitFailure,
  // evaluation
  IndexOutOfRange,
  EmptySnapshots,
  EmptyHub,
  EmptyEvents,
  InvalidGrid,
  // cli
  ConfigError,
  MissingArtifacts,
};

std::string_view to_string(ErrorCode code);

/// Process exit status for the command line front end.
enum class ExitStatus : int {
  Ok = 0,
  Config = 1,
  Data = 2,
  Network = 3,
};

ExitStatus exit_status_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// HTTP failures keep the status code so callers can tell 404 from 5xx.
class HttpError : public Error {
 public:
  HttpError(int status, std::string body_excerpt);

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

}  // namespace pmeval
