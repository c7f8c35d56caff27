#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qmix {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct EncodingError : Error { using Error::Error; };
struct WeightError : Error { using Error::Error; };
struct StateError : Error { using Error::Error; };
struct ParamError : Error { using Error::Error; };
struct EmptyDatasetError : Error { using Error::Error; };
struct EvalError : Error { using Error::Error; };
struct BatchingError : Error { using Error::Error; };
struct AuditError : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct OracleTooLargeError : Error { using Error::Error; };
struct CorrelationError : Error { using Error::Error; };
struct GenerationError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Optimizer failure; carries the parameter vector that produced a
// non-finite objective value.
struct OptimizationError : Error {
  OptimizationError(const std::string& msg, std::vector<double> params)
      : Error(msg), offending_params(std::move(params)) {}
  std::vector<double> offending_params;
};

// Wire / transport errors, each distinct and reportable.
struct ProtocolError : Error { using Error::Error; };
struct BadMagic : ProtocolError { using ProtocolError::ProtocolError; };
struct UnsupportedVersion : ProtocolError { using ProtocolError::ProtocolError; };
struct ChecksumMismatch : ProtocolError { using ProtocolError::ProtocolError; };
struct StateInvariantViolation : ProtocolError { using ProtocolError::ProtocolError; };
struct FramingError : ProtocolError { using ProtocolError::ProtocolError; };
struct TransportError : ProtocolError { using ProtocolError::ProtocolError; };

}  // namespace qmix
