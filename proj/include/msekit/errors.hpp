#pragma once

#include <stdexcept>
#include <string>

namespace msekit {

enum class ErrorCode {
  NotSimplyConnected,
  NonConvexArc,
  InconsistentIsometry,
  DegeneratePolygon,
  UnbalancedFlux,
  SelfIntersecting,
  TooManyVertices,
  NonConvergence,
  UnsolvableConfiguration,
  OutOfDomain,
  EstimateViolated,
  ClosednessViolation,
  PeriodViolation,
  NonPlanarBoundary,
  TooShortSequence,
  NoDivergence,
  SolvabilityFailure,
  DivergenceDetected,
  FluxMismatch,
  SchemaError,
  IoError,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotSimplyConnected: return "NotSimplyConnected";
    case ErrorCode::NonConvexArc: return "NonConvexArc";
    case ErrorCode::InconsistentIsometry: return "InconsistentIsometry";
    case ErrorCode::DegeneratePolygon: return "DegeneratePolygon";
    case ErrorCode::UnbalancedFlux: return "UnbalancedFlux";
    case ErrorCode::SelfIntersecting: return "SelfIntersecting";
    case ErrorCode::TooManyVertices: return "TooManyVertices";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::UnsolvableConfiguration: return "UnsolvableConfiguration";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::EstimateViolated: return "EstimateViolated";
    case ErrorCode::ClosednessViolation: return "ClosednessViolation";
    case ErrorCode::PeriodViolation: return "PeriodViolation";
    case ErrorCode::NonPlanarBoundary: return "NonPlanarBoundary";
    case ErrorCode::TooShortSequence: return "TooShortSequence";
    case ErrorCode::NoDivergence: return "NoDivergence";
    case ErrorCode::SolvabilityFailure: return "SolvabilityFailure";
    case ErrorCode::DivergenceDetected: return "DivergenceDetected";
    case ErrorCode::FluxMismatch: return "FluxMismatch";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace msekit
