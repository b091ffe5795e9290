#include "mmeval/error.hpp"

namespace mmeval {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::MissingReference: return "MissingReference";
    case ErrorCode::EndpointUnavailable: return "EndpointUnavailable";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::EmbeddingDimensionMismatch: return "EmbeddingDimensionMismatch";
    case ErrorCode::NoFactsExtracted: return "NoFactsExtracted";
    case ErrorCode::NoFacts: return "NoFacts";
    case ErrorCode::NoImages: return "NoImages";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::EmptyStratum: return "EmptyStratum";
    case ErrorCode::AllZero: return "AllZero";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::AbsentPillar: return "AbsentPillar";
    case ErrorCode::DegenerateSeries: return "DegenerateSeries";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, std::string detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(std::move(detail)) {}

}  // namespace mmeval
