#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmeval {

enum class ErrorCode {
  SchemaError,
  MissingReference,
  EndpointUnavailable,
  MalformedResponse,
  EmbeddingDimensionMismatch,
  NoFactsExtracted,
  NoFacts,
  NoImages,
  NotSymmetric,
  NumericalFailure,
  SingularSystem,
  EmptyStratum,
  AllZero,
  InsufficientData,
  AbsentPillar,
  DegenerateSeries,
  InvalidArgument,
  IoError,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception. `detail` carries a
// machine-readable payload where one exists (failing locator, file path).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string detail = {});

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mmeval
