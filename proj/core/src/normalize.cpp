#include "mmeval/normalize.hpp"

#include <algorithm>
#include <cmath>

#include "mmeval/error.hpp"

namespace mmeval {

namespace {
void check(const NormalizationSpec& spec, double value) {
  if (!spec.valid()) throw Error(ErrorCode::InvalidArgument, "normalization spec needs upper > lower");
  if (!std::isfinite(value)) throw Error(ErrorCode::InvalidArgument, "cannot normalize a non-finite value");
}
}  // namespace

double clamp_to(double value, const NormalizationSpec& spec, OutOfRangeCounter* counter) {
  check(spec, value);
  const double clamped = std::clamp(value, spec.lower, spec.upper);
  if (clamped != value && counter != nullptr) counter->increment();
  return clamped;
}

double normalize_score(double value, const NormalizationSpec& spec, OutOfRangeCounter* counter) {
  const double clamped = clamp_to(value, spec, counter);
  return std::clamp((clamped - spec.lower) / (spec.upper - spec.lower), 0.0, 1.0);
}

double fact_from_percent(double percent, OutOfRangeCounter* counter) {
  return normalize_score(percent, bounds::kFactPercent, counter);
}

}  // namespace mmeval
