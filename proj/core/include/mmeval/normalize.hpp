#pragma once

#include <atomic>
#include <cstddef>

namespace mmeval {

struct NormalizationSpec {
  double lower = 0.0;
  double upper = 1.0;

  bool valid() const { return upper > lower; }
};

// Bounds applied to each metric before aggregation.
namespace bounds {
inline constexpr NormalizationSpec kFactPercent{0.0, 100.0};
inline constexpr NormalizationSpec kFact{0.0, 1.0};
inline constexpr NormalizationSpec kTextComponent{0.0, 1.0};
inline constexpr NormalizationSpec kAlignment{1.0, 5.0};
inline constexpr NormalizationSpec kDiversity{0.0, 15.0};
}  // namespace bounds

// Counts values that had to be clamped. Shared across worker threads.
class OutOfRangeCounter {
 public:
  void increment() noexcept { count_.fetch_add(1, std::memory_order_relaxed); }
  std::size_t count() const noexcept { return count_.load(std::memory_order_relaxed); }
  void reset() noexcept { count_.store(0, std::memory_order_relaxed); }

 private:
  std::atomic<std::size_t> count_{0};
};

// Clamps into [lower, upper]; bumps the counter when clamping changed the value.
double clamp_to(double value, const NormalizationSpec& spec, OutOfRangeCounter* counter = nullptr);

// (value - lower) / (upper - lower), clamped to [0,1]. Throws InvalidArgument
// for an invalid spec or a non-finite value.
double normalize_score(double value, const NormalizationSpec& spec,
                       OutOfRangeCounter* counter = nullptr);

// Converts an externally percent-scaled factual precision into [0,1].
double fact_from_percent(double percent, OutOfRangeCounter* counter = nullptr);

}  // namespace mmeval
