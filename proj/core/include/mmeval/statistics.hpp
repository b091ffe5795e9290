#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mmeval {

// Predictions paired with human references, equal length, finite values.
class PairedSeries {
 public:
  PairedSeries(std::vector<double> predictions, std::vector<double> references);

  std::size_t size() const noexcept { return predictions_.size(); }
  std::span<const double> predictions() const noexcept { return predictions_; }
  std::span<const double> references() const noexcept { return references_; }

 private:
  std::vector<double> predictions_;
  std::vector<double> references_;
};

// Tau-b with tie correction, O(m log m). Throws DegenerateSeries when either
// side is entirely tied.
double kendall_tau_b(const PairedSeries& s);

// Average ranks (1-based); tied values share the mean of their positions.
std::vector<double> midranks(std::span<const double> values);

// Pearson correlation of midranks. Throws DegenerateSeries.
double spearman_rho(const PairedSeries& s);

double pearson_r(std::span<const double> x, std::span<const double> y);

struct FitStatistics {
  double pearson_r = 0.0;
  double r_squared = 0.0;  // 1 - SS_res / SS_tot against the references
  double rmse = 0.0;
};

FitStatistics fit_statistics(const PairedSeries& s);

enum class RankStatistic { Tau, Rho };

struct ConfidenceInterval {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t redraws = 0;  // degenerate resamples that were replaced
};

// Percentile (2.5%, 97.5%) interval over `resamples` seeded bootstrap draws
// of whole (prediction, reference) pairs. Requires at least 10 pairs.
ConfidenceInterval bootstrap_ci(const PairedSeries& s, RankStatistic statistic, std::size_t resamples,
                                std::uint64_t seed);

// Linear-interpolation quantile of sorted data, q in [0,1].
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace mmeval
