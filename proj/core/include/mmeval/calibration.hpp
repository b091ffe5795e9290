#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmeval/linalg.hpp"
#include "mmeval/statistics.hpp"
#include "mmeval/text_quality.hpp"
#include "mmeval/types.hpp"

namespace mmeval {

// m samples x p features with the human target.
class DesignMatrix {
 public:
  DesignMatrix(Matrix features, std::vector<double> target, std::vector<std::string> feature_names);

  std::size_t samples() const noexcept { return x_.rows(); }
  std::size_t features() const noexcept { return x_.cols(); }
  const Matrix& x() const noexcept { return x_; }
  const std::vector<double>& y() const noexcept { return y_; }
  const std::vector<std::string>& feature_names() const noexcept { return names_; }

  DesignMatrix subset(std::span<const std::size_t> rows) const;

 private:
  Matrix x_;
  std::vector<double> y_;
  std::vector<std::string> names_;
};

struct RidgeModel {
  double intercept = 0.0;
  std::vector<double> coefficients;
  double alpha = 0.0;

  double predict(std::span<const double> features) const;
};

// Closed-form ridge with an unpenalized intercept: features and target are
// centered, (X'X + alpha I) beta = X'y is solved by Cholesky and the
// intercept recovers the means. Throws SingularSystem (alpha = 0 with
// rank-deficient X) or InsufficientData (m < 2).
RidgeModel ridge_fit(const DesignMatrix& data, double alpha);

// Fold id in [0, folds) per sample: a seeded shuffle cut into contiguous
// chunks whose sizes differ by at most one.
std::vector<std::size_t> kfold_assignment(std::size_t samples, std::size_t folds, std::uint64_t seed);

// Mean over folds of the held-out MSE. +inf when a fold's fit is singular.
double cross_validation_mse(const DesignMatrix& data, double alpha, std::span<const std::size_t> fold_of,
                            std::size_t folds);

// Grid element with the lowest mean held-out MSE; ties go to the larger alpha.
double cross_validate_alpha(const DesignMatrix& data, std::span<const double> grid, std::size_t folds,
                            std::uint64_t seed);

struct Split {
  std::vector<UnitKey> train;
  std::vector<UnitKey> test;
};

using StratumOf = std::function<std::string(const UnitKey&)>;

inline std::string stratum_by_system(const UnitKey& key) { return key.system_id; }

// Per stratum, round-half-up(test_fraction * size) units go to test, chosen by
// a seeded shuffle. If the total then misses test_fraction * N by more than
// one unit, strata with the largest rounding error are adjusted by one until
// it does not. Outputs are sorted by key. Throws EmptyStratum when a unit has
// an empty stratum label or a stratum would be left with no training units.
Split stratified_split(std::span<const UnitKey> units, double test_fraction, std::uint64_t seed,
                       const StratumOf& stratum = stratum_by_system);

// |beta_j| / sum_k |beta_k|. Throws AllZero.
std::vector<double> normalize_weights(std::span<const double> coefficients);

// Normalized component scores and the human overall rating for one unit.
struct CalibrationRow {
  UnitKey key;
  double s_fact = 0.0;
  double s_rel = 0.0;
  double s_coh = 0.0;
  double s_flu = 0.0;
  double s_relevance = 0.0;
  double s_diversity = 0.0;
  double overall = 0.0;
};

struct CalibrationConfig {
  std::vector<double> alpha_grid_stage1{0.01, 0.1, 1.0, 10.0};
  std::vector<double> alpha_grid_stage2{0.01, 0.1, 1.0, 10.0};
  std::size_t folds = 5;
  double test_fraction = 0.2;
  std::uint64_t seed = 42;
};

struct StageModel {
  RidgeModel ridge;
  std::vector<std::string> feature_names;
  std::vector<double> normalized_weights;
};

inline const std::vector<std::string> kStage1Features{"s_fact", "s_rel", "s_coh", "s_flu"};
inline const std::vector<std::string> kStage2Features{"s_text", "s_relevance", "s_diversity"};

struct CalibrationModel {
  StageModel stage1;  // signed model + normalized intra-text weights
  StageModel stage2;  // signed model used for the final score + pillar weights
  CalibrationConfig config;
  std::string data_fingerprint;

  TextWeights text_weights() const;
};

struct FitReport {
  double kendall_tau = 0.0;
  double spearman_rho = 0.0;
  double pearson_r = 0.0;
  double r_squared = 0.0;
  double rmse = 0.0;
  std::size_t n_test = 0;
};

FitReport make_fit_report(const PairedSeries& series);

struct CalibrationResult {
  CalibrationModel model;
  FitReport report;
  Split split;
  std::vector<double> test_predictions;
  std::vector<double> test_targets;
};

// S_text under the given weights.
double text_score(const CalibrationRow& row, const TextWeights& weights);

// Stage 1 regresses overall on (s_fact, s_rel, s_coh, s_flu) over the
// training split and normalizes the coefficients into text weights. Stage 2
// regresses overall on (S_text, s_relevance, s_diversity) over the same split.
// Alphas come from k-fold CV on the training split. The held-out report is
// computed on the test split. Throws InsufficientData, AllZero, or errors
// from the components.
CalibrationResult calibrate_two_stage(std::span<const CalibrationRow> rows, const CalibrationConfig& config);

// beta_0 + beta . (s_text, s_relevance, s_diversity) with signed stage-2
// coefficients. Throws AbsentPillar.
double mm_eval_score(std::optional<double> s_text, std::optional<double> s_relevance,
                     std::optional<double> s_diversity, const RidgeModel& stage2);

// Evaluates the model on the rows with the given keys (test split).
PairedSeries predict_series(std::span<const CalibrationRow> rows, std::span<const UnitKey> keys,
                            const CalibrationModel& model);

std::string serialize_model(const CalibrationModel& model, const FitReport* report = nullptr);
CalibrationModel parse_model(const std::string& text, const std::string& origin = "model");
CalibrationModel load_model(const std::filesystem::path& path);

}  // namespace mmeval
