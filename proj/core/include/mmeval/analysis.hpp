#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmeval/calibration.hpp"
#include "mmeval/metadata.hpp"
#include "mmeval/scores_io.hpp"
#include "mmeval/types.hpp"

namespace mmeval {

// ---- gatekeeper bins -------------------------------------------------------

enum class BinSource { HumanConsistencyRounded, FactQuintiles };

struct BinInput {
  UnitKey key;
  double consistency = 0.0;  // human rating, used by the human mode
  double overall = 0.0;
  std::optional<double> s_fact;  // automatic score, used by the quintile mode
};

// Statistics are NaN when n = 0.
struct BinRow {
  std::string label;
  std::size_t n = 0;
  double mean = 0.0;
  double median = 0.0;
  double p_high = 0.0;  // share with overall >= 4
  double p_low = 0.0;   // share with overall <= 2
};

struct BinTable {
  BinSource source = BinSource::HumanConsistencyRounded;
  std::vector<BinRow> rows;
};

// Human mode: five bins by consistency rounded half-up into 1..5; empty bins
// are kept with n = 0. Quintile mode: inputs stably sorted by
// (s_fact, article_id, system_id) and cut into five contiguous bins whose
// sizes differ by at most one. Throws InvalidArgument when the quintile mode
// meets a row without s_fact.
BinTable gatekeeper_bins(std::span<const BinInput> inputs, BinSource source);

// ---- ablation ---------------------------------------------------------------

struct AblationRow {
  std::string variant;
  std::optional<double> tau;            // absent when predictions are constant
  std::optional<double> delta_percent;  // (tau - tau_full) / |tau_full| * 100
};

// Rows: full model, each pillar dropped (stage 2 refit with CV on the train
// split, evaluated on the test split), and the equal-weights baseline (plain
// mean of the three pillars). The full row's tau is computed exactly as the
// calibration report computes it.
std::vector<AblationRow> ablation(std::span<const CalibrationRow> rows, const CalibrationModel& model,
                                  const Split& split);

// Split used by calibrate_two_stage for these rows and config.
Split calibration_split(std::span<const CalibrationRow> rows, const CalibrationConfig& config);

// ---- repeated-split stability ------------------------------------------------

struct StatSummary {
  std::string name;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (0 for one repetition)
  double p025 = 0.0;
  double p975 = 0.0;
};

struct StabilitySummary {
  std::size_t repetitions = 0;
  std::vector<StatSummary> stats;  // tau, rho, w_text, w_relevance, w_diversity, w_fact, w_rel, w_coh, w_flu

  const StatSummary* find(const std::string& name) const;
};

// Repetition i reruns calibrate_two_stage with seed = base.seed + i. Runs on
// up to `workers` threads; the result does not depend on scheduling.
StabilitySummary stability(std::span<const CalibrationRow> rows, const CalibrationConfig& base,
                           std::size_t repetitions, std::size_t workers = 1);

// ---- per-component correlations ----------------------------------------------

struct ComponentCorrelation {
  std::string component;
  std::size_t n = 0;
  std::optional<double> tau;  // absent for a constant component
  std::optional<double> rho;
};

// One row per component (s_fact, s_coh, s_flu, s_rel, s_relevance,
// s_diversity) plus the final score when a model is given, each against
// overall over all rows.
std::vector<ComponentCorrelation> component_correlations(std::span<const CalibrationRow> rows,
                                                         const CalibrationModel* model);

// ---- report directory --------------------------------------------------------

struct AnalysisConfig {
  std::size_t bootstrap = 1000;  // 0 disables the CIs
  std::size_t stability = 50;    // 0 disables the stability tables
  std::uint64_t seed = 42;
  std::size_t workers = 1;
};

struct AnalysisInputs {
  std::span<const UnitScoreRecord> records;
  std::span<const HumanAnnotation> annotations;     // averaged per unit
  std::span<const HumanAnnotation> annotator_rows;  // per annotator, for the consistency bins
  const CalibrationModel* model = nullptr;
};

// File names written by write_report, in order.
const std::vector<std::string>& report_manifest();

void write_report(const std::filesystem::path& dir, const AnalysisInputs& inputs, const AnalysisConfig& config,
                  const OutputMetadata& meta);

}  // namespace mmeval
