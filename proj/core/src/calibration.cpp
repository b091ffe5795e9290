#include "mmeval/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "mmeval/error.hpp"
#include "mmeval/hashing.hpp"
#include "mmeval/random.hpp"

namespace mmeval {

using json = nlohmann::json;

DesignMatrix::DesignMatrix(Matrix features, std::vector<double> target, std::vector<std::string> feature_names)
    : x_(std::move(features)), y_(std::move(target)), names_(std::move(feature_names)) {
  if (x_.rows() != y_.size()) throw Error(ErrorCode::InvalidArgument, "design matrix rows must match target length");
  if (!names_.empty() && names_.size() != x_.cols()) {
    throw Error(ErrorCode::InvalidArgument, "feature name count must match column count");
  }
  for (double v : x_.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "design matrix has non-finite features");
  }
  for (double v : y_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "design matrix has non-finite target");
  }
}

DesignMatrix DesignMatrix::subset(std::span<const std::size_t> rows) const {
  Matrix x(rows.size(), x_.cols());
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(x_.row(rows[i]).begin(), x_.row(rows[i]).end(), x.row(i).begin());
    y[i] = y_[rows[i]];
  }
  return DesignMatrix(std::move(x), std::move(y), names_);
}

double RidgeModel::predict(std::span<const double> features) const {
  if (features.size() != coefficients.size()) {
    throw Error(ErrorCode::InvalidArgument, "feature count does not match the model");
  }
  double v = intercept;
  for (std::size_t j = 0; j < features.size(); ++j) v += coefficients[j] * features[j];
  return v;
}

namespace {

// Mean that is exact for constant input, so centering a constant column
// yields exact zeros.
double exact_mean(std::span<const double> v) {
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return v.front();
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

RidgeModel ridge_fit(const DesignMatrix& data, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::InvalidArgument, "alpha must be >= 0");
  const std::size_t m = data.samples();
  const std::size_t p = data.features();
  if (m < 2) throw Error(ErrorCode::InsufficientData, "ridge needs at least 2 samples");

  std::vector<double> x_mean(p);
  std::vector<double> column(m);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t i = 0; i < m; ++i) column[i] = data.x()(i, j);
    x_mean[j] = exact_mean(column);
  }
  const double y_mean = exact_mean(data.y());

  Matrix gram(p, p);
  std::vector<double> rhs(p, 0.0);
  std::vector<double> xc(p);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < p; ++j) xc[j] = data.x()(i, j) - x_mean[j];
    const double yc = data.y()[i] - y_mean;
    for (std::size_t a = 0; a < p; ++a) {
      rhs[a] += xc[a] * yc;
      for (std::size_t b = a; b < p; ++b) gram(a, b) += xc[a] * xc[b];
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = 0; b < a; ++b) gram(a, b) = gram(b, a);
    gram(a, a) += alpha;
  }

  RidgeModel model;
  model.alpha = alpha;
  model.coefficients = p == 0 ? std::vector<double>{} : solve_spd(gram, rhs);
  model.intercept = y_mean;
  for (std::size_t j = 0; j < p; ++j) model.intercept -= model.coefficients[j] * x_mean[j];
  return model;
}

std::vector<std::size_t> kfold_assignment(std::size_t samples, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::InvalidArgument, "cross-validation needs at least 2 folds");
  if (samples < folds) {
    throw Error(ErrorCode::InsufficientData, "cross-validation needs at least as many samples as folds");
  }
  std::vector<std::size_t> perm(samples);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  shuffle_in_place(std::span<std::size_t>(perm), rng);
  std::vector<std::size_t> fold_of(samples);
  for (std::size_t pos = 0; pos < samples; ++pos) fold_of[perm[pos]] = pos * folds / samples;
  return fold_of;
}

double cross_validation_mse(const DesignMatrix& data, double alpha, std::span<const std::size_t> fold_of,
                            std::size_t folds) {
  double total = 0.0;
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, held;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? held : train).push_back(i);
    RidgeModel model;
    try {
      model = ridge_fit(data.subset(train), alpha);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::SingularSystem) return std::numeric_limits<double>::infinity();
      throw;
    }
    double sse = 0.0;
    for (std::size_t i : held) {
      const double r = model.predict(data.x().row(i)) - data.y()[i];
      sse += r * r;
    }
    total += sse / static_cast<double>(held.size());
  }
  return total / static_cast<double>(folds);
}

double cross_validate_alpha(const DesignMatrix& data, std::span<const double> grid, std::size_t folds,
                            std::uint64_t seed) {
  if (grid.empty()) throw Error(ErrorCode::InvalidArgument, "alpha grid is empty");
  if (grid.size() == 1) return grid.front();
  const auto fold_of = kfold_assignment(data.samples(), folds, seed);
  double best_alpha = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  bool have_best = false;
  for (double alpha : grid) {
    const double mse = cross_validation_mse(data, alpha, fold_of, folds);
    const double tol = 1e-12 * std::max(1.0, std::abs(best_mse));
    const bool better = !have_best || mse < best_mse - tol;
    const bool tie = have_best && std::abs(mse - best_mse) <= tol && alpha > best_alpha;
    if (better || tie) {
      best_alpha = alpha;
      best_mse = mse;
      have_best = true;
    }
  }
  if (!std::isfinite(best_mse)) {
    throw Error(ErrorCode::SingularSystem, "every alpha on the grid produced a singular fit");
  }
  return best_alpha;
}

Split stratified_split(std::span<const UnitKey> units, double test_fraction, std::uint64_t seed,
                       const StratumOf& stratum) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "test fraction must lie in [0,1)");
  }
  std::map<std::string, std::vector<UnitKey>> strata;
  for (const auto& key : units) {
    auto label = stratum(key);
    if (label.empty()) throw Error(ErrorCode::EmptyStratum, "unit " + key.to_string() + " has no stratum label");
    strata[label].push_back(key);
  }

  struct Quota {
    std::vector<UnitKey>* members;
    std::size_t count;
    double exact;
  };
  std::vector<Quota> quotas;
  std::size_t total = 0;
  for (auto& [label, members] : strata) {
    std::sort(members.begin(), members.end());
    if (std::adjacent_find(members.begin(), members.end()) != members.end()) {
      throw Error(ErrorCode::InvalidArgument, "duplicate unit key in stratum " + label);
    }
    const double exact = test_fraction * static_cast<double>(members.size());
    const auto count = static_cast<std::size_t>(std::floor(exact + 0.5 + 1e-9));
    quotas.push_back({&members, count, exact});
    total += count;
  }

  // Reconcile the global count to within one unit of the exact target.
  const double target = test_fraction * static_cast<double>(units.size());
  while (static_cast<double>(total) > target + 1.0) {
    Quota* pick = nullptr;
    for (auto& q : quotas) {
      if (q.count > 0 && (pick == nullptr || q.count - q.exact > pick->count - pick->exact)) pick = &q;
    }
    if (pick == nullptr) break;
    --pick->count;
    --total;
  }
  while (static_cast<double>(total) < target - 1.0) {
    Quota* pick = nullptr;
    for (auto& q : quotas) {
      const bool room = q.count + 1 < q.members->size();
      if (room && (pick == nullptr || q.exact - q.count > pick->exact - pick->count)) pick = &q;
    }
    if (pick == nullptr) break;
    ++pick->count;
    ++total;
  }

  Split split;
  Rng rng(seed);
  for (auto& q : quotas) {
    if (q.count >= q.members->size()) {
      throw Error(ErrorCode::EmptyStratum,
                  "stratum " + stratum(q.members->front()) + " would have no training units");
    }
    std::vector<UnitKey> shuffled = *q.members;
    shuffle_in_place(std::span<UnitKey>(shuffled), rng);
    split.test.insert(split.test.end(), shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(q.count));
    split.train.insert(split.train.end(), shuffled.begin() + static_cast<std::ptrdiff_t>(q.count), shuffled.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

std::vector<double> normalize_weights(std::span<const double> coefficients) {
  double total = 0.0;
  for (double b : coefficients) {
    if (!std::isfinite(b)) throw Error(ErrorCode::InvalidArgument, "non-finite coefficient");
    total += std::abs(b);
  }
  if (total == 0.0) throw Error(ErrorCode::AllZero, "all coefficients are zero; weights are undefined");
  std::vector<double> w;
  w.reserve(coefficients.size());
  for (double b : coefficients) w.push_back(std::abs(b) / total);
  return w;
}

TextWeights CalibrationModel::text_weights() const {
  const auto& w = stage1.normalized_weights;
  if (w.size() != 4) throw Error(ErrorCode::InvalidArgument, "stage-1 model must have four weights");
  return TextWeights::normalized(w[0], w[1], w[2], w[3]);
}

FitReport make_fit_report(const PairedSeries& series) {
  FitReport r;
  r.kendall_tau = kendall_tau_b(series);
  r.spearman_rho = spearman_rho(series);
  const auto fit = fit_statistics(series);
  r.pearson_r = fit.pearson_r;
  r.r_squared = fit.r_squared;
  r.rmse = fit.rmse;
  r.n_test = series.size();
  return r;
}

double text_score(const CalibrationRow& row, const TextWeights& weights) {
  return compose_text_score(row.s_fact, row.s_rel, row.s_coh, row.s_flu, weights);
}

double mm_eval_score(std::optional<double> s_text, std::optional<double> s_relevance,
                     std::optional<double> s_diversity, const RidgeModel& stage2) {
  if (!s_text || !s_relevance || !s_diversity) {
    throw Error(ErrorCode::AbsentPillar, std::string("missing pillar: ") +
                                             (!s_text ? "s_text" : !s_relevance ? "s_relevance" : "s_diversity"));
  }
  if (stage2.coefficients.size() != 3) throw Error(ErrorCode::InvalidArgument, "stage-2 model needs 3 coefficients");
  const double f[3] = {*s_text, *s_relevance, *s_diversity};
  return stage2.predict(f);
}

namespace {

std::vector<const CalibrationRow*> rows_for(std::span<const CalibrationRow> rows, std::span<const UnitKey> keys) {
  std::map<UnitKey, const CalibrationRow*> index;
  for (const auto& r : rows) index.emplace(r.key, &r);
  std::vector<const CalibrationRow*> out;
  out.reserve(keys.size());
  for (const auto& k : keys) out.push_back(index.at(k));
  return out;
}

DesignMatrix stage1_design(const std::vector<const CalibrationRow*>& rows) {
  Matrix x(rows.size(), 4);
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x(i, 0) = rows[i]->s_fact;
    x(i, 1) = rows[i]->s_rel;
    x(i, 2) = rows[i]->s_coh;
    x(i, 3) = rows[i]->s_flu;
    y[i] = rows[i]->overall;
  }
  return DesignMatrix(std::move(x), std::move(y), kStage1Features);
}

DesignMatrix stage2_design(const std::vector<const CalibrationRow*>& rows, const TextWeights& w) {
  Matrix x(rows.size(), 3);
  std::vector<double> y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    x(i, 0) = text_score(*rows[i], w);
    x(i, 1) = rows[i]->s_relevance;
    x(i, 2) = rows[i]->s_diversity;
    y[i] = rows[i]->overall;
  }
  return DesignMatrix(std::move(x), std::move(y), kStage2Features);
}

}  // namespace

PairedSeries predict_series(std::span<const CalibrationRow> rows, std::span<const UnitKey> keys,
                            const CalibrationModel& model) {
  const auto w = model.text_weights();
  std::vector<double> pred, ref;
  for (const auto* r : rows_for(rows, keys)) {
    pred.push_back(mm_eval_score(text_score(*r, w), r->s_relevance, r->s_diversity, model.stage2.ridge));
    ref.push_back(r->overall);
  }
  return PairedSeries(std::move(pred), std::move(ref));
}

CalibrationResult calibrate_two_stage(std::span<const CalibrationRow> rows, const CalibrationConfig& config) {
  std::vector<UnitKey> keys;
  keys.reserve(rows.size());
  for (const auto& r : rows) keys.push_back(r.key);

  CalibrationResult result;
  result.model.config = config;
  result.split = stratified_split(keys, config.test_fraction, config.seed);
  const std::size_t min_train = std::max<std::size_t>(kStage1Features.size() + 2, config.folds);
  if (result.split.train.size() < min_train) {
    throw Error(ErrorCode::InsufficientData, "training split has " + std::to_string(result.split.train.size()) +
                                                 " units; need at least " + std::to_string(min_train));
  }
  const auto train = rows_for(rows, result.split.train);
  const std::uint64_t cv_seed = mix_seed(config.seed, 1);

  // Stage 1: intra-text weights.
  const auto d1 = stage1_design(train);
  const double alpha1 = cross_validate_alpha(d1, config.alpha_grid_stage1, config.folds, cv_seed);
  auto& s1 = result.model.stage1;
  s1.ridge = ridge_fit(d1, alpha1);
  s1.feature_names = kStage1Features;
  s1.normalized_weights = normalize_weights(s1.ridge.coefficients);
  const auto text_w = result.model.text_weights();

  // Stage 2: pillar coefficients on the same training split.
  const auto d2 = stage2_design(train, text_w);
  const double alpha2 = cross_validate_alpha(d2, config.alpha_grid_stage2, config.folds, cv_seed);
  auto& s2 = result.model.stage2;
  s2.ridge = ridge_fit(d2, alpha2);
  s2.feature_names = kStage2Features;
  s2.normalized_weights = normalize_weights(s2.ridge.coefficients);

  if (result.split.test.size() < 2) {
    throw Error(ErrorCode::InsufficientData, "test split needs at least 2 units for the held-out report");
  }
  const auto series = predict_series(rows, result.split.test, result.model);
  result.test_predictions.assign(series.predictions().begin(), series.predictions().end());
  result.test_targets.assign(series.references().begin(), series.references().end());
  result.report = make_fit_report(series);
  return result;
}

namespace {

json stage_json(const StageModel& s) {
  return json{{"intercept", s.ridge.intercept},
              {"coefficients", s.ridge.coefficients},
              {"alpha", s.ridge.alpha},
              {"features", s.feature_names},
              {"normalized_weights", s.normalized_weights}};
}

StageModel stage_from_json(const json& j) {
  StageModel s;
  s.ridge.intercept = j.at("intercept").get<double>();
  s.ridge.coefficients = j.at("coefficients").get<std::vector<double>>();
  s.ridge.alpha = j.at("alpha").get<double>();
  s.feature_names = j.at("features").get<std::vector<std::string>>();
  s.normalized_weights = j.at("normalized_weights").get<std::vector<double>>();
  for (double v : s.ridge.coefficients) {
    if (!std::isfinite(v)) throw Error(ErrorCode::SchemaError, "non-finite coefficient in model");
  }
  return s;
}

}  // namespace

std::string serialize_model(const CalibrationModel& model, const FitReport* report) {
  json doc;
  doc["stage1"] = stage_json(model.stage1);
  doc["stage2"] = stage_json(model.stage2);
  const auto w = model.stage2.normalized_weights;
  if (w.size() == 3) {
    doc["pillar_weights"] = json{{"w_text", w[0]}, {"w_relevance", w[1]}, {"w_diversity", w[2]}};
  }
  const auto t = model.stage1.normalized_weights;
  if (t.size() == 4) doc["text_weights"] = json{{"fact", t[0]}, {"rel", t[1]}, {"coh", t[2]}, {"flu", t[3]}};
  doc["config"] = json{{"alpha_grid_stage1", model.config.alpha_grid_stage1},
                       {"alpha_grid_stage2", model.config.alpha_grid_stage2},
                       {"folds", model.config.folds},
                       {"test_fraction", model.config.test_fraction},
                       {"seed", model.config.seed}};
  doc["data_fingerprint"] = model.data_fingerprint;
  if (report != nullptr) {
    doc["heldout_report"] = json{{"kendall_tau", report->kendall_tau}, {"spearman_rho", report->spearman_rho},
                                 {"pearson_r", report->pearson_r},     {"r_squared", report->r_squared},
                                 {"rmse", report->rmse},               {"n_test", report->n_test}};
  }
  return doc.dump(2);
}

CalibrationModel parse_model(const std::string& text, const std::string& origin) {
  try {
    const auto doc = json::parse(text);
    CalibrationModel m;
    m.stage1 = stage_from_json(doc.at("stage1"));
    m.stage2 = stage_from_json(doc.at("stage2"));
    const auto& c = doc.at("config");
    m.config.alpha_grid_stage1 = c.at("alpha_grid_stage1").get<std::vector<double>>();
    m.config.alpha_grid_stage2 = c.at("alpha_grid_stage2").get<std::vector<double>>();
    m.config.folds = c.at("folds").get<std::size_t>();
    m.config.test_fraction = c.at("test_fraction").get<double>();
    m.config.seed = c.at("seed").get<std::uint64_t>();
    m.data_fingerprint = doc.value("data_fingerprint", "");
    if (m.stage1.ridge.coefficients.size() != 4 || m.stage2.ridge.coefficients.size() != 3) {
      throw Error(ErrorCode::SchemaError, origin + ": stage models must have 4 and 3 coefficients", origin);
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, origin + ": " + e.what(), origin);
  }
}

CalibrationModel load_model(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file_bytes(path);
  } catch (const Error&) {
    throw Error(ErrorCode::SchemaError, "cannot read model file " + path.string(), path.string());
  }
  return parse_model(text, path.string());
}

}  // namespace mmeval
