#include "mmeval/analysis.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mmeval/error.hpp"
#include "mmeval/hashing.hpp"
#include "mmeval/random.hpp"
#include "mmeval/statistics.hpp"

namespace mmeval {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

BinRow summarize_bin(std::string label, std::vector<double> overall) {
  BinRow row;
  row.label = std::move(label);
  row.n = overall.size();
  if (overall.empty()) {
    row.mean = row.median = row.p_high = row.p_low = kNaN;
    return row;
  }
  std::sort(overall.begin(), overall.end());
  const double n = static_cast<double>(overall.size());
  row.mean = std::accumulate(overall.begin(), overall.end(), 0.0) / n;
  row.median = quantile_sorted(overall, 0.5);
  row.p_high = static_cast<double>(std::count_if(overall.begin(), overall.end(),
                                                 [](double v) { return v >= 4.0 - 1e-9; })) / n;
  row.p_low = static_cast<double>(std::count_if(overall.begin(), overall.end(),
                                                [](double v) { return v <= 2.0 + 1e-9; })) / n;
  return row;
}

}  // namespace

BinTable gatekeeper_bins(std::span<const BinInput> inputs, BinSource source) {
  BinTable table;
  table.source = source;
  std::vector<std::vector<double>> groups(5);
  if (source == BinSource::HumanConsistencyRounded) {
    for (const auto& in : inputs) {
      const auto bin = static_cast<int>(std::floor(in.consistency + 0.5));
      if (bin < 1 || bin > 5) {
        throw Error(ErrorCode::InvalidArgument, "consistency outside [1,5] for " + in.key.to_string());
      }
      groups[static_cast<std::size_t>(bin - 1)].push_back(in.overall);
    }
    for (std::size_t b = 0; b < 5; ++b) table.rows.push_back(summarize_bin(std::to_string(b + 1), groups[b]));
    return table;
  }

  std::vector<const BinInput*> order;
  for (const auto& in : inputs) {
    if (!in.s_fact) throw Error(ErrorCode::InvalidArgument, "missing s_fact for " + in.key.to_string());
    order.push_back(&in);
  }
  std::stable_sort(order.begin(), order.end(), [](const BinInput* a, const BinInput* b) {
    if (*a->s_fact != *b->s_fact) return *a->s_fact < *b->s_fact;
    return a->key < b->key;
  });
  const std::size_t m = order.size();
  for (std::size_t b = 0; b < 5; ++b) {
    for (std::size_t i = b * m / 5; i < (b + 1) * m / 5; ++i) groups[b].push_back(order[i]->overall);
    table.rows.push_back(summarize_bin("Q" + std::to_string(b + 1), groups[b]));
  }
  return table;
}

Split calibration_split(std::span<const CalibrationRow> rows, const CalibrationConfig& config) {
  std::vector<UnitKey> keys;
  for (const auto& r : rows) keys.push_back(r.key);
  return stratified_split(keys, config.test_fraction, config.seed);
}

namespace {

std::optional<double> tau_or_absent(std::vector<double> pred, std::vector<double> ref) {
  try {
    return kendall_tau_b(PairedSeries(std::move(pred), std::move(ref)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateSeries) return std::nullopt;
    throw;
  }
}

std::optional<double> rho_or_absent(std::vector<double> pred, std::vector<double> ref) {
  try {
    return spearman_rho(PairedSeries(std::move(pred), std::move(ref)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateSeries) return std::nullopt;
    throw;
  }
}

std::array<double, 3> pillars(const CalibrationRow& r, const TextWeights& w) {
  return {text_score(r, w), r.s_relevance, r.s_diversity};
}

}  // namespace

std::vector<AblationRow> ablation(std::span<const CalibrationRow> rows, const CalibrationModel& model,
                                  const Split& split) {
  std::map<UnitKey, const CalibrationRow*> index;
  for (const auto& r : rows) index.emplace(r.key, &r);
  auto lookup = [&](const std::vector<UnitKey>& keys) {
    std::vector<const CalibrationRow*> out;
    for (const auto& k : keys) {
      auto it = index.find(k);
      if (it == index.end()) throw Error(ErrorCode::MissingReference, "split unit missing: " + k.to_string());
      out.push_back(it->second);
    }
    return out;
  };
  const auto train = lookup(split.train);
  const auto test = lookup(split.test);
  const auto w = model.text_weights();

  std::vector<double> targets;
  for (const auto* r : test) targets.push_back(r->overall);

  std::vector<AblationRow> out;
  const auto full = predict_series(rows, split.test, model);
  const double tau_full = kendall_tau_b(full);
  out.push_back({"full", tau_full, 0.0});

  const std::uint64_t cv_seed = mix_seed(model.config.seed, 1);
  for (std::size_t drop = 0; drop < 3; ++drop) {
    std::vector<std::string> names;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j != drop) names.push_back(kStage2Features[j]);
    }
    auto design = [&](const std::vector<const CalibrationRow*>& subset) {
      Matrix x(subset.size(), 2);
      std::vector<double> y;
      for (std::size_t i = 0; i < subset.size(); ++i) {
        const auto p = pillars(*subset[i], w);
        std::size_t c = 0;
        for (std::size_t j = 0; j < 3; ++j) {
          if (j != drop) x(i, c++) = p[j];
        }
        y.push_back(subset[i]->overall);
      }
      return DesignMatrix(std::move(x), std::move(y), names);
    };
    const auto d_train = design(train);
    const double alpha =
        cross_validate_alpha(d_train, model.config.alpha_grid_stage2, model.config.folds, cv_seed);
    const auto fit = ridge_fit(d_train, alpha);
    const auto d_test = design(test);
    std::vector<double> pred;
    for (std::size_t i = 0; i < test.size(); ++i) pred.push_back(fit.predict(d_test.x().row(i)));
    out.push_back({"without_" + kStage2Features[drop], tau_or_absent(std::move(pred), targets), std::nullopt});
  }

  std::vector<double> equal;
  for (const auto* r : test) {
    const auto p = pillars(*r, w);
    equal.push_back((p[0] + p[1] + p[2]) / 3.0);
  }
  out.push_back({"equal_weights", tau_or_absent(std::move(equal), targets), std::nullopt});

  for (auto& row : out) {
    if (row.tau && tau_full != 0.0) row.delta_percent = (*row.tau - tau_full) / std::abs(tau_full) * 100.0;
  }
  return out;
}

const StatSummary* StabilitySummary::find(const std::string& name) const {
  for (const auto& s : stats) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

StabilitySummary stability(std::span<const CalibrationRow> rows, const CalibrationConfig& base,
                           std::size_t repetitions, std::size_t workers) {
  static const char* const kNames[] = {"tau",         "rho",    "w_text", "w_relevance", "w_diversity",
                                       "w_fact",      "w_rel",  "w_coh",  "w_flu"};
  constexpr std::size_t kStats = std::size(kNames);
  std::vector<std::array<double, kStats>> values(repetitions);
  std::vector<std::exception_ptr> errors(repetitions);

  auto run = [&](std::size_t i) {
    try {
      CalibrationConfig config = base;
      config.seed = base.seed + i;
      const auto result = calibrate_two_stage(rows, config);
      const auto& pw = result.model.stage2.normalized_weights;
      const auto& tw = result.model.stage1.normalized_weights;
      values[i] = {result.report.kendall_tau, result.report.spearman_rho, pw[0], pw[1], pw[2],
                   tw[0], tw[1], tw[2], tw[3]};
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < repetitions; i = next++) run(i);
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t threads = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(repetitions, 1));
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  StabilitySummary summary;
  summary.repetitions = repetitions;
  if (repetitions == 0) return summary;
  for (std::size_t s = 0; s < kStats; ++s) {
    std::vector<double> v;
    for (const auto& rep : values) v.push_back(rep[s]);
    StatSummary st;
    st.name = kNames[s];
    const double n = static_cast<double>(v.size());
    st.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - st.mean) * (x - st.mean);
    st.std = v.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    std::sort(v.begin(), v.end());
    st.p025 = quantile_sorted(v, 0.025);
    st.p975 = quantile_sorted(v, 0.975);
    summary.stats.push_back(st);
  }
  return summary;
}

std::vector<ComponentCorrelation> component_correlations(std::span<const CalibrationRow> rows,
                                                         const CalibrationModel* model) {
  std::vector<double> overall;
  for (const auto& r : rows) overall.push_back(r.overall);
  std::vector<std::pair<std::string, std::vector<double>>> series = {
      {"s_fact", {}}, {"s_coh", {}}, {"s_flu", {}}, {"s_rel", {}}, {"s_relevance", {}}, {"s_diversity", {}}};
  for (const auto& r : rows) {
    series[0].second.push_back(r.s_fact);
    series[1].second.push_back(r.s_coh);
    series[2].second.push_back(r.s_flu);
    series[3].second.push_back(r.s_rel);
    series[4].second.push_back(r.s_relevance);
    series[5].second.push_back(r.s_diversity);
  }
  if (model != nullptr) {
    const auto w = model->text_weights();
    std::vector<double> final_scores;
    for (const auto& r : rows) {
      final_scores.push_back(mm_eval_score(text_score(r, w), r.s_relevance, r.s_diversity, model->stage2.ridge));
    }
    series.emplace_back("mm_eval", std::move(final_scores));
  }
  std::vector<ComponentCorrelation> out;
  for (auto& [name, values] : series) {
    ComponentCorrelation c;
    c.component = name;
    c.n = values.size();
    if (values.size() >= 2) {
      c.tau = tau_or_absent(values, overall);
      c.rho = rho_or_absent(values, overall);
    }
    out.push_back(std::move(c));
  }
  return out;
}

// ---- report ------------------------------------------------------------------

const std::vector<std::string>& report_manifest() {
  static const std::vector<std::string> files = {
      "component_correlations.csv", "correlation_summary.csv", "consistency_bins.csv", "fact_quintiles.csv",
      "pillar_weights.csv",         "text_weights.csv",        "ablation.csv",         "stability_rank.csv",
      "stability_pillars.csv",      "stability_text.csv",      "plot_gatekeeper.csv",  "plot_weights.csv",
      "plot_ablation.csv",          "summary.json"};
  return files;
}

namespace {

std::string num(double v) { return format_double(v); }
std::string num(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

class CsvFile {
 public:
  CsvFile(const OutputMetadata& meta, const std::string& header) : text_(meta.csv_header() + header + "\n") {}

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ",";
      text_ += cells[i];
    }
    text_ += "\n";
  }

  void write(const std::filesystem::path& path) const { write_file_atomic(path, text_); }

 private:
  std::string text_;
};

void bins_csv(const BinTable& t, const OutputMetadata& meta, const std::filesystem::path& path) {
  CsvFile f(meta, "bin,n,mean_overall,median_overall,p_overall_ge_4,p_overall_le_2");
  for (const auto& r : t.rows) {
    f.row({r.label, std::to_string(r.n), num(r.mean), num(r.median), num(r.p_high), num(r.p_low)});
  }
  f.write(path);
}

void stability_csv(const StabilitySummary& s, const std::vector<std::string>& names, const OutputMetadata& meta,
                   const std::filesystem::path& path) {
  CsvFile f(meta, "statistic,repetitions,mean,std,p2_5,p97_5");
  for (const auto& name : names) {
    if (const auto* st = s.find(name)) {
      f.row({name, std::to_string(s.repetitions), num(st->mean), num(st->std), num(st->p025), num(st->p975)});
    } else {
      f.row({name, "0", "NA", "NA", "NA", "NA"});
    }
  }
  f.write(path);
}

}  // namespace

void write_report(const std::filesystem::path& dir, const AnalysisInputs& inputs, const AnalysisConfig& config,
                  const OutputMetadata& meta) {
  if (inputs.model == nullptr) throw Error(ErrorCode::InvalidArgument, "analysis needs a calibration model");
  const auto& model = *inputs.model;
  std::filesystem::create_directories(dir);

  const auto joined = build_calibration_rows(inputs.records, inputs.annotations);
  const auto& rows = joined.rows;
  const auto split = calibration_split(rows, model.config);
  const auto heldout = predict_series(rows, split.test, model);
  const auto report = make_fit_report(heldout);

  // Rank and fit statistics on the held-out split.
  {
    CsvFile f(meta, "statistic,value,ci_lower,ci_upper");
    std::optional<ConfidenceInterval> tau_ci, rho_ci;
    if (config.bootstrap > 0) {
      tau_ci = bootstrap_ci(heldout, RankStatistic::Tau, config.bootstrap, mix_seed(config.seed, 11));
      rho_ci = bootstrap_ci(heldout, RankStatistic::Rho, config.bootstrap, mix_seed(config.seed, 12));
    }
    auto ci_cells = [](const std::optional<ConfidenceInterval>& ci) -> std::pair<std::string, std::string> {
      if (!ci) return {"NA", "NA"};
      return {num(ci->lower), num(ci->upper)};
    };
    const auto [tl, tu] = ci_cells(tau_ci);
    const auto [rl, ru] = ci_cells(rho_ci);
    f.row({"kendall_tau_b", num(report.kendall_tau), tl, tu});
    f.row({"spearman_rho", num(report.spearman_rho), rl, ru});
    f.row({"pearson_r", num(report.pearson_r), "NA", "NA"});
    f.row({"r_squared", num(report.r_squared), "NA", "NA"});
    f.row({"rmse", num(report.rmse), "NA", "NA"});
    f.row({"n_test", std::to_string(report.n_test), "NA", "NA"});
    f.write(dir / "correlation_summary.csv");
  }

  {
    CsvFile f(meta, "component,n,kendall_tau_b,spearman_rho");
    for (const auto& c : component_correlations(rows, &model)) {
      f.row({c.component, std::to_string(c.n), num(c.tau), num(c.rho)});
    }
    f.write(dir / "component_correlations.csv");
  }

  // Gatekeeper bins.
  std::vector<BinInput> human;
  for (const auto& a : inputs.annotator_rows) human.push_back({a.key(), a.consistency, a.overall, std::nullopt});
  const auto human_bins = gatekeeper_bins(human, BinSource::HumanConsistencyRounded);
  std::map<UnitKey, const UnitScoreRecord*> by_key;
  for (const auto& r : inputs.records) by_key.emplace(r.scores.key, &r);
  std::vector<BinInput> auto_fact;
  for (const auto& a : inputs.annotations) {
    auto it = by_key.find(a.key());
    if (it == by_key.end() || !it->second->scores.fact) continue;
    auto_fact.push_back({a.key(), a.consistency, a.overall, it->second->scores.fact->normalized});
  }
  const auto fact_bins = gatekeeper_bins(auto_fact, BinSource::FactQuintiles);
  bins_csv(human_bins, meta, dir / "consistency_bins.csv");
  bins_csv(fact_bins, meta, dir / "fact_quintiles.csv");
  {
    CsvFile f(meta, "source,bin,n,mean_overall,p_overall_ge_4,p_overall_le_2");
    for (const auto* t : {&human_bins, &fact_bins}) {
      const char* src = t->source == BinSource::HumanConsistencyRounded ? "human_consistency" : "fact_quintile";
      for (const auto& r : t->rows) f.row({src, r.label, std::to_string(r.n), num(r.mean), num(r.p_high), num(r.p_low)});
    }
    f.write(dir / "plot_gatekeeper.csv");
  }

  // Weights.
  {
    CsvFile f(meta, "feature,coefficient,normalized_weight,alpha");
    f.row({"intercept", num(model.stage2.ridge.intercept), "NA", num(model.stage2.ridge.alpha)});
    for (std::size_t j = 0; j < model.stage2.feature_names.size(); ++j) {
      f.row({model.stage2.feature_names[j], num(model.stage2.ridge.coefficients[j]),
             num(model.stage2.normalized_weights[j]), num(model.stage2.ridge.alpha)});
    }
    f.write(dir / "pillar_weights.csv");
  }
  {
    CsvFile f(meta, "feature,coefficient,normalized_weight,alpha");
    f.row({"intercept", num(model.stage1.ridge.intercept), "NA", num(model.stage1.ridge.alpha)});
    for (std::size_t j = 0; j < model.stage1.feature_names.size(); ++j) {
      f.row({model.stage1.feature_names[j], num(model.stage1.ridge.coefficients[j]),
             num(model.stage1.normalized_weights[j]), num(model.stage1.ridge.alpha)});
    }
    f.write(dir / "text_weights.csv");
  }
  {
    CsvFile f(meta, "level,feature,weight");
    for (std::size_t j = 0; j < model.stage2.feature_names.size(); ++j) {
      f.row({"pillar", model.stage2.feature_names[j], num(model.stage2.normalized_weights[j])});
    }
    for (std::size_t j = 0; j < model.stage1.feature_names.size(); ++j) {
      f.row({"text", model.stage1.feature_names[j], num(model.stage1.normalized_weights[j])});
    }
    f.write(dir / "plot_weights.csv");
  }

  // Ablation.
  const auto abl = ablation(rows, model, split);
  for (const char* name : {"ablation.csv", "plot_ablation.csv"}) {
    CsvFile f(meta, "variant,kendall_tau_b,delta_percent");
    for (const auto& a : abl) f.row({a.variant, num(a.tau), num(a.delta_percent)});
    f.write(dir / name);
  }

  // Stability.
  StabilitySummary stab;
  if (config.stability > 0) {
    CalibrationConfig base = model.config;
    base.seed = config.seed;
    stab = stability(rows, base, config.stability, config.workers);
  }
  stability_csv(stab, {"tau", "rho"}, meta, dir / "stability_rank.csv");
  stability_csv(stab, {"w_text", "w_relevance", "w_diversity"}, meta, dir / "stability_pillars.csv");
  stability_csv(stab, {"w_fact", "w_rel", "w_coh", "w_flu"}, meta, dir / "stability_text.csv");

  // Summary.
  nlohmann::ordered_json j;
  j["_meta"] = nlohmann::ordered_json::parse(meta.json());
  j["kendall_variant"] = "tau-b";
  j["units"] = {{"scored", inputs.records.size()},
                {"calibration_rows", rows.size()},
                {"excluded_absent_pillars", joined.absent_pillars.size()},
                {"excluded_unannotated", joined.unannotated.size()},
                {"train", split.train.size()},
                {"test", split.test.size()}};
  j["heldout"] = {{"kendall_tau_b", report.kendall_tau}, {"spearman_rho", report.spearman_rho},
                  {"pearson_r", report.pearson_r},       {"r_squared", report.r_squared},
                  {"rmse", report.rmse},                 {"n_test", report.n_test}};
  j["alpha"] = {{"stage1", model.stage1.ridge.alpha}, {"stage2", model.stage2.ridge.alpha}};
  nlohmann::ordered_json pw, tw;
  for (std::size_t k = 0; k < model.stage2.feature_names.size(); ++k) {
    pw[model.stage2.feature_names[k]] = model.stage2.normalized_weights[k];
  }
  for (std::size_t k = 0; k < model.stage1.feature_names.size(); ++k) {
    tw[model.stage1.feature_names[k]] = model.stage1.normalized_weights[k];
  }
  j["pillar_weights"] = pw;
  j["text_weights"] = tw;
  nlohmann::ordered_json ab = nlohmann::ordered_json::object();
  for (const auto& a : abl) ab[a.variant] = a.tau ? nlohmann::ordered_json(*a.tau) : nlohmann::ordered_json(nullptr);
  j["ablation_tau"] = ab;
  j["bootstrap_resamples"] = config.bootstrap;
  j["stability_repetitions"] = config.stability;
  write_file_atomic(dir / "summary.json", j.dump(2) + "\n");
}

}  // namespace mmeval
