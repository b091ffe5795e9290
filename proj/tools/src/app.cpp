#include "app.hpp"

#include <algorithm>
#include <iostream>
#include <map>

#include <CLI11.hpp>
#include <json.hpp>

#include "mmeval/analysis.hpp"
#include "mmeval/calibration.hpp"
#include "mmeval/dataset.hpp"
#include "mmeval/error.hpp"
#include "mmeval/gateway.hpp"
#include "mmeval/hashing.hpp"
#include "mmeval/metadata.hpp"
#include "mmeval/scores_io.hpp"
#include "mmeval/scoring.hpp"

namespace mmeval::cli {

namespace {

const std::filesystem::path& require(const std::optional<std::filesystem::path>& p, const char* flag) {
  if (!p) throw Error(ErrorCode::InvalidArgument, std::string("--") + flag + " is required");
  return *p;
}

void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::is_regular_file(p)) {
    throw Error(ErrorCode::SchemaError, std::string(what) + " file not found: " + p.string(), p.string());
  }
}

OutputMetadata make_meta(const RunConfig& cfg) {
  OutputMetadata meta;
  meta.command = cfg.command;
  for (const auto& [k, v] : cfg.echo()) meta.set(k, v);
  return meta;
}

std::string prompts_digest(const PromptTemplates& p) {
  return sha256_hex(p.atomic_facts + '\0' + p.fact_validation + '\0' + p.relevance + '\0' + p.coherence + '\0' +
                    p.fluency + '\0' + p.alignment);
}

std::vector<HumanAnnotation> averaged(const std::vector<HumanAnnotation>& rows) { return average_annotations(rows); }

std::string model_document(const CalibrationModel& model, const FitReport& report, const OutputMetadata& meta) {
  auto body = nlohmann::ordered_json::parse(serialize_model(model, &report));
  nlohmann::ordered_json doc;
  doc["_meta"] = nlohmann::ordered_json::parse(meta.json());
  for (auto& [k, v] : body.items()) doc[k] = v;
  return doc.dump(2) + "\n";
}

}  // namespace

int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err, const Hooks& hooks) {
  const auto& articles = require(cfg.articles, "articles");
  const auto& candidates = require(cfg.candidates, "candidates");
  const auto& scores_path = require(cfg.scores, "scores");
  require_file(articles, "articles");
  require_file(candidates, "candidates");
  const auto dataset = load_dataset(articles, candidates, std::nullopt);

  GatewayConfig gw;
  gw.text_judge = {cfg.judge_api_base, cfg.judge_api_key};
  gw.vision_judge = gw.text_judge;
  gw.embedder = {cfg.embed_api_base, cfg.embed_api_key};
  gw.cache_dir = cfg.cache_dir;
  gw.max_inflight = cfg.max_inflight;
  JudgeGateway gateway(gw, hooks.transport);

  ScoringContext ctx;
  const DecodingParams decoding(cfg.max_tokens);
  ctx.text_judge = {&gateway, EndpointRole::TextJudge, cfg.text_model, decoding};
  ctx.vision_judge = {&gateway, EndpointRole::VisionJudge, cfg.vision_model, decoding};
  ctx.embedder = {&gateway, EndpointRole::Embedder, cfg.embed_model, decoding};
  ctx.prompts = cfg.prompts_dir ? PromptTemplates::load(*cfg.prompts_dir) : PromptTemplates::defaults();
  ctx.pillars = parse_pillars(cfg.pillars);
  ctx.source_budget = cfg.source_budget;
  std::optional<EmbeddingStore> store;
  if (cfg.embeddings_file) {
    require_file(*cfg.embeddings_file, "embeddings");
    store = EmbeddingStore::load(*cfg.embeddings_file);
    ctx.embeddings = &*store;
  }

  auto meta = make_meta(cfg);
  meta.set("prompts", prompts_digest(ctx.prompts));
  meta.add_input("articles", articles);
  meta.add_input("candidates", candidates);
  if (cfg.embeddings_file) meta.add_input("embeddings", *cfg.embeddings_file);

  const auto records = score_units(dataset.units(), ctx, cfg.max_inflight);
  write_scores(scores_path, records, meta);

  std::size_t failed = 0, warned = 0;
  for (const auto& r : records) {
    if (!r.ok()) {
      ++failed;
      err << "unit " << r.scores.key.to_string() << " failed: " << r.error_message << "\n";
    }
    for (const auto& w : r.warnings) {
      ++warned;
      err << "warning: unit " << r.scores.key.to_string() << ": " << w << "\n";
    }
  }
  const auto stats = gateway.stats();
  out << "scored " << records.size() << " units (" << failed << " failed, " << warned << " warnings); "
      << stats.network_requests << " requests, " << stats.cache_hits << " cache hits\n";
  return failed > 0 ? kPartialFailure : kSuccess;
}

int cmd_calibrate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& scores_path = require(cfg.scores, "scores");
  const auto& annotations_path = require(cfg.annotations, "annotations");
  const auto& model_path = require(cfg.model, "model");
  require_file(scores_path, "scores");
  require_file(annotations_path, "annotations");

  const auto records = load_scores(scores_path);
  const auto annotations = averaged(load_annotation_rows(annotations_path));
  const auto joined = build_calibration_rows(records, annotations);
  if (!joined.absent_pillars.empty()) {
    err << "warning: " << joined.absent_pillars.size() << " units excluded for absent pillars\n";
  }
  if (!joined.unannotated.empty()) {
    err << "warning: " << joined.unannotated.size() << " scored units have no annotation\n";
  }

  CalibrationConfig config;
  config.alpha_grid_stage1 = cfg.alpha_grid_1;
  config.alpha_grid_stage2 = cfg.alpha_grid_2;
  config.folds = cfg.folds;
  config.test_fraction = cfg.test_fraction;
  config.seed = cfg.seed;
  auto result = calibrate_two_stage(joined.rows, config);

  auto meta = make_meta(cfg);
  meta.add_input("scores", scores_path);
  meta.add_input("annotations", annotations_path);
  result.model.data_fingerprint = sha256_hex(meta.inputs[0].second + meta.inputs[1].second);
  write_file_atomic(model_path, model_document(result.model, result.report, meta));

  const auto& r = result.report;
  std::string csv = meta.csv_header() + "statistic,value\n";
  csv += "kendall_tau_b," + format_double(r.kendall_tau) + "\n";
  csv += "spearman_rho," + format_double(r.spearman_rho) + "\n";
  csv += "pearson_r," + format_double(r.pearson_r) + "\n";
  csv += "r_squared," + format_double(r.r_squared) + "\n";
  csv += "rmse," + format_double(r.rmse) + "\n";
  csv += "n_test," + std::to_string(r.n_test) + "\n";
  write_file_atomic(model_path.string() + ".report.csv", csv);

  out << "calibrated on " << result.split.train.size() << " units, held out " << r.n_test << "\n"
      << "alpha stage1 " << format_double(result.model.stage1.ridge.alpha) << ", stage2 "
      << format_double(result.model.stage2.ridge.alpha) << "\n"
      << "kendall_tau_b " << format_double(r.kendall_tau) << "\n"
      << "spearman_rho " << format_double(r.spearman_rho) << "\n"
      << "pearson_r " << format_double(r.pearson_r) << "\n"
      << "r_squared " << format_double(r.r_squared) << "\n"
      << "rmse " << format_double(r.rmse) << "\n";
  return kSuccess;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  const auto& scores_path = require(cfg.scores, "scores");
  const auto& model_path = require(cfg.model, "model");
  const auto& out_dir = require(cfg.out, "out");
  require_file(scores_path, "scores");
  require_file(model_path, "model");
  const auto records = load_scores(scores_path);
  const auto model = load_model(model_path);
  const auto w = model.text_weights();

  auto meta = make_meta(cfg);
  meta.add_input("scores", scores_path);
  meta.add_input("model", model_path);

  std::string units = meta.csv_header() + "article_id,system_id,s_text,s_relevance,s_diversity,mm_eval\n";
  std::string excluded = meta.csv_header() + "article_id,system_id,reason\n";
  std::map<std::string, std::pair<double, std::size_t>> per_system;
  std::size_t n_excluded = 0;
  for (const auto& r : records) {
    const auto& s = r.scores;
    std::optional<double> text;
    if (s.has_text_components()) {
      text = compose_text_score(s.fact->normalized, s.rel->normalized, s.coh->normalized, s.flu->normalized, w);
    }
    std::optional<double> rel, div;
    if (s.relevance) rel = s.relevance->normalized;
    if (s.diversity) div = s.diversity->normalized;
    try {
      const double score = mm_eval_score(text, rel, div, model.stage2.ridge);
      units += s.key.article_id + "," + s.key.system_id + "," + format_double(*text) + "," + format_double(*rel) +
               "," + format_double(*div) + "," + format_double(score) + "\n";
      auto& acc = per_system[s.key.system_id];
      acc.first += score;
      ++acc.second;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AbsentPillar) throw;
      ++n_excluded;
      excluded += s.key.article_id + "," + s.key.system_id + "," + std::string(e.what()) + "\n";
    }
  }

  std::vector<std::pair<std::string, std::pair<double, std::size_t>>> board(per_system.begin(), per_system.end());
  std::vector<std::pair<std::string, double>> means;
  for (const auto& [system, acc] : board) means.emplace_back(system, acc.first / static_cast<double>(acc.second));
  std::stable_sort(means.begin(), means.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::string leaderboard = meta.csv_header() + "rank,system_id,n_units,mean_mm_eval\n";
  for (std::size_t i = 0; i < means.size(); ++i) {
    leaderboard += std::to_string(i + 1) + "," + means[i].first + "," +
                   std::to_string(per_system[means[i].first].second) + "," + format_double(means[i].second) + "\n";
  }

  std::filesystem::create_directories(out_dir);
  write_file_atomic(out_dir / "unit_scores.csv", units);
  write_file_atomic(out_dir / "excluded_units.csv", excluded);
  write_file_atomic(out_dir / "leaderboard.csv", leaderboard);
  if (n_excluded > 0) err << "warning: " << n_excluded << " units excluded for absent pillars\n";
  out << "evaluated " << records.size() - n_excluded << " units across " << means.size() << " systems\n";
  for (std::size_t i = 0; i < means.size(); ++i) {
    out << (i + 1) << ". " << means[i].first << " " << format_double(means[i].second) << "\n";
  }
  return kSuccess;
}

int cmd_analyze(const RunConfig& cfg, std::ostream& out, std::ostream&) {
  const auto& scores_path = require(cfg.scores, "scores");
  const auto& annotations_path = require(cfg.annotations, "annotations");
  const auto& model_path = require(cfg.model, "model");
  const auto& out_dir = require(cfg.out, "out");
  require_file(scores_path, "scores");
  require_file(annotations_path, "annotations");
  require_file(model_path, "model");

  const auto records = load_scores(scores_path);
  const auto rows = load_annotation_rows(annotations_path);
  const auto annotations = averaged(rows);
  const auto model = load_model(model_path);

  auto meta = make_meta(cfg);
  meta.set("model-seed", std::to_string(model.config.seed));
  meta.set("model-alpha-grid-1", format_list(model.config.alpha_grid_stage1));
  meta.set("model-alpha-grid-2", format_list(model.config.alpha_grid_stage2));
  meta.set("kendall-variant", "tau-b");
  meta.add_input("scores", scores_path);
  meta.add_input("annotations", annotations_path);
  meta.add_input("model", model_path);

  AnalysisInputs inputs;
  inputs.records = records;
  inputs.annotations = annotations;
  inputs.annotator_rows = rows;
  inputs.model = &model;
  AnalysisConfig config;
  config.bootstrap = cfg.bootstrap;
  config.stability = cfg.stability;
  config.seed = cfg.seed;
  config.workers = cfg.max_inflight;
  write_report(out_dir, inputs, config, meta);
  out << "wrote " << report_manifest().size() << " files to " << out_dir.string() << "\n";
  return kSuccess;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Hooks& hooks) {
  CLI::App app{"Reference-weak evaluation of multimodal summaries", "mmeval"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::string config_file;
  auto* config_opt = app.add_option("--config", config_file, "JSON file with default settings");
  for (const auto& name : setting_names()) {
    options[name] = app.add_option("--" + name, values[name]);
  }
  options["pillars"]->description("comma list of text,alignment,diversity");
  options["alpha-grid-1"]->description("stage-1 ridge alpha grid, comma separated");
  options["alpha-grid-2"]->description("stage-2 ridge alpha grid, comma separated");
  options["bootstrap"]->description("bootstrap resamples; 0 disables confidence intervals");
  options["stability"]->description("repeated-split repetitions; 0 disables");

  std::string command;
  for (const char* name : {"score", "calibrate", "evaluate", "analyze"}) {
    app.add_subcommand(name)->fallthrough()->callback([&command, name] { command = name; });
  }
  app.get_subcommand("score")->description("judge every unit and write the scores file");
  app.get_subcommand("calibrate")->description("learn the two-stage aggregation model");
  app.get_subcommand("evaluate")->description("score units with a model and rank systems");
  app.get_subcommand("analyze")->description("write the meta-evaluation report directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << "\n";
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    std::map<std::string, std::string> flags;
    for (const auto& [name, opt] : options) {
      if (opt->count() > 0) flags[name] = values[name];
    }
    std::optional<std::filesystem::path> cfg_path;
    if (config_opt->count() > 0) cfg_path = config_file;
    const auto cfg = resolve_config(command, cfg_path, flags, process_environment());
    if (command == "score") return cmd_score(cfg, out, err, hooks);
    if (command == "calibrate") return cmd_calibrate(cfg, out, err);
    if (command == "evaluate") return cmd_evaluate(cfg, out, err);
    return cmd_analyze(cfg, out, err);
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mmeval::cli
