#include "mmeval/scores_io.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

#include "jsonl.hpp"
#include "mmeval/error.hpp"
#include "mmeval/hashing.hpp"

namespace mmeval {

using json = nlohmann::ordered_json;

namespace {

struct Field {
  const char* name;
  std::optional<Score> PillarScores::*member;
};

constexpr Field kFields[] = {
    {"s_fact", &PillarScores::fact},           {"s_rel", &PillarScores::rel},
    {"s_coh", &PillarScores::coh},             {"s_flu", &PillarScores::flu},
    {"s_relevance", &PillarScores::relevance}, {"s_diversity", &PillarScores::diversity},
};

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<std::string> UnitScoreRecord::absent() const {
  std::vector<std::string> out;
  for (const auto& f : kFields) {
    if (!(scores.*f.member)) out.emplace_back(f.name);
  }
  return out;
}

std::string format_score_record(const UnitScoreRecord& r) {
  json j;
  j["article_id"] = r.scores.key.article_id;
  j["system_id"] = r.scores.key.system_id;
  j["status"] = r.ok() ? "ok" : "failed";
  json raw = json::object(), norm = json::object();
  for (const auto& f : kFields) {
    const auto& s = r.scores.*f.member;
    raw[f.name] = s ? json(s->raw) : json(nullptr);
    norm[f.name] = s ? json(s->normalized) : json(nullptr);
  }
  j["raw"] = raw;
  j["normalized"] = norm;
  j["s_text"] = optional_number(r.scores.text);
  j["absent"] = r.absent();
  j["out_of_range"] = r.out_of_range;
  j["warnings"] = r.warnings;
  j["error"] = r.ok() ? json(nullptr) : json{{"code", r.error_code}, {"message", r.error_message}};
  json facts = json::array();
  for (const auto& f : r.facts) facts.push_back({{"text", f.text}, {"supported", f.supported}});
  json rationales = json::object();
  for (const auto& [k, v] : r.rationales) rationales[k] = v;
  j["audit"] = {{"facts", facts}, {"rationales", rationales}};
  return j.dump();
}

namespace {

UnitScoreRecord record_from_json(const nlohmann::json& j, const detail::RecordContext& ctx) {
  UnitScoreRecord r;
  r.scores.key.article_id = detail::require_string(j, "article_id", ctx);
  r.scores.key.system_id = detail::require_string(j, "system_id", ctx);
  const auto raw = j.contains("raw") && j["raw"].is_object() ? j["raw"] : nlohmann::json::object();
  if (!j.contains("normalized") || !j["normalized"].is_object()) ctx.fail("missing object field 'normalized'");
  const auto& norm = j["normalized"];
  for (const auto& f : kFields) {
    std::optional<double> n = detail::optional_number(norm, f.name, ctx);
    std::optional<double> rv = detail::optional_number(raw, f.name, ctx);
    if (!n && std::string_view(f.name) == "s_fact") {
      if (auto pct = detail::optional_number(norm, "s_fact_percent", ctx)) {
        n = *pct / 100.0;
        if (!rv) rv = *pct / 100.0;
      }
    }
    if (n) {
      if (*n < 0.0 || *n > 1.0) ctx.fail(std::string("normalized ") + f.name + " outside [0,1]");
      r.scores.*f.member = Score{rv.value_or(*n), *n};
    }
  }
  r.scores.text = detail::optional_number(j, "s_text", ctx);
  if (j.contains("out_of_range") && j["out_of_range"].is_number_unsigned()) {
    r.out_of_range = j["out_of_range"].get<std::size_t>();
  }
  if (j.contains("warnings") && j["warnings"].is_array()) {
    for (const auto& w : j["warnings"]) {
      if (w.is_string()) r.warnings.push_back(w.get<std::string>());
    }
  }
  if (j.contains("error") && j["error"].is_object()) {
    r.error_code = j["error"].value("code", "Unknown");
    r.error_message = j["error"].value("message", "");
  } else if (j.value("status", "ok") == "failed") {
    r.error_code = "Unknown";
  }
  if (j.contains("audit") && j["audit"].is_object()) {
    const auto& a = j["audit"];
    if (a.contains("facts") && a["facts"].is_array()) {
      for (const auto& f : a["facts"]) r.facts.push_back({f.value("text", ""), f.value("supported", false)});
    }
    if (a.contains("rationales") && a["rationales"].is_object()) {
      for (const auto& [k, v] : a["rationales"].items()) {
        if (v.is_string()) r.rationales[k] = v.get<std::string>();
      }
    }
  }
  return r;
}

}  // namespace

UnitScoreRecord parse_score_record(const std::string& line, const std::string& where) {
  const std::filesystem::path origin(where);
  detail::RecordContext ctx{&origin, 1};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    ctx.fail(std::string("malformed JSON: ") + e.what());
  }
  return record_from_json(j, ctx);
}

std::string format_scores(std::span<const UnitScoreRecord> records, const OutputMetadata& meta) {
  std::vector<const UnitScoreRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->scores.key < b->scores.key; });
  std::string out = meta.jsonl_header() + "\n";
  for (const auto* r : sorted) out += format_score_record(*r) + "\n";
  return out;
}

void write_scores(const std::filesystem::path& path, std::span<const UnitScoreRecord> records,
                  const OutputMetadata& meta) {
  write_file_atomic(path, format_scores(records, meta));
}

std::vector<UnitScoreRecord> load_scores(const std::filesystem::path& path) {
  std::vector<UnitScoreRecord> out;
  detail::for_each_record(path, [&](const nlohmann::json& j, const detail::RecordContext& ctx) {
    out.push_back(record_from_json(j, ctx));
  });
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.scores.key < b.scores.key; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].scores.key == out[i - 1].scores.key) {
      throw Error(ErrorCode::SchemaError, path.string() + ": duplicate unit " + out[i].scores.key.to_string(),
                  path.string());
    }
  }
  return out;
}

CalibrationRows build_calibration_rows(std::span<const UnitScoreRecord> records,
                                       std::span<const HumanAnnotation> annotations) {
  std::map<UnitKey, const HumanAnnotation*> index;
  for (const auto& a : annotations) index.emplace(a.key(), &a);
  CalibrationRows out;
  for (const auto& r : records) {
    const auto& s = r.scores;
    auto it = index.find(s.key);
    if (it == index.end()) {
      out.unannotated.push_back(s.key);
      continue;
    }
    if (!s.complete()) {
      out.absent_pillars.push_back(s.key);
      continue;
    }
    CalibrationRow row;
    row.key = s.key;
    row.s_fact = s.fact->normalized;
    row.s_rel = s.rel->normalized;
    row.s_coh = s.coh->normalized;
    row.s_flu = s.flu->normalized;
    row.s_relevance = s.relevance->normalized;
    row.s_diversity = s.diversity->normalized;
    row.overall = it->second->overall;
    out.rows.push_back(row);
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  return out;
}

}  // namespace mmeval
