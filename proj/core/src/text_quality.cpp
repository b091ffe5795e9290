#include "mmeval/text_quality.hpp"

#include <cmath>
#include <optional>
#include <regex>
#include <sstream>

#include <json.hpp>

#include "mmeval/error.hpp"
#include "mmeval/hashing.hpp"
#include "text_util.hpp"

namespace mmeval {

std::string_view to_string(TextDimensionName name) {
  switch (name) {
    case TextDimensionName::Relevance: return "relevance";
    case TextDimensionName::Coherence: return "coherence";
    case TextDimensionName::Fluency: return "fluency";
  }
  return "unknown";
}

const std::string& TextDimension::prompt_template(const PromptTemplates& prompts) const {
  switch (name) {
    case TextDimensionName::Relevance: return prompts.relevance;
    case TextDimensionName::Coherence: return prompts.coherence;
    case TextDimensionName::Fluency: return prompts.fluency;
  }
  return prompts.relevance;
}

TextWeights::TextWeights(double fact, double rel, double coh, double flu) : w_{fact, rel, coh, flu} {
  double sum = 0.0;
  for (double w : w_) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::InvalidArgument, "text weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "text weights must sum to 1, got " + std::to_string(sum));
  }
}

TextWeights TextWeights::normalized(double fact, double rel, double coh, double flu) {
  const double sum = fact + rel + coh + flu;
  if (!(sum > 0.0)) throw Error(ErrorCode::AllZero, "text weights sum to zero");
  return TextWeights(fact / sum, rel / sum, coh / sum, flu / sum);
}

TextWeights TextWeights::shipped_defaults() {
  const auto& p = kPublishedTextWeights;
  return normalized(p[0], p[1], p[2], p[3]);
}

double parse_form_score(const std::string& response) {
  static const std::regex kField(R"((?:score|rating)\s*\**\s*[:=]\s*\**\s*(-?\d+(?:\.\d+)?))", std::regex::icase);
  std::optional<double> value;
  for (std::sregex_iterator it(response.begin(), response.end(), kField), end; it != end; ++it) {
    value = std::stod((*it)[1].str());
  }
  if (!value) {
    const auto t = std::string(detail::trim(response));
    static const std::regex kBare(R"(-?\d+(?:\.\d+)?)");
    if (std::regex_match(t, kBare)) value = std::stod(t);
  }
  if (!value) throw Error(ErrorCode::MalformedResponse, "no score field in response: " + response.substr(0, 200));
  return *value;
}

double judge_dimension(const std::string& summary_text, const std::string& source_text, const TextDimension& dim,
                       const JudgeHandle& judge, const PromptTemplates& prompts, OutOfRangeCounter* counter,
                       std::size_t source_budget) {
  auto fmt = [](double v) {
    std::ostringstream os;
    os << v;
    return os.str();
  };
  const auto prompt = render(dim.prompt_template(prompts), {{"summary", summary_text},
                                                           {"source", truncate_source(source_text, source_budget)},
                                                           {"scale_min", fmt(dim.scale.lower)},
                                                           {"scale_max", fmt(dim.scale.upper)}});
  return clamp_to(parse_form_score(judge.ask(prompt)), dim.scale, counter);
}

double compose_text_score(double s_fact, double s_rel, double s_coh, double s_flu, const TextWeights& w) {
  for (double s : {s_fact, s_rel, s_coh, s_flu}) {
    if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::InvalidArgument, "text sub-scores must lie in [0,1]");
  }
  return w.fact() * s_fact + w.rel() * s_rel + w.coh() * s_coh + w.flu() * s_flu;
}

TextWeights load_text_weights(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file_bytes(path));
    return TextWeights(doc.at("fact").get<double>(), doc.at("rel").get<double>(), doc.at("coh").get<double>(),
                       doc.at("flu").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaError, path.string() + ": " + e.what(), path.string());
  }
}

void save_text_weights(const TextWeights& w, const std::filesystem::path& path) {
  nlohmann::json doc{{"fact", w.fact()}, {"rel", w.rel()}, {"coh", w.coh()}, {"flu", w.flu()}};
  write_file_atomic(path, doc.dump(2) + "\n");
}

}  // namespace mmeval
