#include "mmeval/factuality.hpp"

#include <future>
#include <numeric>

#include "mmeval/error.hpp"
#include "text_util.hpp"

namespace mmeval {

AtomicFact::AtomicFact(std::size_t index, std::string text) : index_(index), text_(std::move(text)) {
  if (text_.empty()) throw Error(ErrorCode::InvalidArgument, "atomic fact text must be non-empty");
}

void AtomicFact::set_verdict(bool supported) {
  if (verdict_) throw Error(ErrorCode::InvalidArgument, "verdict already set for fact " + std::to_string(index_));
  verdict_ = supported;
}

std::vector<std::string> parse_fact_list(const std::string& response) {
  std::vector<std::string> facts;
  for (auto line : detail::split_lines(response)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    std::size_t pos = 0;
    if (line[0] == '-' || line[0] == '*' || line.starts_with("\xE2\x80\xA2")) {
      pos = line[0] == '-' || line[0] == '*' ? 1 : 3;
    } else if (std::isdigit(static_cast<unsigned char>(line[0]))) {
      while (pos < line.size() && std::isdigit(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size() || (line[pos] != '.' && line[pos] != ')')) continue;
      ++pos;
    } else {
      continue;
    }
    auto claim = detail::trim(line.substr(pos));
    if (!claim.empty()) facts.emplace_back(claim);
  }
  return facts;
}

std::vector<AtomicFact> decompose_atomic_facts(const std::string& summary_text, const JudgeHandle& judge,
                                               const PromptTemplates& prompts) {
  if (detail::trim(summary_text).empty()) {
    throw Error(ErrorCode::InvalidArgument, "summary text must be non-empty");
  }
  const auto response = judge.ask(render(prompts.atomic_facts, {{"summary", summary_text}}));
  auto claims = parse_fact_list(response);
  if (claims.empty()) throw Error(ErrorCode::NoFactsExtracted, "judge response contains no parsable facts");
  std::vector<AtomicFact> facts;
  facts.reserve(claims.size());
  for (std::size_t i = 0; i < claims.size(); ++i) facts.emplace_back(i, std::move(claims[i]));
  return facts;
}

namespace {

std::optional<bool> leading_token(std::string_view text) {
  auto t = detail::lower(text);
  // Strip decoration such as "**", quotes or brackets around the verdict.
  std::size_t start = t.find_first_not_of(" \t*_\"'`([");
  if (start == std::string::npos) return std::nullopt;
  std::string_view s(t);
  s.remove_prefix(start);
  auto word_ends_at = [&](std::size_t n) { return s.size() == n || !std::isalpha(static_cast<unsigned char>(s[n])); };
  struct Token {
    std::string_view word;
    bool value;
  };
  static constexpr Token kTokens[] = {
      {"not supported", false}, {"unsupported", false}, {"supported", true}, {"false", false}, {"true", true},
  };
  for (const auto& tok : kTokens) {
    if (s.starts_with(tok.word) && word_ends_at(tok.word.size())) return tok.value;
  }
  return std::nullopt;
}

}  // namespace

bool parse_verdict(const std::string& response) {
  std::optional<bool> verdict;
  for (auto line : detail::split_lines(response)) {
    line = detail::trim(line);
    if (line.empty()) continue;
    if (auto v = leading_token(line)) {
      verdict = v;
      continue;
    }
    // "Answer: True", "Verdict - False", "Output: Supported"
    const auto colon = line.find_first_of(":-");
    if (colon != std::string_view::npos && colon < 24) {
      const auto label = detail::lower(detail::trim(line.substr(0, colon)));
      if (label == "answer" || label == "final answer" || label == "verdict" || label == "output" ||
          label == "label" || label == "judgment" || label == "judgement") {
        if (auto v = leading_token(line.substr(colon + 1))) verdict = v;
      }
    }
  }
  if (!verdict) throw Error(ErrorCode::MalformedResponse, "no verdict token in response: " + response.substr(0, 200));
  return *verdict;
}

bool validate_fact(const AtomicFact& fact, const std::string& source_text, const JudgeHandle& judge,
                   const PromptTemplates& prompts, std::size_t source_budget) {
  if (fact.verdict()) {
    throw Error(ErrorCode::InvalidArgument, "fact " + std::to_string(fact.index()) + " already validated");
  }
  const auto source = truncate_source(source_text, source_budget);
  const auto response = judge.ask(render(prompts.fact_validation, {{"fact", fact.text()}, {"source", source}}));
  return parse_verdict(response);
}

double factual_precision(std::span<const bool> verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::NoFacts, "factual precision is undefined without facts");
  const auto supported = std::count(verdicts.begin(), verdicts.end(), true);
  return static_cast<double>(supported) / static_cast<double>(verdicts.size());
}

double factual_precision(const std::vector<bool>& verdicts) {
  if (verdicts.empty()) throw Error(ErrorCode::NoFacts, "factual precision is undefined without facts");
  const auto supported = std::count(verdicts.begin(), verdicts.end(), true);
  return static_cast<double>(supported) / static_cast<double>(verdicts.size());
}

FactualityResult score_factuality(const std::string& summary_text, const std::string& source_text,
                                  const JudgeHandle& judge, const PromptTemplates& prompts,
                                  std::size_t source_budget, std::size_t workers) {
  FactualityResult result;
  result.facts = decompose_atomic_facts(summary_text, judge, prompts);
  std::vector<bool> verdicts(result.facts.size());

  if (workers <= 1) {
    for (std::size_t i = 0; i < result.facts.size(); ++i) {
      verdicts[i] = validate_fact(result.facts[i], source_text, judge, prompts, source_budget);
    }
  } else {
    std::vector<std::future<bool>> pending;
    for (const auto& fact : result.facts) {
      pending.push_back(std::async(std::launch::async, [&, &fact = fact] {
        return validate_fact(fact, source_text, judge, prompts, source_budget);
      }));
    }
    for (std::size_t i = 0; i < pending.size(); ++i) verdicts[i] = pending[i].get();
  }
  for (std::size_t i = 0; i < result.facts.size(); ++i) result.facts[i].set_verdict(verdicts[i]);
  result.precision = factual_precision(verdicts);
  return result;
}

}  // namespace mmeval
