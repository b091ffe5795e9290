#include "mmeval/dataset.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "jsonl.hpp"
#include "mmeval/gateway.hpp"

namespace mmeval {

using detail::json;
using detail::RecordContext;

namespace {
// Total order on every field so that summation order, and therefore the
// averaged doubles, never depends on input order.
bool annotation_less(const HumanAnnotation& x, const HumanAnnotation& y) {
  auto fields = [](const HumanAnnotation& a) {
    return std::tie(a.article_id, a.system_id, a.annotator_id, a.coherence, a.consistency, a.fluency,
                    a.relevance, a.image_set_quality, a.text_image_relevance, a.overall);
  };
  return fields(x) < fields(y);
}
}  // namespace

const ImageRef* Article::find_image(const std::string& image_id) const {
  for (const auto& img : images) {
    if (img.image_id == image_id) return &img;
  }
  return nullptr;
}

const Article* Dataset::find_article(const std::string& article_id) const {
  auto it = std::lower_bound(articles.begin(), articles.end(), article_id,
                             [](const Article& a, const std::string& id) { return a.article_id < id; });
  return (it != articles.end() && it->article_id == article_id) ? &*it : nullptr;
}

const HumanAnnotation* Dataset::find_annotation(const UnitKey& key) const {
  auto it = std::lower_bound(annotations.begin(), annotations.end(), key,
                             [](const HumanAnnotation& a, const UnitKey& k) { return a.key() < k; });
  return (it != annotations.end() && it->key() == key) ? &*it : nullptr;
}

std::vector<EvaluationUnit> Dataset::units() const {
  std::vector<EvaluationUnit> out;
  out.reserve(candidates.size());
  for (const auto& cand : candidates) {
    const Article* article = find_article(cand.article_id);
    if (article == nullptr) {
      throw Error(ErrorCode::MissingReference, "candidate " + cand.key().to_string() + " cites unknown article");
    }
    EvaluationUnit unit{cand.key(), article->source_text, article->images, cand.summary_text, {}};
    for (const auto& id : cand.selected_image_ids) {
      const ImageRef* img = article->find_image(id);
      if (img == nullptr) {
        throw Error(ErrorCode::MissingReference, "candidate " + cand.key().to_string() + " selects unknown image " + id);
      }
      unit.selected_images.push_back(*img);
    }
    out.push_back(std::move(unit));
  }
  return out;
}

std::vector<Article> load_articles(const std::filesystem::path& path) {
  std::vector<Article> articles;
  detail::for_each_record(path, [&](const json& rec, const RecordContext& ctx) {
    Article a;
    a.article_id = detail::require_string(rec, "article_id", ctx);
    a.source_text = detail::require_string(rec, "source_text", ctx);
    if (a.article_id.empty()) ctx.fail("empty article_id");
    if (a.source_text.empty()) ctx.fail("empty source_text for article " + a.article_id);
    auto imgs = rec.find("images");
    if (imgs != rec.end() && !imgs->is_null()) {
      if (!imgs->is_array()) ctx.fail("'images' must be an array");
      std::set<std::string> seen;
      for (const auto& img : *imgs) {
        if (!img.is_object()) ctx.fail("image entry is not an object");
        ImageRef ref;
        ref.image_id = detail::require_string(img, "image_id", ctx);
        ref.locator = detail::require_string(img, "locator", ctx);
        ref.caption = detail::optional_string(img, "caption", ctx);
        if (ref.locator.empty()) ctx.fail("empty locator for image " + ref.image_id);
        if (!is_remote_locator(ref.locator) && std::filesystem::path(ref.locator).is_relative()) {
          ref.locator = (path.parent_path() / ref.locator).lexically_normal().string();
        }
        if (!seen.insert(ref.image_id).second) ctx.fail("duplicate image_id " + ref.image_id);
        a.images.push_back(std::move(ref));
      }
    }
    articles.push_back(std::move(a));
  });
  std::sort(articles.begin(), articles.end(),
            [](const Article& x, const Article& y) { return x.article_id < y.article_id; });
  for (std::size_t i = 1; i < articles.size(); ++i) {
    if (articles[i].article_id == articles[i - 1].article_id) {
      throw Error(ErrorCode::SchemaError, path.string() + ": duplicate article_id " + articles[i].article_id,
                  path.string());
    }
  }
  return articles;
}

std::vector<CandidateSummary> load_candidates(const std::filesystem::path& path) {
  std::vector<CandidateSummary> out;
  detail::for_each_record(path, [&](const json& rec, const RecordContext& ctx) {
    CandidateSummary c;
    c.article_id = detail::require_string(rec, "article_id", ctx);
    c.system_id = detail::require_string(rec, "system_id", ctx);
    c.summary_text = detail::require_string(rec, "summary_text", ctx);
    auto ids = rec.find("selected_image_ids");
    if (ids != rec.end() && !ids->is_null()) {
      if (!ids->is_array()) ctx.fail("'selected_image_ids' must be an array");
      for (const auto& id : *ids) {
        if (!id.is_string()) ctx.fail("selected image id must be a string");
        c.selected_image_ids.push_back(id.get<std::string>());
      }
    }
    out.push_back(std::move(c));
  });
  std::sort(out.begin(), out.end(),
            [](const CandidateSummary& x, const CandidateSummary& y) { return x.key() < y.key(); });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (out[i].key() == out[i - 1].key()) {
      throw Error(ErrorCode::SchemaError, path.string() + ": duplicate candidate " + out[i].key().to_string(),
                  path.string());
    }
  }
  return out;
}

std::vector<HumanAnnotation> load_annotation_rows(const std::filesystem::path& path) {
  std::vector<HumanAnnotation> rows;
  detail::for_each_record(path, [&](const json& rec, const RecordContext& ctx) {
    HumanAnnotation a;
    a.article_id = detail::require_string(rec, "article_id", ctx);
    a.system_id = detail::require_string(rec, "system_id", ctx);
    a.annotator_id = detail::optional_string(rec, "annotator_id", ctx);
    const std::pair<const char*, double*> fields[] = {
        {"coherence", &a.coherence},
        {"consistency", &a.consistency},
        {"fluency", &a.fluency},
        {"relevance", &a.relevance},
        {"image_set_quality", &a.image_set_quality},
        {"text_image_relevance", &a.text_image_relevance},
        {"overall", &a.overall},
    };
    for (const auto& [name, slot] : fields) {
      *slot = detail::require_number(rec, name, ctx);
      if (!(*slot >= 1.0 && *slot <= 5.0)) {
        ctx.fail(std::string("rating '") + name + "' = " + std::to_string(*slot) + " outside [1,5]");
      }
    }
    rows.push_back(std::move(a));
  });
  return rows;
}

std::vector<HumanAnnotation> average_annotations(std::vector<HumanAnnotation> rows) {
  std::sort(rows.begin(), rows.end(), annotation_less);

  std::vector<HumanAnnotation> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i;
    HumanAnnotation acc = rows[i];
    acc.annotator_id.reset();
    acc.coherence = acc.consistency = acc.fluency = acc.relevance = 0.0;
    acc.image_set_quality = acc.text_image_relevance = acc.overall = 0.0;
    for (; j < rows.size() && rows[j].key() == rows[i].key(); ++j) {
      acc.coherence += rows[j].coherence;
      acc.consistency += rows[j].consistency;
      acc.fluency += rows[j].fluency;
      acc.relevance += rows[j].relevance;
      acc.image_set_quality += rows[j].image_set_quality;
      acc.text_image_relevance += rows[j].text_image_relevance;
      acc.overall += rows[j].overall;
    }
    const double n = static_cast<double>(j - i);
    acc.coherence /= n;
    acc.consistency /= n;
    acc.fluency /= n;
    acc.relevance /= n;
    acc.image_set_quality /= n;
    acc.text_image_relevance /= n;
    acc.overall /= n;
    out.push_back(std::move(acc));
    i = j;
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& articles_path,
                     const std::filesystem::path& candidates_path,
                     const std::optional<std::filesystem::path>& annotations_path) {
  Dataset ds;
  ds.articles = load_articles(articles_path);
  ds.candidates = load_candidates(candidates_path);

  for (const auto& cand : ds.candidates) {
    const Article* article = ds.find_article(cand.article_id);
    if (article == nullptr) {
      throw Error(ErrorCode::MissingReference,
                  candidates_path.string() + ": candidate " + cand.key().to_string() + " cites unknown article_id " +
                      cand.article_id,
                  cand.article_id);
    }
    for (const auto& id : cand.selected_image_ids) {
      if (article->find_image(id) == nullptr) {
        throw Error(ErrorCode::MissingReference,
                    candidates_path.string() + ": candidate " + cand.key().to_string() +
                        " selects image not in article: " + id,
                    id);
      }
    }
  }

  if (annotations_path) {
    auto rows = load_annotation_rows(*annotations_path);
    std::set<UnitKey> known;
    for (const auto& cand : ds.candidates) known.insert(cand.key());
    for (const auto& row : rows) {
      if (!known.contains(row.key())) {
        throw Error(ErrorCode::MissingReference,
                    annotations_path->string() + ": annotation cites unknown unit " + row.key().to_string(),
                    row.key().to_string());
      }
    }
    ds.annotator_rows = rows;
    std::sort(ds.annotator_rows.begin(), ds.annotator_rows.end(), annotation_less);
    ds.annotations = average_annotations(std::move(rows));
  }
  return ds;
}

}  // namespace mmeval
