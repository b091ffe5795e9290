#include "mmeval/diversity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "jsonl.hpp"
#include "mmeval/error.hpp"

namespace mmeval {

EmbeddingMatrix::EmbeddingMatrix(Matrix values, std::string model_name)
    : values_(std::move(values)), model_name_(std::move(model_name)) {
  if (values_.rows() == 0 || values_.cols() == 0) {
    throw Error(ErrorCode::InvalidArgument, "embedding matrix needs at least one non-empty row");
  }
  for (double v : values_.data()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "embedding has non-finite entries");
  }
}

EmbeddingMatrix EmbeddingMatrix::from_rows(const std::vector<std::vector<double>>& rows, std::string model_name) {
  if (rows.empty()) throw Error(ErrorCode::InvalidArgument, "embedding matrix needs at least one row");
  for (const auto& r : rows) {
    if (r.size() != rows.front().size()) {
      throw Error(ErrorCode::EmbeddingDimensionMismatch, "embedding rows of unequal length");
    }
  }
  return EmbeddingMatrix(Matrix::from_rows(rows), std::move(model_name));
}

EmbeddingMatrix center_rows(const EmbeddingMatrix& f) {
  const auto& in = f.values();
  const std::size_t n = in.rows();
  const std::size_t d = in.cols();
  Matrix out(n, d);
  for (std::size_t c = 0; c < d; ++c) {
    bool constant = true;
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      sum += in(r, c);
      constant = constant && in(r, c) == in(0, c);
    }
    const double mean = constant ? in(0, c) : sum / static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) out(r, c) = in(r, c) - mean;
  }
  return EmbeddingMatrix(std::move(out), f.model_name());
}

Spectrum covariance_spectrum(const EmbeddingMatrix& centered, std::size_t k_max) {
  if (k_max == 0) throw Error(ErrorCode::InvalidArgument, "k_max must be positive");
  Spectrum out;
  out.k_max = k_max;
  const auto& x = centered.values();
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  if (n < 2) return out;

  const double divisor = static_cast<double>(n - 1);
  Matrix s;
  if (n < d) {
    s = Matrix(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < d; ++k) dot += x(i, k) * x(j, k);
        s(i, j) = s(j, i) = dot / divisor;
      }
    }
  } else {
    s = Matrix(d, d);
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) {
        double dot = 0.0;
        for (std::size_t r = 0; r < n; ++r) dot += x(r, a) * x(r, b);
        s(a, b) = s(b, a) = dot / divisor;
      }
    }
  }

  auto eig = symmetric_eigenvalues(s);
  for (auto& v : eig) v = std::max(v, 0.0);
  std::sort(eig.begin(), eig.end(), std::greater<>());
  if (eig.empty() || !(eig.front() > 0.0)) return out;
  const double cutoff = kEigenRelativeCutoff * eig.front();
  for (double v : eig) {
    if (v < cutoff || out.eigenvalues.size() == k_max) break;
    out.eigenvalues.push_back(v);
  }
  return out;
}

double truncated_entropy(const Spectrum& s) {
  double total = 0.0;
  for (double v : s.eigenvalues) total += v;
  if (!(total > 0.0)) return 0.0;
  double h = 0.0;
  for (double v : s.eigenvalues) {
    const double p = v / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

DiversityResult diversity_from_embeddings(const EmbeddingMatrix& f, std::size_t k_max, OutOfRangeCounter* counter) {
  DiversityResult r;
  r.raw = truncated_entropy(covariance_spectrum(center_rows(f), k_max));
  r.normalized = normalize_score(r.raw, bounds::kDiversity, counter);
  return r;
}

DiversityResult diversity_score(const std::vector<std::string>& images, const JudgeHandle& embedder,
                                std::size_t k_max, OutOfRangeCounter* counter) {
  if (images.empty()) throw Error(ErrorCode::NoImages, "diversity is undefined for an empty image selection");
  if (embedder.gateway == nullptr) throw Error(ErrorCode::InvalidArgument, "embedder handle has no gateway");
  auto rows = embedder.gateway->embed_images(images, embedder.model);
  return diversity_from_embeddings(EmbeddingMatrix::from_rows(rows, embedder.model), k_max, counter);
}

EmbeddingStore EmbeddingStore::load(const std::filesystem::path& path) {
  EmbeddingStore store;
  detail::for_each_record(path, [&](const detail::json& rec, const detail::RecordContext& ctx) {
    const auto image_id = detail::require_string(rec, "image_id", ctx);
    const auto article_id = detail::optional_string(rec, "article_id", ctx);
    auto it = rec.find("embedding");
    if (it == rec.end() || !it->is_array() || it->empty()) ctx.fail("missing or empty 'embedding' array");
    std::vector<double> vec;
    vec.reserve(it->size());
    for (const auto& v : *it) {
      if (!v.is_number()) ctx.fail("embedding entries must be numeric");
      vec.push_back(v.get<double>());
    }
    if (store.dim_ && *store.dim_ != vec.size()) {
      throw Error(ErrorCode::EmbeddingDimensionMismatch,
                  ctx.where() + ": embedding length " + std::to_string(vec.size()) + " differs from " +
                      std::to_string(*store.dim_));
    }
    store.dim_ = vec.size();
    bool inserted = article_id ? store.scoped_.emplace(std::pair{*article_id, image_id}, std::move(vec)).second
                               : store.bare_.emplace(image_id, std::move(vec)).second;
    if (!inserted) ctx.fail("duplicate embedding for image " + image_id);
  });
  return store;
}

std::optional<std::vector<double>> EmbeddingStore::find(const std::string& article_id,
                                                        const std::string& image_id) const {
  if (auto it = scoped_.find({article_id, image_id}); it != scoped_.end()) return it->second;
  if (auto it = bare_.find(image_id); it != bare_.end()) return it->second;
  return std::nullopt;
}

}  // namespace mmeval
