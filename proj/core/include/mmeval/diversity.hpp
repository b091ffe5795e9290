#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mmeval/gateway.hpp"
#include "mmeval/linalg.hpp"
#include "mmeval/normalize.hpp"

namespace mmeval {

inline constexpr std::size_t kDefaultMaxEigen = 20;
inline constexpr double kEigenRelativeCutoff = 1e-10;

// n image embeddings of dimension d (one per row).
class EmbeddingMatrix {
 public:
  // Throws InvalidArgument for n = 0, ragged rows or non-finite entries.
  EmbeddingMatrix(Matrix values, std::string model_name = {});
  static EmbeddingMatrix from_rows(const std::vector<std::vector<double>>& rows, std::string model_name = {});

  std::size_t count() const noexcept { return values_.rows(); }
  std::size_t dim() const noexcept { return values_.cols(); }
  const Matrix& values() const noexcept { return values_; }
  const std::string& model_name() const noexcept { return model_name_; }

 private:
  Matrix values_;
  std::string model_name_;
};

struct Spectrum {
  std::vector<double> eigenvalues;  // non-increasing, all > 0
  std::size_t k_max = kDefaultMaxEigen;
};

// Subtracts column means. A column whose entries are all equal becomes
// exactly zero, so identical images contribute no spurious variance.
EmbeddingMatrix center_rows(const EmbeddingMatrix& f);

// Non-zero eigenvalues of the (n-1)-normalized covariance of centered rows.
// Uses the n x n Gram matrix when n < d, the d x d covariance otherwise.
// Eigenvalues below kEigenRelativeCutoff * lambda_max are dropped; at most
// k_max are kept, largest first.
Spectrum covariance_spectrum(const EmbeddingMatrix& centered, std::size_t k_max = kDefaultMaxEigen);

// Von Neumann entropy (nats) of the normalized spectrum; 0 when empty.
double truncated_entropy(const Spectrum& s);

struct DiversityResult {
  double raw = 0.0;         // entropy, nats
  double normalized = 0.0;  // raw normalized with bounds::kDiversity
};

DiversityResult diversity_from_embeddings(const EmbeddingMatrix& f, std::size_t k_max = kDefaultMaxEigen,
                                          OutOfRangeCounter* counter = nullptr);

// Embeds images through `embedder` (role Embedder) and scores them.
// Throws NoImages for an empty list.
DiversityResult diversity_score(const std::vector<std::string>& images, const JudgeHandle& embedder,
                                std::size_t k_max = kDefaultMaxEigen, OutOfRangeCounter* counter = nullptr);

// Precomputed embeddings, one JSON record per line:
// {"image_id": ..., "article_id": optional, "embedding": [...]}.
// Lookup prefers an (article_id, image_id) match, then a bare image_id.
class EmbeddingStore {
 public:
  static EmbeddingStore load(const std::filesystem::path& path);

  std::optional<std::vector<double>> find(const std::string& article_id, const std::string& image_id) const;
  std::size_t size() const noexcept { return scoped_.size() + bare_.size(); }
  std::optional<std::size_t> dim() const noexcept { return dim_; }

 private:
  std::map<std::pair<std::string, std::string>, std::vector<double>> scoped_;
  std::map<std::string, std::vector<double>> bare_;
  std::optional<std::size_t> dim_;
};

}  // namespace mmeval
