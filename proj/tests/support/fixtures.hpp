#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace fixture {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

struct DatasetFiles {
  std::filesystem::path articles;
  std::filesystem::path candidates;
  std::filesystem::path annotations;
};

struct DatasetOptions {
  std::size_t articles = 10;
  std::size_t systems = 3;
  std::size_t annotators = 2;
  // The first unit selects no images.
  bool zero_image_unit = false;
  std::uint64_t seed = 7;
};

// Articles with three local image files each, extractive candidate
// summaries (some with an unsupported sentence) and annotations whose
// overall rating tracks the share of supported sentences.
DatasetFiles write_dataset(const std::filesystem::path& dir, const DatasetOptions& options = {});

}  // namespace fixture
