#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include <json.hpp>

#include "mmeval/random.hpp"

namespace fixture {

namespace {
std::atomic<int> counter{0};
}

TempDir::TempDir(const std::string& tag) {
  path_ = std::filesystem::temp_directory_path() /
          ("mmeval-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DatasetFiles write_dataset(const std::filesystem::path& dir, const DatasetOptions& o) {
  using nlohmann::json;
  mmeval::Rng rng(o.seed);
  DatasetFiles files{dir / "articles.jsonl", dir / "candidates.jsonl", dir / "annotations.jsonl"};
  std::string articles, candidates, annotations;
  bool zero_done = false;
  for (std::size_t a = 0; a < o.articles; ++a) {
    const std::string aid = "art" + std::to_string(100 + a);
    std::vector<std::string> sents;
    for (int k = 0; k < 6; ++k) {
      sents.push_back("Article " + aid + " reports event " + std::to_string(k) + " in town " +
                      std::to_string((a * 7 + k) % 11) + ".");
    }
    std::string source;
    for (const auto& s : sents) source += (source.empty() ? "" : " ") + s;
    json images = json::array();
    for (int k = 0; k < 3; ++k) {
      const auto img = dir / "images" / (aid + "_" + std::to_string(k) + ".png");
      write_text(img, "PNG-bytes-" + aid + "-" + std::to_string(k));
      images.push_back({{"image_id", "img" + std::to_string(k)}, {"locator", img.lexically_relative(dir).string()}});
    }
    articles += json{{"article_id", aid}, {"source_text", source}, {"images", images}}.dump() + "\n";

    for (std::size_t s = 0; s < o.systems; ++s) {
      const std::string sid = "sys" + std::string(1, static_cast<char>('A' + s));
      std::vector<std::string> chosen;
      const std::size_t count = 2 + mmeval::uniform_index(rng, 3);
      std::size_t supported = 0;
      for (std::size_t c = 0; c < count; ++c) {
        if (mmeval::uniform01(rng) < 0.3) {
          chosen.push_back("A spokesperson denied claim " + std::to_string(c) + " about " + aid + ".");
        } else {
          chosen.push_back(sents[mmeval::uniform_index(rng, sents.size())]);
          ++supported;
        }
      }
      std::string summary;
      for (const auto& c : chosen) summary += (summary.empty() ? "" : " ") + c;
      json selected = json::array();
      if (!(o.zero_image_unit && !zero_done)) {
        const std::size_t nimg = 1 + mmeval::uniform_index(rng, 3);
        for (std::size_t k = 0; k < nimg; ++k) selected.push_back("img" + std::to_string(k));
      }
      zero_done = true;
      candidates += json{{"article_id", aid}, {"system_id", sid}, {"summary_text", summary},
                         {"selected_image_ids", selected}}.dump() + "\n";

      const double precision = static_cast<double>(supported) / static_cast<double>(count);
      for (std::size_t r = 0; r < o.annotators; ++r) {
        auto rating = [&](double base) {
          const double v = base + (mmeval::uniform01(rng) - 0.5);
          return std::clamp(std::round(v), 1.0, 5.0);
        };
        json ann{{"article_id", aid},
                 {"system_id", sid},
                 {"annotator_id", "ann" + std::to_string(r)},
                 {"coherence", rating(3.5)},
                 {"consistency", rating(1.0 + 4.0 * precision)},
                 {"fluency", rating(4.0)},
                 {"relevance", rating(3.0)},
                 {"image_set_quality", rating(3.0)},
                 {"text_image_relevance", rating(3.0)},
                 {"overall", rating(1.0 + 3.5 * precision)}};
        annotations += ann.dump() + "\n";
      }
    }
  }
  write_text(files.articles, articles);
  write_text(files.candidates, candidates);
  write_text(files.annotations, annotations);
  return files;
}

}  // namespace fixture
