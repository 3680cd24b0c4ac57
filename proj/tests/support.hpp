#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "vioscan/bio.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/types.hpp"

namespace support {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("vioscan-test-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  fs::path file(const std::string& name, const std::string& contents) const {
    const fs::path p = path_ / name;
    std::ofstream(p, std::ios::binary) << contents;
    return p;
  }
  fs::path path(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

using Triple = std::tuple<int, std::size_t, std::size_t>;  // kind index, start, end

// Random non-overlapping spans over n tokens, built directly rather than by
// decoding tags so they can serve as an oracle.
inline std::vector<vioscan::bio::EntitySpan> random_spans(std::mt19937_64& rng, std::size_t n) {
  std::vector<vioscan::bio::EntitySpan> out;
  std::size_t i = 0;
  while (i < n) {
    if (rng() % 3 == 0) {
      const std::size_t len = 1 + rng() % std::min<std::size_t>(4, n - i);
      const auto kind = vioscan::kAllEntityKinds[rng() % 4];
      out.push_back({kind, i, i + len, std::nullopt});
      i += len;
    } else {
      ++i;
    }
  }
  return out;
}

inline std::set<Triple> triples(const std::vector<vioscan::bio::EntitySpan>& spans) {
  std::set<Triple> out;
  for (const auto& s : spans) out.insert({static_cast<int>(vioscan::index_of(s.kind)), s.start, s.end});
  return out;
}

// Arbitrary tag soup, usually ill-formed.
inline vioscan::bio::TagSequence random_tags(std::mt19937_64& rng, std::size_t n) {
  using vioscan::bio::BioTag;
  vioscan::bio::TagSequence t;
  for (std::size_t i = 0; i < n; ++i) {
    const auto kind = vioscan::kAllEntityKinds[rng() % 4];
    switch (rng() % 3) {
      case 0: t.push_back(BioTag::outside()); break;
      case 1: t.push_back(BioTag::begin(kind)); break;
      default: t.push_back(BioTag::inside(kind)); break;
    }
  }
  return t;
}

// Straight-line decoder for the two lenient policies, kept independent of
// bio::decode_spans.
inline std::set<Triple> reference_decode(const vioscan::bio::TagSequence& tags,
                                         vioscan::bio::RepairPolicy policy) {
  std::set<Triple> out;
  std::optional<std::pair<int, std::size_t>> open;  // kind, start
  auto close = [&](std::size_t end) {
    if (open) out.insert({open->first, open->second, end});
    open.reset();
  };
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& t = tags[i];
    const int k = static_cast<int>(vioscan::index_of(t.kind()));
    if (t.is_outside()) {
      close(i);
    } else if (t.prefix() == vioscan::bio::Prefix::Begin) {
      close(i);
      open.emplace(k, i);
    } else if (!(open && open->first == k)) {
      close(i);
      if (policy == vioscan::bio::RepairPolicy::PromoteInsideToBegin) open.emplace(k, i);
    }
  }
  close(tags.size());
  return out;
}

inline vioscan::corpus::NerRecord ner_record(std::string id, std::vector<std::string> tokens,
                                             vioscan::bio::TagSequence tags) {
  vioscan::corpus::NerRecord r;
  r.id = std::move(id);
  r.tokens = std::move(tokens);
  r.tags = std::move(tags);
  return r;
}

}  // namespace support
