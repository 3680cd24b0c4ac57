#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace vioscan::text {

bool is_valid_utf8(std::string_view s);
std::size_t codepoint_count(std::string_view s);

// Whitespace split, then leading/trailing ASCII punctuation detached as
// one-character tokens. Inner punctuation ("won't", "U.S") stays attached.
std::vector<std::string> tokenize(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);
std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

// Stable across platforms, for seeding.
std::uint64_t fnv1a(std::string_view s);
std::uint64_t splitmix64(std::uint64_t x);

// The engine's output sequence is fixed by the standard but the standard
// distributions are not, so bounded draws use rejection sampling directly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next() { return engine_(); }
  // Uniform in [0, bound), bound > 0.
  std::uint64_t below(std::uint64_t bound);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace vioscan::text
