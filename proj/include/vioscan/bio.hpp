#pragma once

// IOB2 tagging over the four entity kinds: parsing, validation, span
// decoding with configurable repair, and the inverse encoding.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vioscan/types.hpp"

namespace vioscan::bio {

enum class Prefix { Outside, Begin, Inside };

class BioTag {
 public:
  constexpr BioTag() = default;
  static constexpr BioTag outside() { return BioTag{}; }
  static constexpr BioTag begin(EntityKind k) { return BioTag{Prefix::Begin, k}; }
  static constexpr BioTag inside(EntityKind k) { return BioTag{Prefix::Inside, k}; }

  constexpr Prefix prefix() const { return prefix_; }
  constexpr bool is_outside() const { return prefix_ == Prefix::Outside; }
  // Meaningless for Outside tags.
  constexpr EntityKind kind() const { return kind_; }

  friend constexpr bool operator==(const BioTag& a, const BioTag& b) {
    if (a.prefix_ != b.prefix_) return false;
    return a.prefix_ == Prefix::Outside || a.kind_ == b.kind_;
  }

 private:
  constexpr BioTag(Prefix p, EntityKind k) : prefix_(p), kind_(k) {}
  Prefix prefix_ = Prefix::Outside;
  EntityKind kind_ = EntityKind::Law;
};

using TagSequence = std::vector<BioTag>;

struct EntitySpan {
  EntityKind kind = EntityKind::Law;
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::optional<double> confidence;

  // Identity is (kind, start, end); confidence does not participate.
  friend bool operator==(const EntitySpan& a, const EntitySpan& b) {
    return a.kind == b.kind && a.start == b.start && a.end == b.end;
  }
};

enum class RepairPolicy { Strict, PromoteInsideToBegin, DropDangling };

std::string_view to_string(RepairPolicy p);
RepairPolicy parse_repair_policy(std::string_view s);

// Grammar: O | (B|I) "-" KIND. Prefixes are case-sensitive; KIND accepts the
// underscore or the space form. Throws Error{Tag} naming the input.
BioTag parse_tag(std::string_view s);
std::string format_tag(const BioTag& tag);

TagSequence parse_tags(std::span<const std::string> strings);
std::vector<std::string> format_tags(std::span<const BioTag> tags);

// Maximal spans. An Inside tag that does not continue an open span of the same
// kind is dangling: Strict throws Error{Scheme} with the token index,
// PromoteInsideToBegin starts a new span there, DropDangling treats it as O.
std::vector<EntitySpan> decode_spans(std::span<const BioTag> tags, RepairPolicy policy);

// Inverse of decode_spans under Strict. Spans may be given in any order but
// must be in range and non-overlapping; otherwise throws Error{Span}.
TagSequence encode_spans(std::span<const EntitySpan> spans, std::size_t length);

// decode then re-encode: the result is always well-formed IOB2.
TagSequence repair(std::span<const BioTag> tags, RepairPolicy policy);

struct SchemeViolation {
  std::size_t index = 0;
  std::string description;
};

// Empty iff decode_spans(tags, Strict) succeeds. After a dangling tag the
// scan continues as if the tag had been promoted, so a run of mismatched
// Inside tags is reported once.
std::vector<SchemeViolation> validate(std::span<const BioTag> tags);

}  // namespace vioscan::bio
