#include "vioscan/bio.hpp"

#include <algorithm>

#include "vioscan/error.hpp"
#include "vioscan/text.hpp"

namespace vioscan::bio {

std::string_view to_string(RepairPolicy p) {
  switch (p) {
    case RepairPolicy::Strict: return "strict";
    case RepairPolicy::PromoteInsideToBegin: return "promote";
    case RepairPolicy::DropDangling: return "drop";
  }
  return "";
}

RepairPolicy parse_repair_policy(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "strict") return RepairPolicy::Strict;
  if (lower == "promote" || lower == "promote-inside-to-begin") {
    return RepairPolicy::PromoteInsideToBegin;
  }
  if (lower == "drop" || lower == "drop-dangling") return RepairPolicy::DropDangling;
  throw Error(ErrorKind::InvalidArgument,
              "unknown repair policy '" + std::string(s) + "' (strict|promote|drop)");
}

BioTag parse_tag(std::string_view s) {
  if (s == "O") return BioTag::outside();
  if (s.size() > 2 && s[1] == '-' && (s[0] == 'B' || s[0] == 'I')) {
    if (auto kind = parse_entity_kind(s.substr(2))) {
      return s[0] == 'B' ? BioTag::begin(*kind) : BioTag::inside(*kind);
    }
  }
  throw Error(ErrorKind::Tag, "invalid tag '" + std::string(s) + "'");
}

std::string format_tag(const BioTag& tag) {
  switch (tag.prefix()) {
    case Prefix::Outside: return "O";
    case Prefix::Begin: return "B-" + std::string(tag_name(tag.kind()));
    case Prefix::Inside: return "I-" + std::string(tag_name(tag.kind()));
  }
  return "O";
}

TagSequence parse_tags(std::span<const std::string> strings) {
  TagSequence out;
  out.reserve(strings.size());
  for (const auto& s : strings) out.push_back(parse_tag(s));
  return out;
}

std::vector<std::string> format_tags(std::span<const BioTag> tags) {
  std::vector<std::string> out;
  out.reserve(tags.size());
  for (const auto& t : tags) out.push_back(format_tag(t));
  return out;
}

namespace {

struct OpenSpan {
  EntityKind kind;
  std::size_t start;
};

}  // namespace

std::vector<EntitySpan> decode_spans(std::span<const BioTag> tags, RepairPolicy policy) {
  std::vector<EntitySpan> spans;
  std::optional<OpenSpan> open;
  auto close = [&](std::size_t end) {
    if (open) spans.push_back(EntitySpan{open->kind, open->start, end, std::nullopt});
    open.reset();
  };

  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag& t = tags[i];
    switch (t.prefix()) {
      case Prefix::Outside:
        close(i);
        break;
      case Prefix::Begin:
        close(i);
        open = OpenSpan{t.kind(), i};
        break;
      case Prefix::Inside:
        if (open && open->kind == t.kind()) break;
        close(i);
        if (policy == RepairPolicy::Strict) {
          throw Error(ErrorKind::Scheme, "dangling " + format_tag(t) + " at token " +
                                             std::to_string(i));
        }
        if (policy == RepairPolicy::PromoteInsideToBegin) open = OpenSpan{t.kind(), i};
        break;
    }
  }
  close(tags.size());
  return spans;
}

TagSequence encode_spans(std::span<const EntitySpan> spans, std::size_t length) {
  std::vector<EntitySpan> sorted(spans.begin(), spans.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  TagSequence tags(length, BioTag::outside());
  std::size_t covered = 0;
  for (const auto& s : sorted) {
    if (s.start >= s.end || s.end > length) {
      throw Error(ErrorKind::Span, "span [" + std::to_string(s.start) + "," +
                                       std::to_string(s.end) + ") invalid for length " +
                                       std::to_string(length));
    }
    if (s.start < covered) {
      throw Error(ErrorKind::Span, "overlapping span at [" + std::to_string(s.start) + "," +
                                       std::to_string(s.end) + ")");
    }
    tags[s.start] = BioTag::begin(s.kind);
    for (std::size_t i = s.start + 1; i < s.end; ++i) tags[i] = BioTag::inside(s.kind);
    covered = s.end;
  }
  return tags;
}

TagSequence repair(std::span<const BioTag> tags, RepairPolicy policy) {
  const auto spans = decode_spans(tags, policy);
  return encode_spans(spans, tags.size());
}

std::vector<SchemeViolation> validate(std::span<const BioTag> tags) {
  std::vector<SchemeViolation> out;
  std::optional<EntityKind> open;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const BioTag& t = tags[i];
    if (t.is_outside()) {
      open.reset();
    } else if (t.prefix() == Prefix::Begin) {
      open = t.kind();
    } else if (!open || *open != t.kind()) {
      std::string why = open ? format_tag(t) + " follows a " + std::string(tag_name(*open)) +
                                   " span"
                             : format_tag(t) + " does not continue any span";
      out.push_back(SchemeViolation{i, std::move(why)});
      open = t.kind();
    }
  }
  return out;
}

}  // namespace vioscan::bio
