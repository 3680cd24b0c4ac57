#include "vioscan/types.hpp"

#include <algorithm>
#include <cctype>

#include "vioscan/text.hpp"

namespace vioscan {

std::string_view to_string(EntityKind kind) {
  switch (kind) {
    case EntityKind::Law: return "LAW";
    case EntityKind::Violation: return "VIOLATION";
    case EntityKind::ViolatedBy: return "VIOLATED BY";
    case EntityKind::ViolatedOn: return "VIOLATED ON";
  }
  return "";
}

std::string_view tag_name(EntityKind kind) {
  switch (kind) {
    case EntityKind::Law: return "LAW";
    case EntityKind::Violation: return "VIOLATION";
    case EntityKind::ViolatedBy: return "VIOLATED_BY";
    case EntityKind::ViolatedOn: return "VIOLATED_ON";
  }
  return "";
}

std::optional<EntityKind> parse_entity_kind(std::string_view s) {
  std::string norm(s);
  std::replace(norm.begin(), norm.end(), ' ', '_');
  for (EntityKind k : kAllEntityKinds) {
    if (norm == tag_name(k)) return k;
  }
  return std::nullopt;
}

std::string_view to_string(NliLabel label) {
  switch (label) {
    case NliLabel::Entailment: return "entailed";
    case NliLabel::Contradiction: return "contradict";
    case NliLabel::Neutral: return "neutral";
  }
  return "";
}

std::optional<NliLabel> parse_nli_label(std::string_view s) {
  const std::string lower = text::to_lower(text::trim(s));
  if (lower == "entailed" || lower == "entailment") return NliLabel::Entailment;
  if (lower == "contradict" || lower == "contradiction") return NliLabel::Contradiction;
  if (lower == "neutral") return NliLabel::Neutral;
  return std::nullopt;
}

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::Generated: return "generated";
    case Provenance::Human: return "human";
    case Provenance::Unknown: return "unknown";
  }
  return "unknown";
}

Provenance parse_provenance(std::string_view s) {
  const std::string lower = text::to_lower(text::trim(s));
  if (lower == "generated" || lower == "machine" || lower == "machine-generated" ||
      lower == "synthetic") {
    return Provenance::Generated;
  }
  if (lower == "human" || lower == "human-written" || lower == "real") return Provenance::Human;
  return Provenance::Unknown;
}

namespace {

std::string squash(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c == ' ' || c == '_' || c == '-') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

LegalDomain::LegalDomain(Kind kind) : kind_(kind) {}

LegalDomain LegalDomain::other(std::string name) {
  LegalDomain d;
  d.kind_ = Kind::Other;
  d.other_ = std::move(name);
  return d;
}

LegalDomain LegalDomain::parse(std::string_view s) {
  const std::string key = squash(s);
  if (key == "consumerprotection") return LegalDomain(Kind::ConsumerProtection);
  if (key == "privacy") return LegalDomain(Kind::Privacy);
  if (key == "tcpa") return LegalDomain(Kind::Tcpa);
  if (key == "wage") return LegalDomain(Kind::Wage);
  return other(std::string(text::trim(s)));
}

std::string LegalDomain::name() const {
  switch (kind_) {
    case Kind::ConsumerProtection: return "Consumer Protection";
    case Kind::Privacy: return "Privacy";
    case Kind::Tcpa: return "TCPA";
    case Kind::Wage: return "Wage";
    case Kind::Other: return other_;
  }
  return other_;
}

}  // namespace vioscan
