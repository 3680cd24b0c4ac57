#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace vioscan {

// The four legal entity kinds tagged in violation-identification text.
enum class EntityKind { Law = 0, Violation = 1, ViolatedBy = 2, ViolatedOn = 3 };

inline constexpr std::array<EntityKind, 4> kAllEntityKinds = {
    EntityKind::Law, EntityKind::Violation, EntityKind::ViolatedBy,
    EntityKind::ViolatedOn};

inline constexpr std::size_t index_of(EntityKind k) {
  return static_cast<std::size_t>(k);
}

// Display form: "LAW", "VIOLATION", "VIOLATED BY", "VIOLATED ON".
std::string_view to_string(EntityKind kind);
// Whitespace-free form used inside tags: "VIOLATED_BY".
std::string_view tag_name(EntityKind kind);
// Accepts either form. Returns nullopt for anything else.
std::optional<EntityKind> parse_entity_kind(std::string_view s);

enum class NliLabel { Entailment = 0, Contradiction = 1, Neutral = 2 };

inline constexpr std::array<NliLabel, 3> kAllNliLabels = {
    NliLabel::Entailment, NliLabel::Contradiction, NliLabel::Neutral};

inline constexpr std::size_t index_of(NliLabel l) {
  return static_cast<std::size_t>(l);
}

// Single-token surface form: "entailed", "contradict", "neutral".
std::string_view to_string(NliLabel label);
// Case-insensitive; accepts the surface forms and "entailment"/"contradiction".
std::optional<NliLabel> parse_nli_label(std::string_view s);

// Origin of a record, for the machine-vs-human discrimination task.
enum class Provenance { Generated, Human, Unknown };

std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

// One of the four canonical legal domains, or an imported domain name kept
// verbatim. Ordering: canonical order first, then Other names lexicographically.
class LegalDomain {
 public:
  enum class Kind { ConsumerProtection = 0, Privacy = 1, Tcpa = 2, Wage = 3, Other = 4 };

  LegalDomain() = default;
  explicit LegalDomain(Kind kind);
  static LegalDomain other(std::string name);
  // Canonical names match case-insensitively, ignoring space/underscore/hyphen.
  static LegalDomain parse(std::string_view s);

  Kind kind() const noexcept { return kind_; }
  bool is_canonical() const noexcept { return kind_ != Kind::Other; }
  // "Consumer Protection", "Privacy", "TCPA", "Wage" or the Other name.
  std::string name() const;

  friend bool operator==(const LegalDomain&, const LegalDomain&) = default;
  friend std::strong_ordering operator<=>(const LegalDomain& a, const LegalDomain& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    return a.other_ <=> b.other_;
  }

 private:
  Kind kind_ = Kind::Other;
  std::string other_;
};

inline constexpr std::array<LegalDomain::Kind, 4> kCanonicalDomains = {
    LegalDomain::Kind::ConsumerProtection, LegalDomain::Kind::Privacy,
    LegalDomain::Kind::Tcpa, LegalDomain::Kind::Wage};

}  // namespace vioscan
