#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vioscan/bio.hpp"
#include "vioscan/types.hpp"

namespace vioscan::corpus {

struct NerRecord {
  std::string id;
  std::vector<std::string> tokens;
  bio::TagSequence tags;
  std::optional<std::string> cause_of_action;
  std::optional<std::string> industry;
  Provenance provenance = Provenance::Unknown;
};

struct NliRecord {
  std::string id;
  std::string premise;
  std::string hypothesis;
  NliLabel label = NliLabel::Neutral;
  LegalDomain domain;
};

// Throws Error{Schema} naming the record when an invariant does not hold.
void check_record(const NerRecord& r);
void check_record(const NliRecord& r);

enum class NerFormat { Jsonl, Conll };

NerFormat parse_ner_format(std::string_view s);

// Maps canonical field names to the names used by an external file.
// Unmapped fields keep their canonical names.
class FieldMap {
 public:
  FieldMap() = default;
  // "canonical=external,canonical=external"
  static FieldMap parse(std::string_view spec);

  void set(std::string canonical, std::string external);
  std::string operator[](const std::string& canonical) const;
  bool empty() const { return names_.empty(); }

 private:
  std::map<std::string, std::string> names_;
};

// Canonical field names.
namespace field {
inline constexpr const char* kId = "id";
inline constexpr const char* kTokens = "tokens";
inline constexpr const char* kTags = "ner_tags";
inline constexpr const char* kCauseOfAction = "cause_of_action";
inline constexpr const char* kIndustry = "industry";
inline constexpr const char* kProvenance = "provenance";
inline constexpr const char* kPremise = "premise";
inline constexpr const char* kHypothesis = "hypothesis";
inline constexpr const char* kLabel = "label";
inline constexpr const char* kDomain = "legal_act";
}  // namespace field

std::vector<NerRecord> read_ner(std::istream& in, NerFormat format, const FieldMap& fields = {});
std::vector<NliRecord> read_nli(std::istream& in, const FieldMap& fields = {});

std::vector<NerRecord> load_ner(const std::filesystem::path& path, NerFormat format,
                                const FieldMap& fields = {});
std::vector<NliRecord> load_nli(const std::filesystem::path& path, const FieldMap& fields = {});

// Output is always canonical field names, LF line endings.
void write_ner(std::ostream& out, const std::vector<NerRecord>& records, NerFormat format);
void write_nli(std::ostream& out, const std::vector<NliRecord>& records);
void save_ner(const std::filesystem::path& path, const std::vector<NerRecord>& records,
              NerFormat format);
void save_nli(const std::filesystem::path& path, const std::vector<NliRecord>& records);

struct CorpusStats {
  std::array<std::size_t, 4> spans_by_kind{};
  std::size_t total_spans = 0;
  std::size_t ner_records = 0;
  // domain -> counts indexed by NliLabel
  std::map<LegalDomain, std::array<std::size_t, 3>> nli_counts;
  std::size_t total_nli = 0;

  std::size_t spans(EntityKind k) const { return spans_by_kind[index_of(k)]; }
  std::size_t domain_total(const LegalDomain& d) const;
  std::size_t count(const LegalDomain& d, NliLabel l) const;
};

CorpusStats compute_stats(const std::vector<NerRecord>& ner, const std::vector<NliRecord>& nli,
                          bio::RepairPolicy policy = bio::RepairPolicy::Strict);

// Prediction files: JSONL {id, ner_tags | label, repeat?}. Lines without a
// repeat field belong to run 0. Result is keyed run -> id.
using NerPredictions = std::map<int, std::map<std::string, bio::TagSequence>>;
using NliPredictions = std::map<int, std::map<std::string, NliLabel>>;

NerPredictions read_ner_predictions(std::istream& in, const FieldMap& fields = {});
NliPredictions read_nli_predictions(std::istream& in, const FieldMap& fields = {});
NerPredictions load_ner_predictions(const std::filesystem::path& path, const FieldMap& fields = {});
NliPredictions load_nli_predictions(const std::filesystem::path& path, const FieldMap& fields = {});

// Per-record origin judgments, JSONL {id, provenance}. "label" is accepted
// when no provenance field is present.
using ProvenanceLabels = std::map<std::string, Provenance>;
ProvenanceLabels read_provenance_labels(std::istream& in, const FieldMap& fields = {});
ProvenanceLabels load_provenance_labels(const std::filesystem::path& path,
                                        const FieldMap& fields = {});

}  // namespace vioscan::corpus
