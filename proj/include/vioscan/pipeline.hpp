#pragma once

// Identification then resolution: VIOLATION spans above a confidence
// threshold send the whole input text through pair-wise NLI against every
// candidate settlement case; entailed pairs are flagged.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "vioscan/backends.hpp"
#include "vioscan/bio.hpp"
#include "vioscan/types.hpp"

namespace vioscan::pipeline {

struct SettlementCase {
  std::string id;
  std::string summary;
  LegalDomain domain;
  std::map<std::string, std::string> metadata;
};

std::vector<SettlementCase> read_cases(std::istream& in);
std::vector<SettlementCase> load_cases(const std::filesystem::path& path);

struct PipelineConfig {
  double tau = 0.5;
  bio::RepairPolicy policy = bio::RepairPolicy::PromoteInsideToBegin;
  std::optional<std::set<LegalDomain>> domain_filter;
  std::size_t max_concurrency = 4;
  int nli_repeats = 1;

  void check() const;
};

struct IdentifyResult {
  std::vector<bio::EntitySpan> spans;            // every decoded span, with confidence
  std::vector<bio::EntitySpan> qualifying;       // VIOLATION and confidence >= tau
  std::vector<bio::EntitySpan> below_threshold;  // VIOLATION under tau
  std::vector<std::string> diagnostics;
};

IdentifyResult identify(const std::string& input_id, std::span<const std::string> tokens,
                        backends::TokenTagger& tagger, const PipelineConfig& config);

struct SpanEvidence {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;
  double confidence = 1.0;
};

struct MatchCandidate {
  std::string input_id;
  std::string case_id;
  std::vector<SpanEvidence> evidence;
  std::vector<std::optional<NliLabel>> labels;  // per repeat; nullopt = unparseable
  NliLabel aggregated = NliLabel::Neutral;
  bool flagged = false;
  std::optional<std::string> error;
};

// Majority vote; unparseable votes count as Neutral and ties go to Neutral.
NliLabel aggregate_votes(std::span<const std::optional<NliLabel>> votes);

std::vector<const SettlementCase*> candidate_cases(std::span<const SettlementCase> cases,
                                                   const PipelineConfig& config);

// Premise is the case summary, hypothesis the full input text. Sorted by
// (input id, case id).
std::vector<MatchCandidate> resolve(const std::string& input_id, const std::string& input_text,
                                    std::span<const std::string> tokens,
                                    std::span<const bio::EntitySpan> spans,
                                    std::span<const SettlementCase> cases,
                                    backends::NliClassifier& classifier,
                                    const PipelineConfig& config);

struct PipelineInput {
  std::string id;
  std::string text;
};

std::vector<PipelineInput> read_inputs(std::istream& in);
std::vector<PipelineInput> load_inputs(const std::filesystem::path& path);

struct InputReport {
  std::string id;
  std::vector<std::string> tokens;
  IdentifyResult identified;
  std::size_t comparisons = 0;
  std::vector<MatchCandidate> candidates;
  std::optional<std::string> error;
};

struct PipelineReport {
  std::vector<InputReport> inputs;  // sorted by id
  std::size_t total_inputs = 0;
  std::size_t failed_inputs = 0;
  std::size_t qualifying_inputs = 0;
  std::size_t comparisons = 0;
  std::size_t flagged = 0;
  std::size_t errored_comparisons = 0;

  bool all_failed() const { return total_inputs > 0 && failed_inputs == total_inputs; }
};

// Throws Error{InvalidArgument} on duplicate input ids.
PipelineReport run(std::span<const PipelineInput> inputs, std::span<const SettlementCase> cases,
                   backends::TokenTagger& tagger, backends::NliClassifier& classifier,
                   const PipelineConfig& config);

}  // namespace vioscan::pipeline
