#pragma once

// The generation flow for both datasets: prompt rendering, the LLM call,
// parsing generated text back into records, and the review file exchange
// used by human validators.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vioscan/backends.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/types.hpp"

namespace vioscan::datagen {

using backends::LabeledRecord;
using backends::PromptSpec;

// Prompt wording. Every field is plain text except the `{...}` placeholders
// noted; overridable from JSON with the same keys.
struct PromptWording {
  std::string summary_task =
      "Summarize the following complaint or article sections. Keep only the "
      "legal violation content: what was done, by whom, to whom, and under which "
      "law. Remove background, procedural history and party descriptions.";
  std::string ner_explicit_task =
      "Write a realistic passage in the style of a class action complaint that "
      "contains each of the listed legal entities. Mark every entity by placing "
      "the same tag before and after it, for example [LAW] the Telephone "
      "Consumer Protection Act [LAW].";
  std::string ner_implicit_task =
      "Write a short first-person text, such as a post or a message, in which a "
      "person describes something that happened to them. Mark only the words "
      "that describe the violation by placing [VIOLATION] before and after them.";
  std::string ner_explicit_instructions =
      "Include all of the following entities, in exactly this order of "
      "appearance: {kinds}. Do not use any other tags. Do not nest tags.";
  std::string ner_implicit_instructions =
      "Use only the VIOLATION tag. Do not name the law. Do not nest tags.";
  std::string nli_task =
      "You will be given the legal grounds of a class action case. Write a "
      "hypothesis: a text that mimics a real-world account by a person, such as "
      "an online review or a social media post.";
  std::string nli_entailment =
      "The writer must have been affected by exactly the violation described in "
      "the premise, without naming the law or the case.";
  std::string nli_contradiction =
      "The writer must describe a related situation in which they were clearly "
      "not affected by the violation described in the premise.";
  std::string nli_neutral =
      "The writer's account must neither support nor contradict that they were "
      "affected: the premise should not decide it.";
  std::string nli_output = "Reply with the hypothesis text only.";

  static PromptWording from_json_text(std::string_view json_text);
};

const PromptWording& default_wording();

enum class NerGenMode { Explicit, Implicit };

struct NerGenSpec {
  std::string id;
  NerGenMode mode = NerGenMode::Implicit;
  std::string cause_of_action;
  std::string industry;
  std::string context;              // summarized complaint
  std::vector<std::string> examples;  // marked-up sample passages
  std::vector<EntityKind> kinds;    // Explicit: required kinds in order of appearance

  void check() const;
};

struct NliGenSpec {
  std::string id;
  std::string premise;
  std::optional<int> writer_age;
  std::string writer_gender;
  std::string text_format;  // e.g. "online review"
  NliLabel target = NliLabel::Entailment;
  LegalDomain domain;
  std::vector<std::string> examples;

  void check() const;
};

PromptSpec render_summary_prompt(std::span<const std::string> sections,
                                 const PromptWording& wording = default_wording());
PromptSpec render_ner_gen_prompt(const NerGenSpec& spec,
                                 const PromptWording& wording = default_wording());
PromptSpec render_nli_gen_prompt(const NliGenSpec& spec,
                                 const PromptWording& wording = default_wording());

struct GeneratedNer {
  std::string raw;
  std::optional<corpus::NerRecord> record;  // set iff accepted
  std::vector<std::string> diagnostics;

  bool accepted() const { return record.has_value(); }
};

// Paired identical delimiters, "[KIND] words [KIND]", mark one span. Any
// unbalanced, nested, empty or unknown-kind marker rejects the item.
GeneratedNer parse_generated_ner(std::string_view raw, std::string id = {});

struct GeneratedItem {
  std::string item_id;
  std::string raw;
  std::optional<LabeledRecord> parsed;
  std::vector<std::string> diagnostics;
  bool accepted = false;
};

struct GenerationBatch {
  std::vector<GeneratedItem> items;  // spec order

  std::vector<LabeledRecord> accepted() const;
  std::size_t accepted_count() const;
  std::size_t rejected_count() const;
};

// Item failures (backend errors, parse rejections, duplicates) become
// rejected items with diagnostics; the batch itself never throws for them.
GenerationBatch generate_batch(std::span<const NerGenSpec> specs, backends::ChatBackend& backend,
                               bool dedup, std::size_t max_concurrency = 4,
                               const PromptWording& wording = default_wording());
GenerationBatch generate_batch(std::span<const NliGenSpec> specs, backends::ChatBackend& backend,
                               bool dedup, std::size_t max_concurrency = 4,
                               const PromptWording& wording = default_wording());

std::vector<NerGenSpec> read_ner_gen_specs(std::istream& in);
std::vector<NliGenSpec> read_nli_gen_specs(std::istream& in);

enum class Verdict { Accept, Reject, Edit };

struct ReviewItem {
  std::string item_id;
  std::string raw;
  std::optional<LabeledRecord> parsed;
  std::vector<std::string> diagnostics;
  std::optional<Verdict> verdict;
  std::optional<LabeledRecord> edited_record;
};

std::vector<ReviewItem> to_review(const GenerationBatch& batch);
void write_review(std::ostream& out, std::span<const ReviewItem> items);
std::vector<ReviewItem> read_review(std::istream& in, backends::Task task);

// accept -> parsed record, edit -> edited record, reject -> dropped, no
// verdict -> kept iff it parsed without diagnostics.
std::vector<LabeledRecord> merge_review(std::span<const ReviewItem> items);

}  // namespace vioscan::datagen
