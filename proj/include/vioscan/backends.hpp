#pragma once

// Model inference behind two classifier contracts (token tagging, NLI
// labeling), few-shot prompt construction, output parsing, and batched
// repeated prediction against a chat-completion backend.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vioscan/bio.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/error.hpp"
#include "vioscan/types.hpp"

namespace vioscan::backends {

enum class Task { Ner, Nli };

std::string_view to_string(Task t);
Task parse_task(std::string_view s);

struct BackendConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4";
  // Name of the environment variable holding the API key. The key itself is
  // read at call time and never stored.
  std::string credential_env = "OPENAI_API_KEY";
  double timeout_seconds = 60.0;
  int retries = 3;
  double backoff_seconds = 1.0;  // doubled after each failed attempt
  int max_concurrency = 4;
  double temperature = 0.7;
  // JSON pointer to the reply text in the response body.
  std::string response_path = "/choices/0/message/content";
  bool request_logprobs = false;

  // Throws Error{InvalidArgument}.
  void check() const;
};

struct FewShotSpec {
  std::size_t shots = 9;
  std::uint64_t seed = 0;
  int repeats = 5;
  Task task = Task::Ner;

  void check() const;
};

struct PromptSection {
  std::string name;
  std::string content;
};

// Ordered named sections; the rendered text joins them with blank lines.
struct PromptSpec {
  std::vector<PromptSection> sections;

  std::string text() const;
  std::size_t count(std::string_view name) const;
  const PromptSection* first(std::string_view name) const;
  std::vector<const PromptSection*> all(std::string_view name) const;
};

namespace section {
inline constexpr const char* kInstructions = "instructions";
inline constexpr const char* kLabels = "labels";
inline constexpr const char* kExample = "example";
inline constexpr const char* kInput = "input";
}  // namespace section

using LabeledRecord = std::variant<corpus::NerRecord, corpus::NliRecord>;

const std::string& record_id(const LabeledRecord& r);
Task task_of(const LabeledRecord& r);

// Sections: instructions, labels, one "example" per shot, then the input.
// NER examples are Input/fenced-Output token-tag pairs; NLI examples are
// premise/hypothesis/label triples. The input block never carries an answer.
PromptSpec build_fewshot_prompt(Task task, std::span<const LabeledRecord> examples,
                                const LabeledRecord& input, const FewShotSpec& spec);

// Draws `k` distinct pool indices; the draw depends only on (seed, key, repeat).
class FewShotSampler {
 public:
  FewShotSampler(std::size_t pool_size, std::uint64_t seed);
  std::vector<std::size_t> sample(std::string_view key, int repeat, std::size_t k) const;

 private:
  std::size_t pool_size_;
  std::uint64_t seed_;
};

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;
};

struct Completion {
  std::string text;
  std::vector<TokenLogprob> logprobs;  // empty when the backend gives none
};

// Text-in, text-out chat model. Implementations must be safe to call from
// several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual Completion complete(const PromptSpec& prompt) = 0;
};

// Fixed prompt -> answer table for offline runs. The first rule whose
// `contains` text occurs in the rendered prompt answers; an empty `contains`
// matches everything. A rule may instead raise an error of a given kind.
class ScriptedChatBackend : public ChatBackend {
 public:
  struct Rule {
    std::string contains;
    std::string reply;
    std::optional<ErrorKind> fail;
  };

  ScriptedChatBackend() = default;
  explicit ScriptedChatBackend(std::vector<Rule> rules) : rules_(std::move(rules)) {}
  // JSON: {"rules": [{"contains": "...", "reply": "...", "fail": "timeout"?}]}
  static std::vector<Rule> parse_script(std::string_view json_text);

  void add(Rule rule);
  Completion complete(const PromptSpec& prompt) override;

  std::vector<std::string> prompts() const;

 private:
  std::vector<Rule> rules_;
  mutable std::mutex mu_;
  std::vector<std::string> seen_;
};

struct TaggedPrediction {
  bio::TagSequence tags;
  std::vector<double> confidence;  // per token; empty when unknown
  std::string raw;
  std::vector<std::string> diagnostics;
};

// Total: always returns exactly tokens.size() well-formed tags. Reads the
// first fenced block (else the text after the last "Output:", else all of
// it). Lines of the form "token<ws>tag" are aligned to the input tokens by
// surface form; bare tag lines align positionally. Anything unreadable
// becomes O with a diagnostic. Strict policy drops dangling tags here since
// the parser may not fail.
TaggedPrediction parse_ner_output(std::string_view raw, std::span<const std::string> tokens,
                                  bio::RepairPolicy policy,
                                  std::span<const TokenLogprob> logprobs = {});

// First label word by position, case-insensitive: entailed/entailment,
// contradict/contradiction, neutral. Throws Error{Label} when none occurs.
NliLabel parse_nli_output(std::string_view raw);

// Mean per-token confidence over the span; 1.0 when no confidences exist.
double span_confidence(const bio::EntitySpan& span, std::span<const double> token_confidence);

class TokenTagger {
 public:
  virtual ~TokenTagger() = default;
  virtual TaggedPrediction tag(const std::string& input_id,
                               std::span<const std::string> tokens) = 0;
};

struct NliQuery {
  std::string key;  // stable identifier for sampling
  std::string premise;
  std::string hypothesis;
  int repeat = 0;
};

class NliClassifier {
 public:
  virtual ~NliClassifier() = default;
  // Throws Error{Label} when the model answer names no label.
  virtual NliLabel classify(const NliQuery& query) = 0;
};

class LlmTokenTagger : public TokenTagger {
 public:
  LlmTokenTagger(ChatBackend& backend, std::vector<corpus::NerRecord> pool, FewShotSpec spec,
                 bio::RepairPolicy policy);
  TaggedPrediction tag(const std::string& input_id, std::span<const std::string> tokens) override;

 private:
  ChatBackend& backend_;
  std::vector<LabeledRecord> pool_;
  FewShotSpec spec_;
  bio::RepairPolicy policy_;
  FewShotSampler sampler_;
};

class LlmNliClassifier : public NliClassifier {
 public:
  LlmNliClassifier(ChatBackend& backend, std::vector<corpus::NliRecord> pool, FewShotSpec spec);
  NliLabel classify(const NliQuery& query) override;

 private:
  ChatBackend& backend_;
  std::vector<LabeledRecord> pool_;
  FewShotSpec spec_;
  FewShotSampler sampler_;
};

struct Prediction {
  std::string input_id;
  int repeat = 0;
  bool failed = false;
  std::optional<ErrorKind> error_kind;
  std::string error;
  std::string raw;
  std::optional<TaggedPrediction> ner;
  std::optional<NliLabel> nli;  // nullopt if unparseable or failed
  std::vector<std::string> diagnostics;
};

struct BatchOptions {
  std::size_t max_concurrency = 4;
  bio::RepairPolicy policy = bio::RepairPolicy::PromoteInsideToBegin;
};

// spec.repeats predictions per input, each with its own example draw. Item
// failures are recorded, never thrown. Output sorted by (input id, repeat).
// Throws Error{InvalidArgument} if an input id also occurs in the pool.
std::vector<Prediction> predict_batch(ChatBackend& backend, const FewShotSpec& spec,
                                      std::span<const LabeledRecord> train_pool,
                                      std::span<const LabeledRecord> inputs,
                                      const BatchOptions& options = {});

// Fills in what evaluation needs for a failed or unparseable prediction:
// all-O tags over `token_count` tokens for NER, Neutral for NLI. The item
// stays marked failed; a diagnostic notes the substitution.
Prediction with_fallback(Prediction p, Task task, std::size_t token_count);

}  // namespace vioscan::backends
