#include "vioscan/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "vioscan/parallel.hpp"
#include "vioscan/text.hpp"

namespace vioscan::backends {

std::string_view to_string(Task t) { return t == Task::Ner ? "ner" : "nli"; }

Task parse_task(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "ner") return Task::Ner;
  if (lower == "nli") return Task::Nli;
  throw Error(ErrorKind::InvalidArgument, "unknown task '" + std::string(s) + "' (ner|nli)");
}

void BackendConfig::check() const {
  if (!(temperature >= 0.0)) throw Error(ErrorKind::InvalidArgument, "temperature must be >= 0");
  if (max_concurrency < 1) throw Error(ErrorKind::InvalidArgument, "max concurrency must be >= 1");
  if (retries < 0) throw Error(ErrorKind::InvalidArgument, "retries must be >= 0");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorKind::InvalidArgument, "timeout must be > 0");
  if (!(backoff_seconds >= 0.0)) throw Error(ErrorKind::InvalidArgument, "backoff must be >= 0");
  if (credential_env.empty()) {
    throw Error(ErrorKind::InvalidArgument, "credential environment variable name is empty");
  }
}

void FewShotSpec::check() const {
  if (repeats < 1) throw Error(ErrorKind::InvalidArgument, "repeats must be >= 1");
}

std::string PromptSpec::text() const {
  std::string out;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) out += "\n\n";
    out += sections[i].content;
  }
  return out;
}

std::size_t PromptSpec::count(std::string_view name) const {
  return static_cast<std::size_t>(std::count_if(
      sections.begin(), sections.end(), [&](const PromptSection& s) { return s.name == name; }));
}

const PromptSection* PromptSpec::first(std::string_view name) const {
  for (const auto& s : sections) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<const PromptSection*> PromptSpec::all(std::string_view name) const {
  std::vector<const PromptSection*> out;
  for (const auto& s : sections) {
    if (s.name == name) out.push_back(&s);
  }
  return out;
}

const std::string& record_id(const LabeledRecord& r) {
  return std::visit([](const auto& rec) -> const std::string& { return rec.id; }, r);
}

Task task_of(const LabeledRecord& r) {
  return std::holds_alternative<corpus::NerRecord>(r) ? Task::Ner : Task::Nli;
}

namespace {

constexpr const char* kNerInstructions =
    "Find the legal entities in the input text. Tag each token with the IOB2 "
    "scheme: B- starts an entity, I- continues the entity begun on the previous "
    "token, O marks tokens outside any entity. Answer with an Output section "
    "fenced by ``` lines, holding one line per input token: the token, a tab, "
    "then its tag. Keep the input tokens and their order unchanged.";

constexpr const char* kNerLabels =
    "Labels:\n"
    "LAW - the law or regulation that was breached\n"
    "VIOLATION - the content describing the violation\n"
    "VIOLATED_BY - the party committing the violation\n"
    "VIOLATED_ON - the victim or affected party\n"
    "Tags: O, B-LAW, I-LAW, B-VIOLATION, I-VIOLATION, B-VIOLATED_BY, "
    "I-VIOLATED_BY, B-VIOLATED_ON, I-VIOLATED_ON";

constexpr const char* kNliInstructions =
    "You are given a premise summarizing the legal grounds of a class action "
    "and a hypothesis written by a person. Decide whether the premise entails "
    "the hypothesis (the person was affected by this violation), contradicts "
    "it, or neither. Answer with exactly one word.";

constexpr const char* kNliLabels =
    "Labels:\n"
    "entailed - the hypothesis is supported by the premise\n"
    "contradict - the hypothesis contradicts the premise\n"
    "neutral - the premise neither supports nor contradicts the hypothesis";

std::string ner_input_block(const corpus::NerRecord& r) {
  return "Input: " + text::join(r.tokens, " ");
}

std::string ner_example_block(const corpus::NerRecord& r) {
  std::string out = ner_input_block(r) + "\nOutput:\n```\n";
  for (std::size_t i = 0; i < r.tokens.size(); ++i) {
    out += r.tokens[i] + "\t" + bio::format_tag(r.tags[i]) + "\n";
  }
  out += "```";
  return out;
}

std::string nli_input_block(const corpus::NliRecord& r) {
  return "Premise: " + r.premise + "\nHypothesis: " + r.hypothesis;
}

std::string nli_example_block(const corpus::NliRecord& r) {
  return nli_input_block(r) + "\nLabel: " + std::string(to_string(r.label));
}

}  // namespace

PromptSpec build_fewshot_prompt(Task task, std::span<const LabeledRecord> examples,
                                const LabeledRecord& input, const FewShotSpec& spec) {
  if (spec.task != task) {
    throw Error(ErrorKind::Prompt, "few-shot spec is for " + std::string(to_string(spec.task)) +
                                       " but the prompt is for " + std::string(to_string(task)));
  }
  if (examples.size() != spec.shots) {
    throw Error(ErrorKind::Prompt, "expected " + std::to_string(spec.shots) + " examples, got " +
                                       std::to_string(examples.size()));
  }
  if (task_of(input) != task) {
    throw Error(ErrorKind::Prompt, "input record '" + record_id(input) + "' is not a " +
                                       std::string(to_string(task)) + " record");
  }
  PromptSpec p;
  const bool ner = task == Task::Ner;
  p.sections.push_back({section::kInstructions, ner ? kNerInstructions : kNliInstructions});
  p.sections.push_back({section::kLabels, ner ? kNerLabels : kNliLabels});
  for (const auto& ex : examples) {
    if (task_of(ex) != task) {
      throw Error(ErrorKind::Prompt, "example '" + record_id(ex) + "' is not a " +
                                         std::string(to_string(task)) + " record");
    }
    p.sections.push_back({section::kExample, ner ? ner_example_block(std::get<0>(ex))
                                                 : nli_example_block(std::get<1>(ex))});
  }
  p.sections.push_back({section::kInput, ner ? ner_input_block(std::get<0>(input))
                                             : nli_input_block(std::get<1>(input))});
  return p;
}

FewShotSampler::FewShotSampler(std::size_t pool_size, std::uint64_t seed)
    : pool_size_(pool_size), seed_(seed) {}

std::vector<std::size_t> FewShotSampler::sample(std::string_view key, int repeat,
                                                std::size_t k) const {
  if (k > pool_size_) {
    throw Error(ErrorKind::Prompt, "cannot draw " + std::to_string(k) + " examples from a pool of " +
                                       std::to_string(pool_size_));
  }
  const std::uint64_t mixed =
      text::splitmix64(seed_ ^ text::splitmix64(text::fnv1a(key)) ^
                       text::splitmix64(0x5851f42d4c957f2dULL + static_cast<std::uint64_t>(repeat)));
  text::Rng rng(mixed);
  std::vector<std::size_t> idx(pool_size_);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool_size_ - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

namespace {

std::optional<ErrorKind> parse_error_kind(std::string_view s) {
  for (int k = 0; k <= static_cast<int>(ErrorKind::InvalidArgument); ++k) {
    if (to_string(static_cast<ErrorKind>(k)) == s) return static_cast<ErrorKind>(k);
  }
  return std::nullopt;
}

}  // namespace

std::vector<ScriptedChatBackend::Rule> ScriptedChatBackend::parse_script(std::string_view json_text) {
  std::vector<Rule> rules;
  try {
    const auto j = nlohmann::json::parse(json_text);
    for (const auto& r : j.at("rules")) {
      Rule rule;
      rule.contains = r.value("contains", std::string{});
      rule.reply = r.value("reply", std::string{});
      if (r.contains("fail")) {
        rule.fail = parse_error_kind(r.at("fail").get<std::string>());
        if (!rule.fail) {
          throw Error(ErrorKind::Schema, "unknown failure kind '" + r.at("fail").get<std::string>() + "'");
        }
      }
      rules.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("backend script: ") + e.what());
  }
  return rules;
}

void ScriptedChatBackend::add(Rule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
}

Completion ScriptedChatBackend::complete(const PromptSpec& prompt) {
  const std::string text = prompt.text();
  std::lock_guard lock(mu_);
  seen_.push_back(text);
  for (const auto& r : rules_) {
    if (r.contains.empty() || text.find(r.contains) != std::string::npos) {
      if (r.fail) throw Error(*r.fail, "scripted failure");
      return Completion{r.reply, {}};
    }
  }
  throw Error(ErrorKind::ResponseFormat, "no scripted reply matches the prompt");
}

std::vector<std::string> ScriptedChatBackend::prompts() const {
  std::lock_guard lock(mu_);
  return seen_;
}

namespace {

struct Field {
  std::string_view text;
  std::size_t offset;  // into the raw completion
};

struct Block {
  std::string_view text;
  std::size_t offset;
};

Block output_block(std::string_view raw, std::vector<std::string>& diag) {
  const std::size_t fence = raw.find("```");
  if (fence != std::string_view::npos) {
    std::size_t begin = raw.find('\n', fence);
    begin = begin == std::string_view::npos ? raw.size() : begin + 1;
    std::size_t end = raw.find("```", begin);
    if (end == std::string_view::npos) {
      diag.emplace_back("unterminated output fence");
      end = raw.size();
    }
    return {raw.substr(begin, end - begin), begin};
  }
  const std::string lower = text::to_lower(raw);
  const std::size_t marker = lower.rfind("output:");
  if (marker != std::string::npos) {
    diag.emplace_back("no output fence; reading after 'Output:'");
    const std::size_t begin = marker + 7;
    return {raw.substr(begin), begin};
  }
  diag.emplace_back("no output fence; reading the whole reply");
  return {raw, 0};
}

std::vector<std::vector<Field>> split_lines(Block block) {
  std::vector<std::vector<Field>> lines;
  std::size_t pos = 0;
  const std::string_view t = block.text;
  while (pos < t.size()) {
    std::size_t eol = t.find('\n', pos);
    if (eol == std::string_view::npos) eol = t.size();
    std::vector<Field> fields;
    std::size_t i = pos;
    while (i < eol) {
      while (i < eol && std::isspace(static_cast<unsigned char>(t[i]))) ++i;
      std::size_t j = i;
      while (j < eol && !std::isspace(static_cast<unsigned char>(t[j]))) ++j;
      if (j > i) fields.push_back({t.substr(i, j - i), block.offset + i});
      i = j;
    }
    if (!fields.empty()) lines.push_back(std::move(fields));
    pos = eol + 1;
  }
  return lines;
}

bool is_tag(std::string_view s) {
  try {
    bio::parse_tag(s);
    return true;
  } catch (const Error&) {
    return false;
  }
}

struct Assigned {
  std::optional<Field> tag;  // nullopt when the model gave none for this token
};

std::vector<Assigned> align_positional(const std::vector<Field>& tags, std::size_t n,
                                       std::vector<std::string>& diag) {
  std::vector<Assigned> out(n);
  for (std::size_t i = 0; i < n && i < tags.size(); ++i) out[i].tag = tags[i];
  if (tags.size() < n) {
    diag.push_back(std::to_string(n - tags.size()) + " token(s) without a tag; padded with O");
  } else if (tags.size() > n) {
    diag.push_back(std::to_string(tags.size() - n) + " extra tag(s) ignored");
  }
  return out;
}

std::vector<Assigned> align_paired(const std::vector<std::vector<Field>>& lines,
                                   std::span<const std::string> tokens,
                                   std::vector<std::string>& diag) {
  constexpr std::size_t kLookahead = 8;
  struct Entry {
    std::string_view token;
    std::optional<Field> tag;
  };
  std::vector<Entry> entries;
  for (const auto& l : lines) {
    if (l.size() >= 2) entries.push_back({l.front().text, l.back()});
    else entries.push_back({l.front().text, std::nullopt});
  }

  const std::size_t n = tokens.size();
  std::vector<Assigned> out(n);
  std::size_t i = 0, j = 0, missing = 0, skipped = 0;
  while (i < n) {
    if (j >= entries.size()) {
      ++missing;
      ++i;
      continue;
    }
    if (entries[j].token == tokens[i]) {
      out[i].tag = entries[j].tag;
      if (!entries[j].tag) diag.push_back("no tag for token " + std::to_string(i) + "; O used");
      ++i;
      ++j;
      continue;
    }
    std::optional<std::size_t> later_token;
    for (std::size_t k = i + 1; k < n && k <= i + kLookahead; ++k) {
      if (tokens[k] == entries[j].token) {
        later_token = k;
        break;
      }
    }
    if (later_token) {
      for (std::size_t k = i; k < *later_token; ++k) {
        diag.push_back("token " + std::to_string(k) + " missing from output; O inserted");
      }
      i = *later_token;
      continue;
    }
    std::optional<std::size_t> later_entry;
    for (std::size_t m = j + 1; m < entries.size() && m <= j + kLookahead; ++m) {
      if (entries[m].token == tokens[i]) {
        later_entry = m;
        break;
      }
    }
    if (later_entry) {
      skipped += *later_entry - j;
      j = *later_entry;
      continue;
    }
    diag.push_back("output token '" + std::string(entries[j].token) + "' does not match input token " +
                   std::to_string(i) + "; aligned by position");
    out[i].tag = entries[j].tag;
    ++i;
    ++j;
  }
  if (missing) diag.push_back(std::to_string(missing) + " token(s) without a tag; padded with O");
  skipped += entries.size() - std::min(j, entries.size());
  if (skipped) diag.push_back(std::to_string(skipped) + " extra output line(s) ignored");
  return out;
}

// Per-character probability source built from completion logprobs. Returns
// nullopt when the logprob tokens do not reassemble the raw text.
std::optional<std::vector<std::pair<std::size_t, double>>> logprob_offsets(
    std::string_view raw, std::span<const TokenLogprob> logprobs) {
  std::vector<std::pair<std::size_t, double>> starts;
  std::size_t pos = 0;
  for (const auto& lp : logprobs) {
    if (raw.substr(pos, lp.token.size()) != lp.token) return std::nullopt;
    starts.emplace_back(pos, lp.logprob);
    pos += lp.token.size();
  }
  if (pos != raw.size()) return std::nullopt;
  return starts;
}

double field_probability(const Field& f, const std::vector<std::pair<std::size_t, double>>& starts,
                         std::size_t raw_size) {
  const std::size_t a = f.offset;
  const std::size_t b = f.offset + f.text.size();
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < starts.size(); ++t) {
    const std::size_t ts = starts[t].first;
    const std::size_t te = t + 1 < starts.size() ? starts[t + 1].first : raw_size;
    if (ts < b && te > a) {
      sum += starts[t].second;
      ++n;
    }
  }
  return n ? std::exp(sum / static_cast<double>(n)) : 0.0;
}

}  // namespace

TaggedPrediction parse_ner_output(std::string_view raw, std::span<const std::string> tokens,
                                  bio::RepairPolicy policy, std::span<const TokenLogprob> logprobs) {
  TaggedPrediction pred;
  pred.raw = std::string(raw);
  auto& diag = pred.diagnostics;
  const std::size_t n = tokens.size();

  const Block block = output_block(raw, diag);
  const auto lines = split_lines(block);

  bool bare = !lines.empty();
  std::vector<Field> flat;
  for (const auto& l : lines) {
    for (const auto& f : l) {
      bare = bare && is_tag(f.text);
      flat.push_back(f);
    }
  }
  const std::vector<Assigned> assigned =
      bare ? align_positional(flat, n, diag) : align_paired(lines, tokens, diag);

  pred.tags.assign(n, bio::BioTag::outside());
  for (std::size_t i = 0; i < n; ++i) {
    if (!assigned[i].tag) continue;
    try {
      pred.tags[i] = bio::parse_tag(assigned[i].tag->text);
    } catch (const Error&) {
      diag.push_back("unknown tag '" + std::string(assigned[i].tag->text) + "' at token " +
                     std::to_string(i) + "; O used");
    }
  }

  const auto violations = bio::validate(pred.tags);
  const bio::RepairPolicy effective =
      policy == bio::RepairPolicy::Strict ? bio::RepairPolicy::DropDangling : policy;
  if (!violations.empty()) {
    diag.push_back(std::to_string(violations.size()) + " IOB2 violation(s) repaired (" +
                   std::string(bio::to_string(effective)) + ")");
    pred.tags = bio::repair(pred.tags, effective);
  }

  if (!logprobs.empty()) {
    if (auto starts = logprob_offsets(raw, logprobs)) {
      pred.confidence.assign(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (assigned[i].tag) pred.confidence[i] = field_probability(*assigned[i].tag, *starts, raw.size());
      }
    } else {
      diag.emplace_back("logprob tokens do not match the reply text; confidence unavailable");
    }
  }
  return pred;
}

NliLabel parse_nli_output(std::string_view raw) {
  static const std::pair<const char*, NliLabel> kForms[] = {
      {"entailed", NliLabel::Entailment},
      {"entailment", NliLabel::Entailment},
      {"contradiction", NliLabel::Contradiction},
      {"contradict", NliLabel::Contradiction},
      {"neutral", NliLabel::Neutral},
  };
  const std::string lower = text::to_lower(raw);
  std::optional<std::pair<std::size_t, NliLabel>> best;
  for (const auto& [form, label] : kForms) {
    std::size_t pos = lower.find(form);
    while (pos != std::string::npos) {
      if (pos == 0 || !std::isalpha(static_cast<unsigned char>(lower[pos - 1]))) break;
      pos = lower.find(form, pos + 1);
    }
    if (pos != std::string::npos && (!best || pos < best->first)) best.emplace(pos, label);
  }
  if (!best) {
    const std::string excerpt(raw.substr(0, 80));
    throw Error(ErrorKind::Label, "no label in model output '" + excerpt + "'");
  }
  return best->second;
}

double span_confidence(const bio::EntitySpan& span, std::span<const double> token_confidence) {
  if (token_confidence.empty() || span.end > token_confidence.size() || span.start >= span.end) {
    return 1.0;
  }
  double sum = 0.0;
  for (std::size_t i = span.start; i < span.end; ++i) sum += token_confidence[i];
  return sum / static_cast<double>(span.end - span.start);
}

namespace {

template <class Record>
std::vector<LabeledRecord> wrap(std::vector<Record> records) {
  std::vector<LabeledRecord> out;
  out.reserve(records.size());
  for (auto& r : records) out.emplace_back(std::move(r));
  return out;
}

std::vector<LabeledRecord> draw(const std::vector<LabeledRecord>& pool, const FewShotSampler& sampler,
                                std::string_view key, int repeat, std::size_t k) {
  std::vector<LabeledRecord> out;
  for (std::size_t i : sampler.sample(key, repeat, k)) out.push_back(pool[i]);
  return out;
}

}  // namespace

LlmTokenTagger::LlmTokenTagger(ChatBackend& backend, std::vector<corpus::NerRecord> pool,
                               FewShotSpec spec, bio::RepairPolicy policy)
    : backend_(backend),
      pool_(wrap(std::move(pool))),
      spec_(spec),
      policy_(policy),
      sampler_(pool_.size(), spec.seed) {
  spec_.task = Task::Ner;
}

TaggedPrediction LlmTokenTagger::tag(const std::string& input_id, std::span<const std::string> tokens) {
  corpus::NerRecord query;
  query.id = input_id;
  query.tokens.assign(tokens.begin(), tokens.end());
  query.tags.assign(tokens.size(), bio::BioTag::outside());
  const auto examples = draw(pool_, sampler_, input_id, 0, spec_.shots);
  const auto prompt = build_fewshot_prompt(Task::Ner, examples, LabeledRecord{query}, spec_);
  const Completion c = backend_.complete(prompt);
  return parse_ner_output(c.text, tokens, policy_, c.logprobs);
}

LlmNliClassifier::LlmNliClassifier(ChatBackend& backend, std::vector<corpus::NliRecord> pool,
                                   FewShotSpec spec)
    : backend_(backend), pool_(wrap(std::move(pool))), spec_(spec), sampler_(pool_.size(), spec.seed) {
  spec_.task = Task::Nli;
}

NliLabel LlmNliClassifier::classify(const NliQuery& q) {
  corpus::NliRecord query;
  query.id = q.key;
  query.premise = q.premise;
  query.hypothesis = q.hypothesis;
  const auto examples = draw(pool_, sampler_, q.key, q.repeat, spec_.shots);
  const auto prompt = build_fewshot_prompt(Task::Nli, examples, LabeledRecord{query}, spec_);
  return parse_nli_output(backend_.complete(prompt).text);
}

std::vector<Prediction> predict_batch(ChatBackend& backend, const FewShotSpec& spec,
                                      std::span<const LabeledRecord> train_pool,
                                      std::span<const LabeledRecord> inputs,
                                      const BatchOptions& options) {
  spec.check();
  std::set<std::string> pool_ids;
  for (const auto& r : train_pool) {
    if (task_of(r) != spec.task) {
      throw Error(ErrorKind::Prompt, "pool record '" + record_id(r) + "' has the wrong task");
    }
    pool_ids.insert(record_id(r));
  }
  for (const auto& r : inputs) {
    if (task_of(r) != spec.task) {
      throw Error(ErrorKind::Prompt, "input record '" + record_id(r) + "' has the wrong task");
    }
    if (pool_ids.contains(record_id(r))) {
      throw Error(ErrorKind::InvalidArgument,
                  "input '" + record_id(r) + "' also appears in the few-shot pool");
    }
  }

  const std::vector<LabeledRecord> pool(train_pool.begin(), train_pool.end());
  const FewShotSampler sampler(pool.size(), spec.seed);
  const std::size_t repeats = static_cast<std::size_t>(spec.repeats);
  std::vector<Prediction> out(inputs.size() * repeats);

  parallel_for(out.size(), options.max_concurrency, [&](std::size_t item) {
    const LabeledRecord& input = inputs[item / repeats];
    Prediction& p = out[item];
    p.input_id = record_id(input);
    p.repeat = static_cast<int>(item % repeats);
    try {
      const auto examples = draw(pool, sampler, p.input_id, p.repeat, spec.shots);
      const auto prompt = build_fewshot_prompt(spec.task, examples, input, spec);
      const Completion c = backend.complete(prompt);
      p.raw = c.text;
      if (spec.task == Task::Ner) {
        const auto& tokens = std::get<corpus::NerRecord>(input).tokens;
        p.ner = parse_ner_output(c.text, tokens, options.policy, c.logprobs);
        p.diagnostics = p.ner->diagnostics;
      } else {
        try {
          p.nli = parse_nli_output(c.text);
        } catch (const Error& e) {
          p.diagnostics.push_back(e.message());
        }
      }
    } catch (const Error& e) {
      p.failed = true;
      p.error_kind = e.kind();
      p.error = e.message();
    } catch (const std::exception& e) {
      p.failed = true;
      p.error_kind = ErrorKind::Transport;
      p.error = e.what();
    }
  });

  std::sort(out.begin(), out.end(), [](const Prediction& a, const Prediction& b) {
    return std::tie(a.input_id, a.repeat) < std::tie(b.input_id, b.repeat);
  });
  return out;
}

Prediction with_fallback(Prediction p, Task task, std::size_t token_count) {
  if (task == Task::Ner && !p.ner) {
    p.ner = TaggedPrediction{};
    p.ner->tags.assign(token_count, bio::BioTag::outside());
    p.diagnostics.emplace_back("fallback: all-O tags");
  } else if (task == Task::Nli && !p.nli) {
    p.nli = NliLabel::Neutral;
    p.diagnostics.emplace_back("fallback: neutral");
  }
  return p;
}

}  // namespace vioscan::backends
