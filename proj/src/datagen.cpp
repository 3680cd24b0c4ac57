#include "vioscan/datagen.hpp"

#include <istream>
#include <ostream>
#include <regex>
#include <set>

#include <json.hpp>

#include "vioscan/json_io.hpp"
#include "vioscan/parallel.hpp"
#include "vioscan/text.hpp"

namespace vioscan::datagen {

using nlohmann::json;

PromptWording PromptWording::from_json_text(std::string_view json_text) {
  PromptWording w;
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("prompt wording: ") + e.what());
  }
  const std::pair<const char*, std::string*> keys[] = {
      {"summary_task", &w.summary_task},
      {"ner_explicit_task", &w.ner_explicit_task},
      {"ner_implicit_task", &w.ner_implicit_task},
      {"ner_explicit_instructions", &w.ner_explicit_instructions},
      {"ner_implicit_instructions", &w.ner_implicit_instructions},
      {"nli_task", &w.nli_task},
      {"nli_entailment", &w.nli_entailment},
      {"nli_contradiction", &w.nli_contradiction},
      {"nli_neutral", &w.nli_neutral},
      {"nli_output", &w.nli_output},
  };
  for (const auto& [key, field] : keys) {
    if (j.contains(key)) *field = j.at(key).get<std::string>();
  }
  return w;
}

const PromptWording& default_wording() {
  static const PromptWording w;
  return w;
}

void NerGenSpec::check() const {
  if (mode == NerGenMode::Explicit && kinds.empty()) {
    throw Error(ErrorKind::Prompt, "explicit generation spec '" + id + "' lists no entity kinds");
  }
  if (mode == NerGenMode::Implicit) {
    for (EntityKind k : kinds) {
      if (k != EntityKind::Violation) {
        throw Error(ErrorKind::Prompt, "implicit generation spec '" + id + "' may only target VIOLATION");
      }
    }
  }
}

void NliGenSpec::check() const {
  if (text::trim(premise).empty()) {
    throw Error(ErrorKind::InvalidArgument, "generation spec '" + id + "' has an empty premise");
  }
}

PromptSpec render_summary_prompt(std::span<const std::string> sections, const PromptWording& wording) {
  if (sections.empty()) throw Error(ErrorKind::Prompt, "nothing to summarize");
  std::string context;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i) context += "\n\n";
    context += sections[i];
  }
  return PromptSpec{{{"instructions", wording.summary_task}, {"context", context}}};
}

namespace {

std::string replace_all(std::string s, std::string_view what, std::string_view with) {
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + with.size())) {
    s.replace(pos, what.size(), with);
  }
  return s;
}

void add_examples(PromptSpec& p, const std::vector<std::string>& examples) {
  for (const auto& e : examples) p.sections.push_back({backends::section::kExample, "Example:\n" + e});
}

}  // namespace

PromptSpec render_ner_gen_prompt(const NerGenSpec& spec, const PromptWording& wording) {
  spec.check();
  PromptSpec p;
  const bool explicit_mode = spec.mode == NerGenMode::Explicit;
  p.sections.push_back({"task", explicit_mode ? wording.ner_explicit_task : wording.ner_implicit_task});
  add_examples(p, spec.examples);
  if (explicit_mode) {
    std::string kinds;
    for (std::size_t i = 0; i < spec.kinds.size(); ++i) {
      if (i) kinds += ", then ";
      kinds += "[" + std::string(to_string(spec.kinds[i])) + "]";
    }
    p.sections.push_back({backends::section::kInstructions,
                          replace_all(wording.ner_explicit_instructions, "{kinds}", kinds)});
  } else {
    p.sections.push_back({backends::section::kInstructions, wording.ner_implicit_instructions});
  }
  p.sections.push_back(
      {"parameters", "Cause of action: " + spec.cause_of_action + "\nIndustry: " + spec.industry});
  p.sections.push_back({"context", "Context: " + spec.context});
  return p;
}

PromptSpec render_nli_gen_prompt(const NliGenSpec& spec, const PromptWording& wording) {
  spec.check();
  PromptSpec p;
  p.sections.push_back({"task", wording.nli_task});
  add_examples(p, spec.examples);
  std::string instructions;
  switch (spec.target) {
    case NliLabel::Entailment: instructions = wording.nli_entailment; break;
    case NliLabel::Contradiction: instructions = wording.nli_contradiction; break;
    case NliLabel::Neutral: instructions = wording.nli_neutral; break;
  }
  std::string persona = "Writer:";
  if (spec.writer_age) persona += " age " + std::to_string(*spec.writer_age) + ",";
  if (!spec.writer_gender.empty()) persona += " gender " + spec.writer_gender + ",";
  if (persona.back() == ',') persona.pop_back();
  if (persona == "Writer:") persona += " any";
  persona += ".\nFormat: " + (spec.text_format.empty() ? std::string("free text") : spec.text_format) + ".";
  p.sections.push_back({backends::section::kInstructions, instructions + "\n" + persona + "\n" + wording.nli_output});
  p.sections.push_back({"premise", "Premise: " + spec.premise});
  return p;
}

GeneratedNer parse_generated_ner(std::string_view raw, std::string id) {
  static const std::regex marker(R"(\[([A-Z][A-Z_ ]*)\])");
  GeneratedNer g;
  g.raw = std::string(raw);
  std::vector<std::string> tokens;
  std::vector<bio::EntitySpan> spans;
  std::optional<std::pair<EntityKind, std::size_t>> open;

  auto append = [&](std::string_view segment) {
    for (auto& t : text::tokenize(segment)) tokens.push_back(std::move(t));
  };

  const std::string s(raw);
  std::size_t last = 0;
  for (auto it = std::sregex_iterator(s.begin(), s.end(), marker); it != std::sregex_iterator(); ++it) {
    const auto& m = *it;
    append(std::string_view(s).substr(last, static_cast<std::size_t>(m.position()) - last));
    last = static_cast<std::size_t>(m.position() + m.length());
    const auto kind = parse_entity_kind(m[1].str());
    if (!kind) {
      g.diagnostics.push_back("unknown entity marker " + m.str());
      continue;
    }
    if (!open) {
      open.emplace(*kind, tokens.size());
    } else if (open->first == *kind) {
      if (open->second == tokens.size()) {
        g.diagnostics.push_back("empty " + std::string(tag_name(*kind)) + " span");
      } else {
        spans.push_back({*kind, open->second, tokens.size(), std::nullopt});
      }
      open.reset();
    } else {
      g.diagnostics.push_back("marker " + m.str() + " inside an open [" +
                              std::string(to_string(open->first)) + "] span (nested or unbalanced)");
    }
  }
  append(std::string_view(s).substr(last));
  if (open) {
    g.diagnostics.push_back("unbalanced marker: [" + std::string(to_string(open->first)) + "] is never closed");
  }
  if (tokens.empty()) g.diagnostics.emplace_back("no tokens");
  if (!g.diagnostics.empty()) return g;

  corpus::NerRecord r;
  r.id = std::move(id);
  r.tags = bio::encode_spans(spans, tokens.size());
  r.tokens = std::move(tokens);
  r.provenance = Provenance::Generated;
  g.record = std::move(r);
  return g;
}

std::vector<LabeledRecord> GenerationBatch::accepted() const {
  std::vector<LabeledRecord> out;
  for (const auto& item : items) {
    if (item.accepted && item.parsed) out.push_back(*item.parsed);
  }
  return out;
}

std::size_t GenerationBatch::accepted_count() const {
  std::size_t n = 0;
  for (const auto& item : items) n += item.accepted;
  return n;
}

std::size_t GenerationBatch::rejected_count() const { return items.size() - accepted_count(); }

namespace {

std::string item_id(const std::string& spec_id, std::size_t index) {
  return spec_id.empty() ? "gen-" + std::to_string(index) : spec_id;
}

template <class Spec, class Attempt, class DedupKey>
GenerationBatch run_batch(std::span<const Spec> specs, bool dedup, std::size_t max_concurrency,
                          Attempt attempt, DedupKey dedup_key) {
  GenerationBatch batch;
  batch.items.resize(specs.size());
  parallel_for(specs.size(), max_concurrency, [&](std::size_t i) {
    GeneratedItem& item = batch.items[i];
    item.item_id = item_id(specs[i].id, i);
    try {
      attempt(specs[i], item);
    } catch (const Error& e) {
      item.accepted = false;
      item.diagnostics.push_back(std::string(to_string(e.kind())) + " error: " + e.message());
    } catch (const std::exception& e) {
      item.accepted = false;
      item.diagnostics.push_back(e.what());
    }
  });
  if (dedup) {
    std::map<std::string, std::string> seen;
    for (auto& item : batch.items) {
      if (!item.accepted || !item.parsed) continue;
      const std::string key = dedup_key(*item.parsed);
      auto [it, inserted] = seen.emplace(key, item.item_id);
      if (!inserted) {
        item.accepted = false;
        item.diagnostics.push_back("duplicate of " + it->second);
      }
    }
  }
  return batch;
}

std::string strip_hypothesis(std::string_view reply) {
  std::string_view t = text::trim(reply);
  if (text::to_lower(t.substr(0, 11)) == "hypothesis:") t = text::trim(t.substr(11));
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = text::trim(t.substr(1, t.size() - 2));
  return std::string(t);
}

}  // namespace

GenerationBatch generate_batch(std::span<const NerGenSpec> specs, backends::ChatBackend& backend,
                               bool dedup, std::size_t max_concurrency, const PromptWording& wording) {
  return run_batch(
      specs, dedup, max_concurrency,
      [&](const NerGenSpec& spec, GeneratedItem& item) {
        const auto prompt = render_ner_gen_prompt(spec, wording);
        item.raw = backend.complete(prompt).text;
        GeneratedNer g = parse_generated_ner(item.raw, item.item_id);
        item.diagnostics = g.diagnostics;
        if (g.record) {
          if (!spec.cause_of_action.empty()) g.record->cause_of_action = spec.cause_of_action;
          if (!spec.industry.empty()) g.record->industry = spec.industry;
          item.parsed = LabeledRecord{*g.record};
          item.accepted = true;
        }
      },
      [](const LabeledRecord& r) { return text::join(std::get<corpus::NerRecord>(r).tokens, "\x1f"); });
}

GenerationBatch generate_batch(std::span<const NliGenSpec> specs, backends::ChatBackend& backend,
                               bool dedup, std::size_t max_concurrency, const PromptWording& wording) {
  return run_batch(
      specs, dedup, max_concurrency,
      [&](const NliGenSpec& spec, GeneratedItem& item) {
        const auto prompt = render_nli_gen_prompt(spec, wording);
        item.raw = backend.complete(prompt).text;
        corpus::NliRecord r;
        r.id = item.item_id;
        r.premise = spec.premise;
        r.hypothesis = strip_hypothesis(item.raw);
        r.label = spec.target;
        r.domain = spec.domain;
        if (r.hypothesis.empty()) {
          item.diagnostics.emplace_back("empty hypothesis");
          return;
        }
        item.parsed = LabeledRecord{std::move(r)};
        item.accepted = true;
      },
      [](const LabeledRecord& r) { return std::get<corpus::NliRecord>(r).hypothesis; });
}

namespace {

template <class Parse>
auto read_lines(std::istream& in, Parse parse) {
  std::vector<decltype(parse(json{}))> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(parse(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, e.what(), number);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, e.what(), number);
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), number);
    }
  }
  return out;
}

std::vector<std::string> string_list(const json& j, const char* key) {
  return j.contains(key) ? j.at(key).get<std::vector<std::string>>() : std::vector<std::string>{};
}

}  // namespace

std::vector<NerGenSpec> read_ner_gen_specs(std::istream& in) {
  return read_lines(in, [](const json& j) {
    NerGenSpec s;
    s.id = j.value("id", std::string{});
    const std::string mode = text::to_lower(j.value("mode", std::string("implicit")));
    if (mode == "explicit") s.mode = NerGenMode::Explicit;
    else if (mode == "implicit") s.mode = NerGenMode::Implicit;
    else throw Error(ErrorKind::Schema, "unknown generation mode '" + mode + "'");
    s.cause_of_action = j.value("cause_of_action", std::string{});
    s.industry = j.value("industry", std::string{});
    s.context = j.value("context", std::string{});
    s.examples = string_list(j, "examples");
    for (const auto& k : string_list(j, "kinds")) {
      auto kind = parse_entity_kind(k);
      if (!kind) throw Error(ErrorKind::Schema, "unknown entity kind '" + k + "'");
      s.kinds.push_back(*kind);
    }
    s.check();
    return s;
  });
}

std::vector<NliGenSpec> read_nli_gen_specs(std::istream& in) {
  return read_lines(in, [](const json& j) {
    NliGenSpec s;
    s.id = j.value("id", std::string{});
    s.premise = j.value("premise", std::string{});
    if (j.contains("writer_age") && !j.at("writer_age").is_null()) s.writer_age = j.at("writer_age").get<int>();
    s.writer_gender = j.value("writer_gender", std::string{});
    s.text_format = j.value("text_format", std::string{});
    const std::string label = j.value("target_label", std::string("entailed"));
    auto parsed = parse_nli_label(label);
    if (!parsed) throw Error(ErrorKind::Label, "unknown label '" + label + "'");
    s.target = *parsed;
    s.domain = LegalDomain::parse(j.value("domain", std::string{}));
    s.examples = string_list(j, "examples");
    s.check();
    return s;
  });
}

std::vector<ReviewItem> to_review(const GenerationBatch& batch) {
  std::vector<ReviewItem> out;
  out.reserve(batch.items.size());
  for (const auto& item : batch.items) {
    ReviewItem r;
    r.item_id = item.item_id;
    r.raw = item.raw;
    r.parsed = item.parsed;
    r.diagnostics = item.diagnostics;
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Accept: return "accept";
    case Verdict::Reject: return "reject";
    case Verdict::Edit: return "edit";
  }
  return "";
}

LabeledRecord record_from(const json& j, backends::Task task) {
  if (task == backends::Task::Ner) {
    corpus::NerRecord r = json_io::ner_record_from_json(j);
    corpus::check_record(r);
    if (const auto v = bio::validate(r.tags); !v.empty()) {
      throw Error(ErrorKind::Schema, "record '" + r.id + "': " + v.front().description);
    }
    return r;
  }
  corpus::NliRecord r = json_io::nli_record_from_json(j);
  corpus::check_record(r);
  return r;
}

}  // namespace

void write_review(std::ostream& out, std::span<const ReviewItem> items) {
  for (const auto& item : items) {
    json j{{"item_id", item.item_id}, {"raw", item.raw}, {"diagnostics", item.diagnostics}};
    if (item.parsed) j["parsed"] = json_io::to_json(*item.parsed);
    if (item.verdict) j["verdict"] = std::string(verdict_name(*item.verdict));
    if (item.edited_record) j["edited_record"] = json_io::to_json(*item.edited_record);
    out << json_io::dump(j);
  }
}

std::vector<ReviewItem> read_review(std::istream& in, backends::Task task) {
  return read_lines(in, [task](const json& j) {
    ReviewItem r;
    r.item_id = j.at("item_id").get<std::string>();
    r.raw = j.value("raw", std::string{});
    r.diagnostics = string_list(j, "diagnostics");
    if (j.contains("parsed") && !j.at("parsed").is_null()) r.parsed = record_from(j.at("parsed"), task);
    if (j.contains("verdict") && !j.at("verdict").is_null()) {
      const std::string v = text::to_lower(j.at("verdict").get<std::string>());
      if (v == "accept") r.verdict = Verdict::Accept;
      else if (v == "reject") r.verdict = Verdict::Reject;
      else if (v == "edit") r.verdict = Verdict::Edit;
      else throw Error(ErrorKind::Schema, "item '" + r.item_id + "': unknown verdict '" + v + "'");
    }
    if (j.contains("edited_record") && !j.at("edited_record").is_null()) {
      r.edited_record = record_from(j.at("edited_record"), task);
    }
    return r;
  });
}

std::vector<LabeledRecord> merge_review(std::span<const ReviewItem> items) {
  std::vector<LabeledRecord> out;
  for (const auto& item : items) {
    if (!item.verdict) {
      if (item.parsed && item.diagnostics.empty()) out.push_back(*item.parsed);
      continue;
    }
    switch (*item.verdict) {
      case Verdict::Accept:
        if (!item.parsed) {
          throw Error(ErrorKind::Schema, "item '" + item.item_id + "' accepted without a parsed record");
        }
        out.push_back(*item.parsed);
        break;
      case Verdict::Edit:
        if (!item.edited_record) {
          throw Error(ErrorKind::Schema, "item '" + item.item_id + "' marked edit without edited_record");
        }
        out.push_back(*item.edited_record);
        break;
      case Verdict::Reject:
        break;
    }
  }
  return out;
}

}  // namespace vioscan::datagen
