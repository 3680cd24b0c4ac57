#include "vioscan/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>

#include <json.hpp>

#include "vioscan/error.hpp"
#include "vioscan/parallel.hpp"
#include "vioscan/text.hpp"

namespace vioscan::pipeline {

using nlohmann::json;

namespace {

template <class Parse>
auto read_jsonl(std::istream& in, Parse parse) {
  std::vector<decltype(parse(json{}, std::size_t{}))> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, std::string("malformed JSON: ") + e.what(), number);
    }
    try {
      out.push_back(parse(j, out.size()));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, e.what(), number);
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), number);
    }
  }
  return out;
}

std::string string_id(const json& j, std::size_t ordinal) {
  if (!j.contains("id")) return std::to_string(ordinal);
  const auto& v = j.at("id");
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

}  // namespace

std::vector<SettlementCase> read_cases(std::istream& in) {
  return read_jsonl(in, [](const json& j, std::size_t ordinal) {
    SettlementCase c;
    c.id = string_id(j, ordinal);
    c.summary = j.at("summary").get<std::string>();
    if (text::trim(c.summary).empty()) {
      throw Error(ErrorKind::Schema, "case '" + c.id + "' has an empty summary");
    }
    c.domain = LegalDomain::parse(j.value("domain", std::string{}));
    if (auto it = j.find("metadata"); it != j.end() && it->is_object()) {
      for (const auto& [k, v] : it->items()) c.metadata[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return c;
  });
}

std::vector<SettlementCase> load_cases(const std::filesystem::path& path) {
  auto in = open(path);
  return read_cases(in);
}

std::vector<PipelineInput> read_inputs(std::istream& in) {
  return read_jsonl(in, [](const json& j, std::size_t ordinal) {
    return PipelineInput{string_id(j, ordinal), j.at("text").get<std::string>()};
  });
}

std::vector<PipelineInput> load_inputs(const std::filesystem::path& path) {
  auto in = open(path);
  return read_inputs(in);
}

void PipelineConfig::check() const {
  if (!(tau >= 0.0 && tau <= 1.0)) throw Error(ErrorKind::InvalidArgument, "tau must lie in [0,1]");
  if (nli_repeats < 1) throw Error(ErrorKind::InvalidArgument, "NLI repeats must be >= 1");
}

IdentifyResult identify(const std::string& input_id, std::span<const std::string> tokens,
                        backends::TokenTagger& tagger, const PipelineConfig& config) {
  if (tokens.empty()) throw Error(ErrorKind::InvalidArgument, "input '" + input_id + "' has no tokens");
  backends::TaggedPrediction pred;
  try {
    pred = tagger.tag(input_id, tokens);
  } catch (const Error& e) {
    throw Error(e.kind(), "input '" + input_id + "': " + e.message());
  }
  if (pred.tags.size() != tokens.size()) {
    throw Error(ErrorKind::Evaluation, "input '" + input_id + "': tagger returned " +
                                           std::to_string(pred.tags.size()) + " tags for " +
                                           std::to_string(tokens.size()) + " tokens");
  }
  IdentifyResult r;
  r.diagnostics = pred.diagnostics;
  if (pred.confidence.empty()) r.diagnostics.emplace_back("no token confidence; spans scored 1.0");
  for (auto span : bio::decode_spans(pred.tags, config.policy)) {
    span.confidence = backends::span_confidence(span, pred.confidence);
    r.spans.push_back(span);
    if (span.kind != EntityKind::Violation) continue;
    (*span.confidence >= config.tau ? r.qualifying : r.below_threshold).push_back(span);
  }
  return r;
}

NliLabel aggregate_votes(std::span<const std::optional<NliLabel>> votes) {
  std::array<std::size_t, 3> counts{};
  for (const auto& v : votes) ++counts[index_of(v.value_or(NliLabel::Neutral))];
  const auto best = std::max_element(counts.begin(), counts.end());
  if (std::count(counts.begin(), counts.end(), *best) > 1) return NliLabel::Neutral;
  return static_cast<NliLabel>(best - counts.begin());
}

std::vector<const SettlementCase*> candidate_cases(std::span<const SettlementCase> cases,
                                                   const PipelineConfig& config) {
  std::vector<const SettlementCase*> out;
  for (const auto& c : cases) {
    if (!config.domain_filter || config.domain_filter->contains(c.domain)) out.push_back(&c);
  }
  return out;
}

std::vector<MatchCandidate> resolve(const std::string& input_id, const std::string& input_text,
                                    std::span<const std::string> tokens,
                                    std::span<const bio::EntitySpan> spans,
                                    std::span<const SettlementCase> cases,
                                    backends::NliClassifier& classifier,
                                    const PipelineConfig& config) {
  config.check();
  std::vector<SpanEvidence> evidence;
  for (const auto& s : spans) {
    std::vector<std::string> words;
    for (std::size_t i = s.start; i < s.end && i < tokens.size(); ++i) words.push_back(tokens[i]);
    evidence.push_back({text::join(words, " "), s.start, s.end, s.confidence.value_or(1.0)});
  }

  const auto candidates = candidate_cases(cases, config);
  std::vector<MatchCandidate> out(candidates.size());
  parallel_for(candidates.size(), config.max_concurrency, [&](std::size_t i) {
    const SettlementCase& c = *candidates[i];
    MatchCandidate& m = out[i];
    m.input_id = input_id;
    m.case_id = c.id;
    m.evidence = evidence;
    for (int r = 0; r < config.nli_repeats; ++r) {
      try {
        m.labels.emplace_back(
            classifier.classify({input_id + "|" + c.id, c.summary, input_text, r}));
      } catch (const Error& e) {
        if (e.kind() == ErrorKind::Label) {
          m.labels.emplace_back(std::nullopt);
          continue;
        }
        m.error = e.message();
        break;
      } catch (const std::exception& e) {
        m.error = e.what();
        break;
      }
    }
    if (!m.error) {
      m.aggregated = aggregate_votes(m.labels);
      m.flagged = m.aggregated == NliLabel::Entailment;
    }
  });
  std::stable_sort(out.begin(), out.end(), [](const MatchCandidate& a, const MatchCandidate& b) {
    return std::tie(a.input_id, a.case_id) < std::tie(b.input_id, b.case_id);
  });
  return out;
}

PipelineReport run(std::span<const PipelineInput> inputs, std::span<const SettlementCase> cases,
                   backends::TokenTagger& tagger, backends::NliClassifier& classifier,
                   const PipelineConfig& config) {
  config.check();
  std::set<std::string> ids;
  for (const auto& in : inputs) {
    if (!ids.insert(in.id).second) {
      throw Error(ErrorKind::InvalidArgument, "duplicate input id '" + in.id + "'");
    }
  }
  std::vector<const PipelineInput*> ordered;
  for (const auto& in : inputs) ordered.push_back(&in);
  std::sort(ordered.begin(), ordered.end(),
            [](const PipelineInput* a, const PipelineInput* b) { return a->id < b->id; });

  PipelineReport report;
  report.total_inputs = inputs.size();
  for (const PipelineInput* in : ordered) {
    InputReport ir;
    ir.id = in->id;
    ir.tokens = text::tokenize(in->text);
    try {
      ir.identified = identify(in->id, ir.tokens, tagger, config);
      if (!ir.identified.qualifying.empty()) {
        ir.candidates = resolve(in->id, in->text, ir.tokens, ir.identified.qualifying, cases,
                                classifier, config);
        ir.comparisons = ir.candidates.size();
        ++report.qualifying_inputs;
      }
    } catch (const Error& e) {
      ir.error = e.message();
      ++report.failed_inputs;
    }
    report.comparisons += ir.comparisons;
    for (const auto& c : ir.candidates) {
      report.flagged += c.flagged;
      report.errored_comparisons += c.error.has_value();
    }
    report.inputs.push_back(std::move(ir));
  }
  return report;
}

}  // namespace vioscan::pipeline
