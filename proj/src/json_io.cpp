#include "vioscan/json_io.hpp"

#include "vioscan/error.hpp"

namespace vioscan::json_io {

namespace {

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  throw Error(ErrorKind::Schema, "id must be a string or an integer");
}

std::optional<std::string> optional_string(const json& j, const std::string& key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(ErrorKind::Schema, "field '" + key + "' must be a string");
  return it->get<std::string>();
}

std::string required_string(const json& j, const std::string& key, const std::string& who) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    throw Error(ErrorKind::Schema, "record " + who + ": missing field '" + key + "'");
  }
  if (!it->is_string()) {
    throw Error(ErrorKind::Schema, "record " + who + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::vector<std::string> string_array(const json& j, const std::string& key,
                                      const std::string& who) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_array()) {
    throw Error(ErrorKind::Schema, "record " + who + ": field '" + key + "' must be an array");
  }
  std::vector<std::string> out;
  out.reserve(it->size());
  for (const auto& v : *it) {
    if (!v.is_string()) {
      throw Error(ErrorKind::Schema,
                  "record " + who + ": field '" + key + "' must hold strings only");
    }
    out.push_back(v.get<std::string>());
  }
  return out;
}

std::string record_label(const json& j, const corpus::FieldMap& fields) {
  auto it = j.find(fields[corpus::field::kId]);
  if (it == j.end()) return "<no id>";
  try {
    return "'" + id_string(*it) + "'";
  } catch (const Error&) {
    return "<bad id>";
  }
}

json spans_json(std::span<const bio::EntitySpan> spans) {
  json arr = json::array();
  for (const auto& s : spans) arr.push_back(to_json(s));
  return arr;
}

json tags_json(std::span<const bio::BioTag> tags) { return json(bio::format_tags(tags)); }

}  // namespace

json to_json(const corpus::NerRecord& r) {
  json j;
  j[corpus::field::kId] = r.id;
  j[corpus::field::kTokens] = r.tokens;
  j[corpus::field::kTags] = tags_json(r.tags);
  if (r.cause_of_action) j[corpus::field::kCauseOfAction] = *r.cause_of_action;
  if (r.industry) j[corpus::field::kIndustry] = *r.industry;
  if (r.provenance != Provenance::Unknown) {
    j[corpus::field::kProvenance] = std::string(to_string(r.provenance));
  }
  return j;
}

json to_json(const corpus::NliRecord& r) {
  json j;
  j[corpus::field::kId] = r.id;
  j[corpus::field::kPremise] = r.premise;
  j[corpus::field::kHypothesis] = r.hypothesis;
  j[corpus::field::kLabel] = std::string(to_string(r.label));
  j[corpus::field::kDomain] = r.domain.name();
  return j;
}

json to_json(const backends::LabeledRecord& r) {
  return std::visit([](const auto& rec) { return to_json(rec); }, r);
}

corpus::NerRecord ner_record_from_json(const json& j, const corpus::FieldMap& fields) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, "record must be a JSON object");
  const std::string who = record_label(j, fields);
  corpus::NerRecord r;
  if (auto it = j.find(fields[corpus::field::kId]); it != j.end()) r.id = id_string(*it);
  r.tokens = string_array(j, fields[corpus::field::kTokens], who);
  r.tags = bio::parse_tags(string_array(j, fields[corpus::field::kTags], who));
  r.cause_of_action = optional_string(j, fields[corpus::field::kCauseOfAction]);
  r.industry = optional_string(j, fields[corpus::field::kIndustry]);
  if (auto p = optional_string(j, fields[corpus::field::kProvenance])) {
    r.provenance = parse_provenance(*p);
  }
  return r;
}

corpus::NliRecord nli_record_from_json(const json& j, const corpus::FieldMap& fields) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, "record must be a JSON object");
  const std::string who = record_label(j, fields);
  corpus::NliRecord r;
  if (auto it = j.find(fields[corpus::field::kId]); it != j.end()) r.id = id_string(*it);
  r.premise = required_string(j, fields[corpus::field::kPremise], who);
  r.hypothesis = required_string(j, fields[corpus::field::kHypothesis], who);
  const std::string label = required_string(j, fields[corpus::field::kLabel], who);
  auto parsed = parse_nli_label(label);
  if (!parsed) throw Error(ErrorKind::Label, "record " + who + ": unknown label '" + label + "'");
  r.label = *parsed;
  r.domain = LegalDomain::parse(required_string(j, fields[corpus::field::kDomain], who));
  return r;
}

json to_json(const bio::EntitySpan& s) {
  json j{{"kind", std::string(tag_name(s.kind))}, {"start", s.start}, {"end", s.end}};
  if (s.confidence) j["confidence"] = *s.confidence;
  return j;
}

json to_json(const corpus::CorpusStats& s) {
  json spans = json::object();
  for (EntityKind k : kAllEntityKinds) spans[std::string(tag_name(k))] = s.spans(k);
  json domains = json::object();
  for (const auto& [domain, counts] : s.nli_counts) {
    json d = json::object();
    std::size_t total = 0;
    for (NliLabel l : kAllNliLabels) {
      d[std::string(to_string(l))] = counts[index_of(l)];
      total += counts[index_of(l)];
    }
    d["total"] = total;
    domains[domain.name()] = d;
  }
  return json{{"ner", {{"records", s.ner_records}, {"spans", spans}, {"total_spans", s.total_spans}}},
              {"nli", {{"domains", domains}, {"total", s.total_nli}}}};
}

json to_json(const metrics::PrfScores& s) {
  return json{{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
              {"support", s.support}};
}

json to_json(const metrics::NerEvalReport& r) {
  json j = to_json(r.overall);
  json per_kind = json::object();
  for (EntityKind k : kAllEntityKinds) per_kind[std::string(tag_name(k))] = to_json(r.kind(k));
  j["per_kind"] = per_kind;
  j["macro_f1"] = r.macro_f1;
  return j;
}

json to_json(const metrics::ConfusionMatrix& m) {
  json j = json::object();
  for (NliLabel g : kAllNliLabels) {
    json row = json::object();
    for (NliLabel p : kAllNliLabels) row[std::string(to_string(p))] = m.at(g, p);
    j[std::string(to_string(g))] = row;
  }
  return j;
}

json to_json(const metrics::NliEvalReport& r) {
  json per_label = json::object();
  for (NliLabel l : kAllNliLabels) {
    per_label[std::string(to_string(l))] = to_json(r.per_label[index_of(l)]);
  }
  return json{{"macro_f1", r.macro_f1}, {"per_label", per_label},
              {"confusion", to_json(r.confusion)}};
}

json to_json(const metrics::ErrorClassReport& r) {
  return json{{"first_class", r.first_class}, {"second_class", r.second_class}};
}

json to_json(const metrics::RunAggregate& r) {
  json m = json::object();
  for (const auto& [key, v] : r.metrics) m[key] = json{{"mean", v.mean}, {"std", v.std}};
  return json{{"runs", r.runs}, {"metrics", m}};
}

json to_json(const metrics::AgreementReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs) pairs.push_back(json{{"a", p.a}, {"b", p.b}, {"kappa", p.kappa}});
  json j{{"pairs", pairs}, {"mean_kappa", r.mean_kappa}};
  if (!r.vs_truth.empty()) {
    json truth = json::object();
    for (const auto& [name, s] : r.vs_truth) truth[name] = to_json(s);
    j["vs_truth"] = truth;
    j["mean_f1"] = r.mean_f1;
  }
  return j;
}

namespace {
json to_json(const metrics::CorpusTextStats& s) {
  return json{{"sentences", s.sentences},
              {"mean_sentence_length", s.mean_sentence_length},
              {"mean_char_count", s.mean_char_count},
              {"tag_counts", s.tag_counts}};
}
}  // namespace

json to_json(const metrics::TextStatsReport& r) {
  return json{{"a", to_json(r.a)},
              {"b", to_json(r.b)},
              {"tag_difference_pct", r.tag_difference_pct},
              {"average_difference_pct", r.average_difference_pct},
              {"median_difference_pct", r.median_difference_pct}};
}

json to_json(const splits::SplitPlan& p) {
  return json{{"seed", p.seed},
              {"test_fraction_target", p.test_fraction_target},
              {"train_ids", p.train_ids},
              {"test_ids", p.test_ids}};
}

json to_json(const splits::FoldPlan& p) {
  json folds = json::array();
  for (const auto& f : p.folds) {
    folds.push_back(json{{"held_out_domain", f.held_out_domain.name()},
                         {"train_ids", f.train_ids},
                         {"test_ids", f.test_ids}});
  }
  return json{{"folds", folds}};
}

splits::SplitPlan split_plan_from_json(const json& j) {
  try {
    splits::SplitPlan p;
    p.seed = j.at("seed").get<std::uint64_t>();
    p.test_fraction_target = j.at("test_fraction_target").get<double>();
    p.train_ids = j.at("train_ids").get<std::vector<std::string>>();
    p.test_ids = j.at("test_ids").get<std::vector<std::string>>();
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("split plan: ") + e.what());
  }
}

splits::FoldPlan fold_plan_from_json(const json& j) {
  try {
    splits::FoldPlan p;
    for (const auto& f : j.at("folds")) {
      p.folds.push_back(splits::Fold{LegalDomain::parse(f.at("held_out_domain").get<std::string>()),
                                     f.at("train_ids").get<std::vector<std::string>>(),
                                     f.at("test_ids").get<std::vector<std::string>>()});
    }
    return p;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, std::string("fold plan: ") + e.what());
  }
}

json to_json(const backends::PromptSpec& p) {
  json sections = json::array();
  for (const auto& s : p.sections) sections.push_back(json{{"name", s.name}, {"content", s.content}});
  return json{{"sections", sections}, {"text", p.text()}};
}

json to_json(const backends::Prediction& p) {
  json j{{"id", p.input_id}, {"repeat", p.repeat}, {"failed", p.failed}, {"raw", p.raw},
         {"diagnostics", p.diagnostics}};
  if (p.error_kind) {
    j["error_kind"] = std::string(to_string(*p.error_kind));
    j["error"] = p.error;
  }
  if (p.ner) {
    j[corpus::field::kTags] = tags_json(p.ner->tags);
    if (!p.ner->confidence.empty()) j["confidence"] = p.ner->confidence;
  }
  if (p.nli) j[corpus::field::kLabel] = std::string(to_string(*p.nli));
  return j;
}

json to_json(const backends::BackendConfig& c) {
  return json{{"endpoint", c.endpoint},
              {"model", c.model},
              {"credential_env", c.credential_env},
              {"timeout_seconds", c.timeout_seconds},
              {"retries", c.retries},
              {"backoff_seconds", c.backoff_seconds},
              {"max_concurrency", c.max_concurrency},
              {"temperature", c.temperature},
              {"response_path", c.response_path},
              {"request_logprobs", c.request_logprobs}};
}

json to_json(const pipeline::MatchCandidate& c) {
  json evidence = json::array();
  for (const auto& e : c.evidence) {
    evidence.push_back(json{{"text", e.text}, {"start", e.start}, {"end", e.end},
                            {"confidence", e.confidence}});
  }
  json labels = json::array();
  for (const auto& l : c.labels) {
    labels.push_back(l ? json(std::string(to_string(*l))) : json(nullptr));
  }
  json j{{"input_id", c.input_id}, {"case_id", c.case_id}, {"evidence", evidence},
         {"labels", labels}, {"label", std::string(to_string(c.aggregated))},
         {"flagged", c.flagged}};
  if (c.error) j["error"] = *c.error;
  return j;
}

json to_json(const pipeline::PipelineReport& r) {
  json inputs = json::array();
  for (const auto& in : r.inputs) {
    json cands = json::array();
    json flagged = json::array();
    for (const auto& c : in.candidates) {
      cands.push_back(to_json(c));
      if (c.flagged) flagged.push_back(c.case_id);
    }
    json j{{"id", in.id},
           {"spans", spans_json(in.identified.spans)},
           {"qualifying", spans_json(in.identified.qualifying)},
           {"below_threshold", spans_json(in.identified.below_threshold)},
           {"diagnostics", in.identified.diagnostics},
           {"comparisons", in.comparisons},
           {"candidates", cands},
           {"flagged", flagged}};
    if (in.error) j["error"] = *in.error;
    inputs.push_back(j);
  }
  return json{{"inputs", inputs},
              {"totals",
               {{"inputs", r.total_inputs},
                {"failed_inputs", r.failed_inputs},
                {"qualifying_inputs", r.qualifying_inputs},
                {"comparisons", r.comparisons},
                {"flagged", r.flagged},
                {"errored_comparisons", r.errored_comparisons}}}};
}

std::string dump(const json& j, bool pretty) {
  return j.dump(pretty ? 2 : -1, ' ', false, json::error_handler_t::replace) + "\n";
}

}  // namespace vioscan::json_io
