#pragma once

// Stable JSON shapes for records, plans and reports. Object keys are emitted
// sorted, so equal values always serialize to identical bytes.

#include <string>

#include <json.hpp>

#include "vioscan/backends.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/metrics.hpp"
#include "vioscan/pipeline.hpp"
#include "vioscan/splits.hpp"

namespace vioscan::json_io {

using nlohmann::json;

json to_json(const corpus::NerRecord& r);
json to_json(const corpus::NliRecord& r);
json to_json(const backends::LabeledRecord& r);
corpus::NerRecord ner_record_from_json(const json& j, const corpus::FieldMap& fields = {});
corpus::NliRecord nli_record_from_json(const json& j, const corpus::FieldMap& fields = {});

json to_json(const bio::EntitySpan& s);
json to_json(const corpus::CorpusStats& s);

json to_json(const metrics::PrfScores& s);
json to_json(const metrics::NerEvalReport& r);
json to_json(const metrics::NliEvalReport& r);
json to_json(const metrics::ConfusionMatrix& m);
json to_json(const metrics::ErrorClassReport& r);
json to_json(const metrics::RunAggregate& r);
json to_json(const metrics::AgreementReport& r);
json to_json(const metrics::TextStatsReport& r);

json to_json(const splits::SplitPlan& p);
json to_json(const splits::FoldPlan& p);
splits::SplitPlan split_plan_from_json(const json& j);
splits::FoldPlan fold_plan_from_json(const json& j);

json to_json(const backends::PromptSpec& p);
json to_json(const backends::Prediction& p);
json to_json(const backends::BackendConfig& c);

json to_json(const pipeline::MatchCandidate& c);
json to_json(const pipeline::PipelineReport& r);

// Compact, or two-space indented with `pretty`. Always ends with '\n'.
std::string dump(const json& j, bool pretty = false);

}  // namespace vioscan::json_io
