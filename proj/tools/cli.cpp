#include "cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "vioscan/backends.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/datagen.hpp"
#include "vioscan/error.hpp"
#include "vioscan/http_backend.hpp"
#include "vioscan/json_io.hpp"
#include "vioscan/metrics.hpp"
#include "vioscan/pipeline.hpp"
#include "vioscan/splits.hpp"
#include "vioscan/text.hpp"

namespace vioscan::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Top-level keys are global flags; nested objects are subcommand sections,
// e.g. {"seed": 3, "split": {"coa": {"fraction": 0.25}}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    throw CLI::ConversionError("writing JSON config is not supported");
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be an object");
    std::vector<CLI::ConfigItem> out;
    collect(j, {}, out);
    return out;
  }

 private:
  static void collect(const json& j, const std::vector<std::string>& parents,
                      std::vector<CLI::ConfigItem>& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it->is_object()) {
        auto p = parents;
        p.push_back(it.key());
        collect(*it, p, out);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else {
        item.inputs.push_back(scalar(*it));
      }
      out.push_back(std::move(item));
    }
  }

  static std::string scalar(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }
};

struct Globals {
  std::uint64_t seed = 0;
  std::string format = "jsonl";
  std::string out;
  std::string fields;
  std::string credential_env = backends::BackendConfig{}.credential_env;
  std::size_t max_concurrency = 4;
  bool pretty = false;
};

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_.open(path, std::ios::binary | std::ios::trunc);
      if (!file_) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
      stream_ = &file_;
    }
  }
  std::ostream& stream() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_;
};

std::ofstream open_file(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  return f;
}

std::ifstream open_read(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  return f;
}

std::string slurp(const std::string& path) {
  auto in = open_read(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct BackendOptions {
  std::string kind = "http";
  std::string script;
  backends::BackendConfig config;
};

void add_backend_options(CLI::App* cmd, BackendOptions& o, bool with_temperature = true) {
  cmd->add_option("--backend", o.kind, "http or script")
      ->check(CLI::IsMember({"http", "script"}))
      ->capture_default_str();
  cmd->add_option("--script", o.script, "scripted backend rules (JSON), for --backend script");
  cmd->add_option("--endpoint", o.config.endpoint)->capture_default_str();
  cmd->add_option("--model", o.config.model)->capture_default_str();
  cmd->add_option("--timeout", o.config.timeout_seconds, "seconds per request")->capture_default_str();
  cmd->add_option("--retries", o.config.retries)->capture_default_str();
  cmd->add_option("--backoff", o.config.backoff_seconds, "initial backoff seconds")->capture_default_str();
  cmd->add_option("--response-path", o.config.response_path, "JSON pointer to the reply text")
      ->capture_default_str();
  cmd->add_flag("--logprobs", o.config.request_logprobs, "request token log-probabilities");
  if (with_temperature) {
    cmd->add_option("--temperature", o.config.temperature)->capture_default_str();
  }
}

std::unique_ptr<backends::ChatBackend> make_backend(BackendOptions o, const Globals& g) {
  if (o.kind == "script") {
    if (o.script.empty()) throw Error(ErrorKind::InvalidArgument, "--backend script needs --script");
    return std::make_unique<backends::ScriptedChatBackend>(
        backends::ScriptedChatBackend::parse_script(slurp(o.script)));
  }
  o.config.credential_env = g.credential_env;
  o.config.max_concurrency = static_cast<int>(g.max_concurrency);
  o.config.check();
  return std::make_unique<backends::HttpChatBackend>(o.config);
}

std::vector<corpus::NerRecord> load_ner(const std::string& path, const Globals& g,
                                        const std::string& format = {}) {
  return corpus::load_ner(path, corpus::parse_ner_format(format.empty() ? g.format : format),
                          corpus::FieldMap::parse(g.fields));
}

std::vector<corpus::NliRecord> load_nli(const std::string& path, const Globals& g) {
  return corpus::load_nli(path, corpus::FieldMap::parse(g.fields));
}

template <class Record>
std::vector<backends::LabeledRecord> labeled(std::vector<Record> records) {
  return {std::make_move_iterator(records.begin()), std::make_move_iterator(records.end())};
}

void write_records(std::ostream& out, std::span<const backends::LabeledRecord> records,
                   backends::Task task) {
  if (task == backends::Task::Ner) {
    std::vector<corpus::NerRecord> ner;
    for (const auto& r : records) ner.push_back(std::get<corpus::NerRecord>(r));
    corpus::write_ner(out, ner, corpus::NerFormat::Jsonl);
  } else {
    std::vector<corpus::NliRecord> nli;
    for (const auto& r : records) nli.push_back(std::get<corpus::NliRecord>(r));
    corpus::write_nli(out, nli);
  }
}

template <class Value, class Gold, class IdOf>
std::vector<std::vector<Value>> align_runs(const std::map<int, std::map<std::string, Value>>& runs,
                                           const std::vector<Gold>& gold, IdOf id_of) {
  if (runs.empty()) throw Error(ErrorKind::Evaluation, "prediction file is empty");
  std::vector<std::vector<Value>> out;
  for (const auto& [run, by_id] : runs) {
    std::vector<Value> row;
    row.reserve(gold.size());
    std::set<std::string> used;
    for (const auto& g : gold) {
      auto it = by_id.find(id_of(g));
      if (it == by_id.end()) {
        throw Error(ErrorKind::Evaluation,
                    "run " + std::to_string(run) + " has no prediction for '" + id_of(g) + "'");
      }
      used.insert(it->first);
      row.push_back(it->second);
    }
    for (const auto& [id, v] : by_id) {
      if (!used.contains(id)) {
        throw Error(ErrorKind::Evaluation,
                    "run " + std::to_string(run) + " predicts unknown id '" + id + "'");
      }
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<metrics::TaggedSentence> load_sentences(const std::string& path, const std::string& tags_field,
                                                    bool heuristic) {
  auto in = open_read(path);
  std::vector<metrics::TaggedSentence> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      metrics::TaggedSentence s;
      if (j.contains("tokens")) {
        s.tokens = j.at("tokens").get<std::vector<std::string>>();
      } else if (j.contains("text")) {
        s.tokens = text::tokenize(j.at("text").get<std::string>());
      } else {
        throw Error(ErrorKind::Schema, "sentence without tokens or text", number);
      }
      if (heuristic) {
        s.tags = metrics::heuristic_shape_tags(s.tokens);
      } else if (j.contains(tags_field)) {
        s.tags = j.at(tags_field).get<std::vector<std::string>>();
      } else {
        throw Error(ErrorKind::Schema,
                    "sentence without '" + tags_field + "' (use --heuristic-tags to derive them)", number);
      }
      out.push_back(std::move(s));
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse, e.what(), number);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, e.what(), number);
    }
  }
  return out;
}

int exit_for(const Error& e) { return e.kind() == ErrorKind::InvalidArgument ? kUsage : kFailure; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Legal violation corpus, evaluation and pipeline tool", "vioscan"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file mirroring the flags; flags given on the command line win");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "random seed")->capture_default_str();
  app.add_option("--format", g.format, "NER corpus format for inputs (jsonl|conll)")
      ->check(CLI::IsMember({"jsonl", "conll"}))
      ->capture_default_str();
  app.add_option("--out", g.out, "write results here instead of stdout");
  app.add_option("--fields", g.fields, "field renames, canonical=external,...");
  app.add_option("--credential-env", g.credential_env, "environment variable holding the API key")
      ->capture_default_str();
  app.add_option("--max-concurrency", g.max_concurrency)->check(CLI::PositiveNumber)->capture_default_str();
  app.add_flag("--pretty", g.pretty, "pretty-print JSON");

  std::function<int()> action;

  auto emit = [&](const json& j) {
    Sink sink(g.out, out);
    sink.stream() << json_io::dump(j, g.pretty);
  };

  // convert
  struct {
    std::string in, task = "ner", from, to = "jsonl";
  } conv;
  auto* convert = app.add_subcommand("convert", "convert between corpus formats");
  convert->add_option("--in", conv.in)->required()->check(CLI::ExistingFile);
  convert->add_option("--task", conv.task)->check(CLI::IsMember({"ner", "nli"}))->capture_default_str();
  convert->add_option("--from", conv.from, "input NER format (default: --format)");
  convert->add_option("--to", conv.to, "output NER format")->check(CLI::IsMember({"jsonl", "conll"}))
      ->capture_default_str();
  convert->callback([&] {
    action = [&] {
      Sink sink(g.out, out);
      if (conv.task == "ner") {
        corpus::write_ner(sink.stream(), load_ner(conv.in, g, conv.from), corpus::parse_ner_format(conv.to));
      } else {
        corpus::write_nli(sink.stream(), load_nli(conv.in, g));
      }
      return kOk;
    };
  });

  // stats
  struct {
    std::string ner, nli, policy = "strict";
  } st;
  auto* stats = app.add_subcommand("stats", "entity and label counts");
  stats->add_option("--ner", st.ner)->check(CLI::ExistingFile);
  stats->add_option("--nli", st.nli)->check(CLI::ExistingFile);
  stats->add_option("--policy", st.policy, "repair policy for decoding")->capture_default_str();
  stats->callback([&] {
    action = [&] {
      if (st.ner.empty() && st.nli.empty()) {
        throw Error(ErrorKind::InvalidArgument, "stats needs --ner and/or --nli");
      }
      const auto policy = bio::parse_repair_policy(st.policy);
      const auto ner = st.ner.empty() ? std::vector<corpus::NerRecord>{} : load_ner(st.ner, g);
      const auto nli = st.nli.empty() ? std::vector<corpus::NliRecord>{} : load_nli(st.nli, g);
      emit(json_io::to_json(corpus::compute_stats(ner, nli, policy)));
      return kOk;
    };
  });

  // validate
  std::string validate_in;
  auto* validate = app.add_subcommand("validate", "check IOB2 well-formedness of a NER corpus");
  validate->add_option("--in", validate_in)->required()->check(CLI::ExistingFile);
  validate->callback([&] {
    action = [&] {
      const auto records = load_ner(validate_in, g);
      json violations = json::array();
      for (const auto& r : records) {
        for (const auto& v : bio::validate(r.tags)) {
          violations.push_back({{"id", r.id}, {"index", v.index}, {"description", v.description}});
        }
      }
      const bool ok = violations.empty();
      emit({{"records", records.size()}, {"violations", violations}, {"valid", ok}});
      if (!ok) err << "vioscan: " << violations.size() << " IOB2 violation(s)\n";
      return ok ? kOk : kInvalid;
    };
  });

  // split
  auto* split = app.add_subcommand("split", "leakage-safe splits");
  split->require_subcommand(1);
  struct {
    std::string in;
    double fraction = 0.2;
  } coa;
  auto* split_coa = split->add_subcommand("coa", "group NER records by cause of action");
  split_coa->add_option("--in", coa.in)->required()->check(CLI::ExistingFile);
  split_coa->add_option("--fraction", coa.fraction, "target test fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  split_coa->callback([&] {
    action = [&] {
      emit(json_io::to_json(splits::coa_split(load_ner(coa.in, g), coa.fraction, g.seed)));
      return kOk;
    };
  });
  std::string loo_in;
  auto* split_loo = split->add_subcommand("loo", "leave one legal domain out (NLI)");
  split_loo->add_option("--in", loo_in)->required()->check(CLI::ExistingFile);
  split_loo->callback([&] {
    action = [&] {
      emit(json_io::to_json(splits::leave_one_out(load_nli(loo_in, g))));
      return kOk;
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "score predictions against gold");
  eval->require_subcommand(1);
  struct {
    std::string gold, pred, policy = "promote";
  } ev_ner;
  auto* eval_ner = eval->add_subcommand("ner", "exact-span precision, recall and F1");
  eval_ner->add_option("--gold", ev_ner.gold)->required()->check(CLI::ExistingFile);
  eval_ner->add_option("--pred", ev_ner.pred, "JSONL {id, ner_tags, repeat?}")
      ->required()
      ->check(CLI::ExistingFile);
  eval_ner->add_option("--policy", ev_ner.policy, "repair policy for predictions")->capture_default_str();
  eval_ner->callback([&] {
    action = [&] {
      const auto policy = bio::parse_repair_policy(ev_ner.policy);
      const auto gold = load_ner(ev_ner.gold, g);
      const auto preds = corpus::load_ner_predictions(ev_ner.pred, corpus::FieldMap::parse(g.fields));
      const auto rows = align_runs(preds, gold, [](const corpus::NerRecord& r) { return r.id; });
      json reports = json::array();
      std::vector<metrics::MetricMap> flat;
      auto run_it = preds.begin();
      for (const auto& row : rows) {
        const auto report = metrics::eval_ner(gold, row, policy);
        reports.push_back({{"repeat", (run_it++)->first}, {"report", json_io::to_json(report)}});
        flat.push_back(metrics::flatten(report));
      }
      emit({{"runs", reports}, {"aggregate", json_io::to_json(metrics::aggregate_runs(flat))}});
      return kOk;
    };
  });

  struct {
    std::string gold, pred;
  } ev_nli;
  auto* eval_nli = eval->add_subcommand("nli", "macro-F1 and error classes");
  eval_nli->add_option("--gold", ev_nli.gold)->required()->check(CLI::ExistingFile);
  eval_nli->add_option("--pred", ev_nli.pred, "JSONL {id, label, repeat?}")
      ->required()
      ->check(CLI::ExistingFile);
  eval_nli->callback([&] {
    action = [&] {
      const auto gold = load_nli(ev_nli.gold, g);
      const auto preds = corpus::load_nli_predictions(ev_nli.pred, corpus::FieldMap::parse(g.fields));
      const auto rows = align_runs(preds, gold, [](const corpus::NliRecord& r) { return r.id; });
      std::vector<NliLabel> gold_labels;
      for (const auto& r : gold) gold_labels.push_back(r.label);
      json reports = json::array();
      std::vector<metrics::MetricMap> flat;
      auto run_it = preds.begin();
      for (const auto& row : rows) {
        const auto report = metrics::eval_nli(gold_labels, row);
        reports.push_back({{"repeat", (run_it++)->first},
                           {"report", json_io::to_json(report)},
                           {"error_classes", json_io::to_json(metrics::error_classes(report.confusion))}});
        flat.push_back(metrics::flatten(report));
      }
      emit({{"runs", reports}, {"aggregate", json_io::to_json(metrics::aggregate_runs(flat))}});
      return kOk;
    };
  });

  // agreement
  struct {
    std::vector<std::string> files;
    std::string truth;
    std::optional<double> min_kappa;
  } agr;
  auto* agreement = app.add_subcommand("agreement", "pairwise kappa and judgments vs true provenance");
  agreement->add_option("--annotations", agr.files, "one JSONL {id, provenance} file per annotator")
      ->required()
      ->check(CLI::ExistingFile);
  agreement->add_option("--truth", agr.truth, "JSONL with the true provenance per id")
      ->check(CLI::ExistingFile);
  agreement->add_option("--min-kappa", agr.min_kappa, "exit 3 when the mean kappa is below this");
  agreement->callback([&] {
    action = [&] {
      std::vector<metrics::AnnotatorLabels> annotators;
      std::set<std::string> names;
      for (const auto& f : agr.files) {
        std::string name = fs::path(f).stem().string();
        for (int i = 2; names.contains(name); ++i) name = fs::path(f).stem().string() + "#" + std::to_string(i);
        names.insert(name);
        annotators.push_back({name, corpus::load_provenance_labels(f, corpus::FieldMap::parse(g.fields))});
      }
      std::optional<corpus::ProvenanceLabels> truth;
      if (!agr.truth.empty()) {
        truth = corpus::load_provenance_labels(agr.truth, corpus::FieldMap::parse(g.fields));
      }
      const auto report = metrics::agreement(annotators, truth ? &*truth : nullptr);
      emit(json_io::to_json(report));
      if (agr.min_kappa && report.mean_kappa < *agr.min_kappa) {
        err << "vioscan: mean kappa " << report.mean_kappa << " is below " << *agr.min_kappa << "\n";
        return kInvalid;
      }
      return kOk;
    };
  });

  // textstats
  struct {
    std::string a, b, tags_field = "pos_tags";
    bool heuristic = false;
  } ts;
  auto* textstats = app.add_subcommand("textstats", "compare two corpora's surface statistics");
  textstats->add_option("--a", ts.a, "JSONL {tokens|text, <tags field>}")->required()->check(CLI::ExistingFile);
  textstats->add_option("--b", ts.b)->required()->check(CLI::ExistingFile);
  textstats->add_option("--tags-field", ts.tags_field)->capture_default_str();
  textstats->add_flag("--heuristic-tags", ts.heuristic, "derive coarse word-shape tags instead of reading them");
  textstats->callback([&] {
    action = [&] {
      const auto a = load_sentences(ts.a, ts.tags_field, ts.heuristic);
      const auto b = load_sentences(ts.b, ts.tags_field, ts.heuristic);
      emit(json_io::to_json(metrics::text_stats(a, b)));
      return kOk;
    };
  });

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "identify violations and resolve against settled cases");
  pipeline_cmd->require_subcommand(1);
  struct {
    std::string inputs, cases, ner_train, nli_train, policy = "promote";
    double tau = pipeline::PipelineConfig{}.tau;
    std::size_t shots = backends::FewShotSpec{}.shots;
    int nli_repeats = 1;
    std::vector<std::string> domains;
    BackendOptions backend;
  } pl;
  auto* pipeline_run = pipeline_cmd->add_subcommand("run", "run the two-stage pipeline");
  pipeline_run->add_option("--inputs", pl.inputs, "JSONL {id, text}")->required()->check(CLI::ExistingFile);
  pipeline_run->add_option("--cases", pl.cases, "JSONL {id, summary, domain, metadata}")
      ->required()
      ->check(CLI::ExistingFile);
  pipeline_run->add_option("--tau", pl.tau, "span confidence threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  pipeline_run->add_option("--ner-train", pl.ner_train, "NER few-shot pool")->check(CLI::ExistingFile);
  pipeline_run->add_option("--nli-train", pl.nli_train, "NLI few-shot pool")->check(CLI::ExistingFile);
  pipeline_run->add_option("--shots", pl.shots, "few-shot examples per prompt")->capture_default_str();
  pipeline_run->add_option("--nli-repeats", pl.nli_repeats, "NLI votes per pair")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  pipeline_run->add_option("--domain", pl.domains, "only compare against cases in these domains");
  pipeline_run->add_option("--policy", pl.policy)->capture_default_str();
  add_backend_options(pipeline_run, pl.backend);
  pipeline_run->callback([&] {
    action = [&] {
      pipeline::PipelineConfig config;
      config.tau = pl.tau;
      config.policy = bio::parse_repair_policy(pl.policy);
      config.max_concurrency = g.max_concurrency;
      config.nli_repeats = pl.nli_repeats;
      if (!pl.domains.empty()) {
        config.domain_filter.emplace();
        for (const auto& d : pl.domains) config.domain_filter->insert(LegalDomain::parse(d));
      }
      config.check();
      const auto inputs = pipeline::load_inputs(pl.inputs);
      const auto cases = pipeline::load_cases(pl.cases);
      auto ner_pool = pl.ner_train.empty() ? std::vector<corpus::NerRecord>{} : load_ner(pl.ner_train, g);
      auto nli_pool = pl.nli_train.empty() ? std::vector<corpus::NliRecord>{} : load_nli(pl.nli_train, g);
      backends::FewShotSpec spec;
      spec.shots = pl.shots;
      spec.seed = g.seed;
      auto backend = make_backend(pl.backend, g);
      backends::LlmTokenTagger tagger(*backend, std::move(ner_pool), spec, config.policy);
      backends::LlmNliClassifier classifier(*backend, std::move(nli_pool), spec);
      const auto report = pipeline::run(inputs, cases, tagger, classifier, config);
      emit(json_io::to_json(report));
      for (const auto& r : report.inputs) {
        if (r.error) err << "vioscan: input '" << r.id << "': " << *r.error << "\n";
      }
      return report.all_failed() ? kFailure : kOk;
    };
  });

  // fewshot
  auto* fewshot = app.add_subcommand("fewshot", "few-shot prompting of a chat model");
  fewshot->require_subcommand(1);
  struct {
    std::string task = "ner", train, inputs, policy = "promote";
    std::size_t shots = backends::FewShotSpec{}.shots;
    int repeats = backends::FewShotSpec{}.repeats;
    BackendOptions backend;
  } fs_opt;
  auto* predict = fewshot->add_subcommand("predict", "predict tags or labels for each input, per repeat");
  predict->add_option("--task", fs_opt.task)->check(CLI::IsMember({"ner", "nli"}))->capture_default_str();
  predict->add_option("--train", fs_opt.train, "few-shot pool")->required()->check(CLI::ExistingFile);
  predict->add_option("--inputs", fs_opt.inputs, "records to predict")->required()->check(CLI::ExistingFile);
  predict->add_option("--shots", fs_opt.shots)->capture_default_str();
  predict->add_option("--repeats", fs_opt.repeats)->check(CLI::PositiveNumber)->capture_default_str();
  predict->add_option("--policy", fs_opt.policy, "repair policy for model output")->capture_default_str();
  add_backend_options(predict, fs_opt.backend);
  predict->callback([&] {
    action = [&] {
      backends::FewShotSpec spec;
      spec.task = backends::parse_task(fs_opt.task);
      spec.shots = fs_opt.shots;
      spec.repeats = fs_opt.repeats;
      spec.seed = g.seed;
      std::vector<backends::LabeledRecord> pool, inputs;
      std::map<std::string, std::size_t> lengths;
      if (spec.task == backends::Task::Ner) {
        pool = labeled(load_ner(fs_opt.train, g));
        auto in = load_ner(fs_opt.inputs, g);
        for (const auto& r : in) lengths[r.id] = r.tokens.size();
        inputs = labeled(std::move(in));
      } else {
        pool = labeled(load_nli(fs_opt.train, g));
        inputs = labeled(load_nli(fs_opt.inputs, g));
      }
      auto backend = make_backend(fs_opt.backend, g);
      backends::BatchOptions options;
      options.max_concurrency = g.max_concurrency;
      options.policy = bio::parse_repair_policy(fs_opt.policy);
      const auto predictions = backends::predict_batch(*backend, spec, pool, inputs, options);
      Sink sink(g.out, out);
      std::size_t failed = 0;
      for (const auto& p : predictions) {
        if (p.failed) {
          ++failed;
          err << "vioscan: " << p.input_id << " repeat " << p.repeat << ": " << p.error << "\n";
        }
        sink.stream() << json_io::dump(
            json_io::to_json(backends::with_fallback(p, spec.task, lengths[p.input_id])));
      }
      return !predictions.empty() && failed == predictions.size() ? kFailure : kOk;
    };
  });

  // datagen
  auto* datagen = app.add_subcommand("datagen", "generate and review synthetic records");
  datagen->require_subcommand(1);
  struct {
    std::string spec, wording, accepted;
    bool dedup = false;
    BackendOptions backend;
  } gen;
  auto add_gen_options = [&](CLI::App* cmd) {
    cmd->add_option("--spec", gen.spec, "JSONL generation specs")->required()->check(CLI::ExistingFile);
    cmd->add_option("--wording", gen.wording, "JSON prompt wording overrides")->check(CLI::ExistingFile);
    cmd->add_option("--accepted", gen.accepted, "also write accepted records here");
    cmd->add_flag("--dedup", gen.dedup, "reject exact duplicates");
    add_backend_options(cmd, gen.backend);
  };
  auto gen_action = [&](backends::Task task) {
    return [&, task] {
      const auto wording = gen.wording.empty() ? datagen::default_wording()
                                               : datagen::PromptWording::from_json_text(slurp(gen.wording));
      auto backend = make_backend(gen.backend, g);
      auto in = open_read(gen.spec);
      const auto batch =
          task == backends::Task::Ner
              ? datagen::generate_batch(datagen::read_ner_gen_specs(in), *backend, gen.dedup,
                                        g.max_concurrency, wording)
              : datagen::generate_batch(datagen::read_nli_gen_specs(in), *backend, gen.dedup,
                                        g.max_concurrency, wording);
      {
        Sink sink(g.out, out);
        datagen::write_review(sink.stream(), datagen::to_review(batch));
      }
      if (!gen.accepted.empty()) {
        auto f = open_file(gen.accepted);
        write_records(f, batch.accepted(), task);
      }
      err << "vioscan: " << batch.accepted_count() << " accepted, " << batch.rejected_count()
          << " rejected\n";
      return kOk;
    };
  };
  auto* gen_ner = datagen->add_subcommand("ner", "generate NER passages");
  add_gen_options(gen_ner);
  gen_ner->callback([&] { action = gen_action(backends::Task::Ner); });
  auto* gen_nli = datagen->add_subcommand("nli", "generate NLI hypotheses");
  add_gen_options(gen_nli);
  gen_nli->callback([&] { action = gen_action(backends::Task::Nli); });

  struct {
    std::vector<std::string> sections;
    BackendOptions backend;
  } sum;
  auto* summarize = datagen->add_subcommand("summarize", "reduce document sections to their legal grounds");
  summarize->add_option("--section", sum.sections, "text file, one per section, in order")
      ->required()
      ->check(CLI::ExistingFile);
  add_backend_options(summarize, sum.backend);
  summarize->callback([&] {
    action = [&] {
      std::vector<std::string> sections;
      for (const auto& f : sum.sections) sections.push_back(slurp(f));
      const auto prompt = datagen::render_summary_prompt(sections);
      auto backend = make_backend(sum.backend, g);
      emit({{"summary", backend->complete(prompt).text}});
      return kOk;
    };
  });

  struct {
    std::string in, task = "ner";
  } rexp;
  auto* review_export = datagen->add_subcommand("review-export", "turn a corpus into a review file");
  review_export->add_option("--in", rexp.in)->required()->check(CLI::ExistingFile);
  review_export->add_option("--task", rexp.task)->check(CLI::IsMember({"ner", "nli"}))->capture_default_str();
  review_export->callback([&] {
    action = [&] {
      const auto records = rexp.task == "ner" ? labeled(load_ner(rexp.in, g)) : labeled(load_nli(rexp.in, g));
      std::vector<datagen::ReviewItem> items;
      for (const auto& r : records) {
        datagen::ReviewItem item;
        item.item_id = backends::record_id(r);
        item.parsed = r;
        items.push_back(std::move(item));
      }
      Sink sink(g.out, out);
      datagen::write_review(sink.stream(), items);
      return kOk;
    };
  });

  struct {
    std::string review, task = "ner";
  } rimp;
  auto* review_import = datagen->add_subcommand("review-import", "merge reviewer verdicts into a corpus");
  review_import->add_option("--review", rimp.review)->required()->check(CLI::ExistingFile);
  review_import->add_option("--task", rimp.task)->check(CLI::IsMember({"ner", "nli"}))->capture_default_str();
  review_import->callback([&] {
    action = [&] {
      const auto task = backends::parse_task(rimp.task);
      auto in = open_read(rimp.review);
      const auto items = datagen::read_review(in, task);
      const auto merged = datagen::merge_review(items);
      Sink sink(g.out, out);
      write_records(sink.stream(), merged, task);
      err << "vioscan: kept " << merged.size() << " of " << items.size() << " reviewed items\n";
      return kOk;
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "vioscan: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    err << "vioscan: " << e.what() << "\n";
    return exit_for(e);
  }

  if (!action) {
    err << "vioscan: no command given\n";
    return kUsage;
  }
  try {
    return action();
  } catch (const Error& e) {
    err << "vioscan: " << e.what() << "\n";
    return exit_for(e);
  } catch (const std::exception& e) {
    err << "vioscan: " << e.what() << "\n";
    return kFailure;
  }
}

}  // namespace vioscan::cli
