// One line per acceptance criterion. Exit status is nonzero iff any line is FAIL.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "cli.hpp"
#include "mock_server.hpp"
#include "support.hpp"
#include "vioscan/backends.hpp"
#include "vioscan/bio.hpp"
#include "vioscan/datagen.hpp"
#include "vioscan/error.hpp"
#include "vioscan/json_io.hpp"
#include "vioscan/metrics.hpp"
#include "vioscan/pipeline.hpp"
#include "vioscan/splits.hpp"
#include "vioscan/text.hpp"

using namespace vioscan;
using bio::BioTag;
using bio::RepairPolicy;
using nlohmann::json;

namespace {

int failures = 0;

void report(const char* id, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << id << "  " << detail << "\n";
  if (!ok) ++failures;
}

void blocked(const char* id, const std::string& detail) { std::cout << "BLOCKED " << id << "  " << detail << "\n"; }

// Runs a check; an escaped exception is a failure with its message.
void criterion(const char* id, const std::function<std::pair<bool, std::string>()>& check) {
  try {
    const auto [ok, detail] = check();
    report(id, ok, detail);
  } catch (const std::exception& e) {
    report(id, false, std::string("exception: ") + e.what());
  }
}

double prf1(std::size_t tp, std::size_t pred, std::size_t gold) {
  const double p = pred ? double(tp) / double(pred) : 0.0;
  const double r = gold ? double(tp) / double(gold) : 0.0;
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

std::pair<bool, std::string> ac1() {
  const double f = metrics::f1_from_pr(0.5658, 0.7030);
  char buf[96];
  std::snprintf(buf, sizeof buf, "f1_from_pr(0.5658, 0.7030) = %.6f, want 0.6269 +/- 0.0005", f);
  return {std::fabs(f - 0.6269) <= 0.0005, buf};
}

std::pair<bool, std::string> ac3() {
  constexpr int kCorpora = 1000;
  double worst = 0;
  for (int t = 0; t < kCorpora; ++t) {
    std::mt19937_64 rng(1000 + t);
    std::vector<corpus::NerRecord> gold;
    std::vector<bio::TagSequence> pred;
    std::size_t tp = 0, np = 0, ng = 0;
    std::array<std::size_t, 4> ktp{}, kp{}, kg{};
    const std::size_t records = 1 + rng() % 10;
    for (std::size_t r = 0; r < records; ++r) {
      const std::size_t n = 1 + rng() % 20;
      const auto g = support::random_spans(rng, n);
      // Half the predictions are well-formed span sets, half arbitrary tag soup.
      const auto p = rng() % 2 ? bio::encode_spans(support::random_spans(rng, n), n) : support::random_tags(rng, n);
      gold.push_back(support::ner_record("r" + std::to_string(r), std::vector<std::string>(n, "w"),
                                         bio::encode_spans(g, n)));
      pred.push_back(p);
      const auto gs = support::triples(g);
      const auto ps = support::reference_decode(p, RepairPolicy::PromoteInsideToBegin);
      ng += gs.size();
      np += ps.size();
      for (const auto& x : gs) ++kg[std::get<0>(x)];
      for (const auto& x : ps) {
        ++kp[std::get<0>(x)];
        if (gs.contains(x)) ++tp, ++ktp[std::get<0>(x)];
      }
    }
    const auto rep = metrics::eval_ner(gold, pred);
    const double p = np ? double(tp) / double(np) : 0.0;
    const double r = ng ? double(tp) / double(ng) : 0.0;
    worst = std::max({worst, std::fabs(rep.overall.precision - p), std::fabs(rep.overall.recall - r),
                      std::fabs(rep.overall.f1 - prf1(tp, np, ng))});
    double macro = 0;
    for (int k = 0; k < 4; ++k) {
      const double f = prf1(ktp[k], kp[k], kg[k]);
      worst = std::max(worst, std::fabs(rep.per_kind[k].f1 - f));
      macro += f / 4;
    }
    worst = std::max(worst, std::fabs(rep.macro_f1 - macro));
  }
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d corpora vs span-set oracle, max |delta| = %.3g (< 1e-12)", kCorpora, worst);
  return {worst < 1e-12, buf};
}

std::pair<bool, std::string> ac4() {
  constexpr int kVectors = 1000;
  double worst = 0;
  for (int t = 0; t < kVectors; ++t) {
    std::mt19937_64 rng(2000 + t);
    const std::size_t n = 1 + rng() % 50;
    std::vector<NliLabel> g(n), p(n);
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = static_cast<NliLabel>(rng() % 3);
      p[i] = rng() % 3 ? static_cast<NliLabel>(rng() % 3) : g[i];
    }
    double c[3][3] = {};
    for (std::size_t i = 0; i < n; ++i) c[index_of(g[i])][index_of(p[i])] += 1;
    double macro = 0, po = 0, pe = 0;
    for (int k = 0; k < 3; ++k) {
      const double row = c[k][0] + c[k][1] + c[k][2];
      const double col = c[0][k] + c[1][k] + c[2][k];
      const double prec = col ? c[k][k] / col : 0.0, rec = row ? c[k][k] / row : 0.0;
      macro += (prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0) / 3;
      po += c[k][k] / double(n);
      pe += row * col / (double(n) * double(n));
    }
    const double kappa = pe >= 1 ? (po >= 1 ? 1.0 : 0.0) : (po - pe) / (1 - pe);
    worst = std::max({worst, std::fabs(metrics::eval_nli(g, p).macro_f1 - macro),
                      std::fabs(metrics::cohen_kappa(g, p) - kappa)});
  }
  using L = NliLabel;
  const std::vector<int> a{1, 0, 1, 1}, b{1, 1, 1, 0};
  const std::vector<L> gold{L::Entailment, L::Contradiction, L::Neutral, L::Entailment};
  const std::vector<L> pred{L::Entailment, L::Neutral, L::Neutral, L::Contradiction};
  const bool self = metrics::cohen_kappa(a, a) == 1.0;
  const bool third = std::fabs(metrics::cohen_kappa(a, b) + 1.0 / 3.0) < 1e-12;
  const bool ninths = std::fabs(metrics::eval_nli(gold, pred).macro_f1 - 4.0 / 9.0) < 1e-12;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d vectors, max |delta| = %.3g (< 1e-12); kappa(a,a)=1 %s, kappa=-1/3 %s, macro-F1=4/9 %s",
                kVectors, worst, self ? "ok" : "WRONG", third ? "ok" : "WRONG", ninths ? "ok" : "WRONG");
  return {worst < 1e-12 && self && third && ninths, buf};
}

std::pair<bool, std::string> ac5() {
  constexpr int kSequences = 10000;
  int round_trip_bad = 0, policy_bad = 0;
  for (int t = 0; t < kSequences; ++t) {
    std::mt19937_64 rng(3000 + t);
    const std::size_t n = rng() % 30;
    const auto spans = support::random_spans(rng, n);
    const auto tags = bio::encode_spans(spans, n);
    if (support::triples(bio::decode_spans(tags, RepairPolicy::Strict)) != support::triples(spans) ||
        bio::encode_spans(bio::decode_spans(tags, RepairPolicy::Strict), n) != tags) {
      ++round_trip_bad;
    }

    const auto soup = support::random_tags(rng, n);
    bool strict_threw = false;
    try {
      const auto s = bio::decode_spans(soup, RepairPolicy::Strict);
      if (support::triples(s) != support::reference_decode(soup, RepairPolicy::PromoteInsideToBegin)) ++policy_bad;
    } catch (const Error& e) {
      strict_threw = e.kind() == ErrorKind::Scheme;
      if (!strict_threw) ++policy_bad;
    }
    if (strict_threw == bio::validate(soup).empty()) ++policy_bad;
    for (auto policy : {RepairPolicy::PromoteInsideToBegin, RepairPolicy::DropDangling}) {
      const auto decoded = bio::decode_spans(soup, policy);
      if (support::triples(decoded) != support::reference_decode(soup, policy)) ++policy_bad;
      if (!bio::validate(bio::repair(soup, policy)).empty()) ++policy_bad;
      for (const auto& s : decoded) {
        if (s.start >= s.end || s.end > n) ++policy_bad;
      }
    }
  }
  return {round_trip_bad == 0 && policy_bad == 0,
          std::to_string(kSequences) + " sequences: " + std::to_string(round_trip_bad) +
              " round-trip mismatches, " + std::to_string(policy_bad) + " repair-policy violations"};
}

std::pair<bool, std::string> ac6() {
  constexpr int kCorpora = 500;
  const char* coas[] = {"TCPA", "FDCPA", "FLSA", "BIPA", "ADA", "CCPA", "UCL"};
  int bad = 0, checked = 0;
  for (int t = 0; checked < kCorpora; ++t) {
    std::mt19937_64 rng(4000 + t);
    std::vector<corpus::NerRecord> recs;
    const std::size_t n = 2 + rng() % 60;
    for (std::size_t i = 0; i < n; ++i) {
      auto r = support::ner_record("r" + std::to_string(i), {"w"}, {BioTag::outside()});
      if (rng() % 10) r.cause_of_action = coas[rng() % 7];
      recs.push_back(r);
    }
    std::set<std::string> groups;
    for (const auto& r : recs) groups.insert(r.cause_of_action.value_or(""));
    if (groups.size() < 2) continue;
    const double fraction = 0.05 + 0.9 * double(rng() % 1000) / 1000.0;
    const std::uint64_t seed = rng();
    const auto plan = splits::coa_split(recs, fraction, seed);
    const auto again = splits::coa_split(recs, fraction, seed);
    ++checked;
    if (plan.train_ids != again.train_ids || plan.test_ids != again.test_ids) ++bad;
    if (plan.train_ids.size() + plan.test_ids.size() != n) ++bad;
    const std::set<std::string> test(plan.test_ids.begin(), plan.test_ids.end());
    std::set<std::string> all(plan.train_ids.begin(), plan.train_ids.end());
    all.insert(test.begin(), test.end());
    if (all.size() != n) ++bad;
    std::map<std::string, std::set<bool>> side;
    for (const auto& r : recs) side[r.cause_of_action.value_or("")].insert(test.contains(r.id));
    for (const auto& [g, s] : side) {
      if (s.size() != 1) ++bad;
    }
  }
  return {bad == 0,
          std::to_string(checked) + " random corpora/seeds: " + std::to_string(bad) +
              " plans not CoA-disjoint, exhaustive and deterministic"};
}

class ConfidenceTagger : public backends::TokenTagger {
 public:
  explicit ConfidenceTagger(std::map<std::string, double> c) : c_(std::move(c)) {}
  backends::TaggedPrediction tag(const std::string& id, std::span<const std::string> tokens) override {
    backends::TaggedPrediction p;
    p.tags.assign(tokens.size(), BioTag::outside());
    p.confidence.assign(tokens.size(), 0.0);
    if (auto it = c_.find(id); it != c_.end()) {
      p.tags[0] = BioTag::begin(EntityKind::Violation);
      p.confidence[0] = it->second;
    }
    return p;
  }

 private:
  std::map<std::string, double> c_;
};

std::pair<bool, std::string> ac7() {
  std::vector<pipeline::SettlementCase> cases;
  for (const char* id : {"C5", "C7", "C9"}) {
    cases.push_back({id, std::string("grounds of ") + id, LegalDomain(LegalDomain::Kind::Tcpa), {}});
  }
  const std::vector<pipeline::PipelineInput> inputs{{"i1", "they kept calling my cell"}, {"i2", "nice day out"}};
  std::vector<corpus::NliRecord> pool;
  for (int i = 0; i < 9; ++i) {
    pool.push_back({"p" + std::to_string(i), "premise", "hypothesis", NliLabel::Neutral, LegalDomain()});
  }
  backends::FewShotSpec spec;
  spec.task = backends::Task::Nli;
  backends::ScriptedChatBackend nli_backend(
      {{"Premise: grounds of C7", "Entailed", {}}, {"Premise: grounds of C5", "Contradict", {}}, {"", "Neutral", {}}});
  backends::LlmNliClassifier classifier(nli_backend, pool, spec);
  ConfidenceTagger one({{"i1", 0.9}});
  pipeline::PipelineConfig config;

  const auto r1 = pipeline::run(inputs, cases, one, classifier, config);
  const auto r2 = pipeline::run(inputs, cases, one, classifier, config);
  const bool identical = json_io::dump(json_io::to_json(r1)) == json_io::dump(json_io::to_json(r2));
  std::vector<std::string> flagged;
  for (const auto& in : r1.inputs) {
    for (const auto& c : in.candidates) {
      if (c.flagged) flagged.push_back(in.id + "/" + c.case_id);
      if (c.flagged != (c.aggregated == NliLabel::Entailment)) flagged.push_back("bad:" + c.case_id);
    }
  }
  const bool three = r1.comparisons == 3;
  const bool only_entailed = flagged == std::vector<std::string>{"i1/C7"};

  // Monotonicity: raising tau never adds qualifying inputs or flagged pairs.
  std::map<std::string, double> conf;
  std::vector<pipeline::PipelineInput> many;
  for (int i = 0; i < 20; ++i) {
    const std::string id = "m" + std::to_string(i);
    many.push_back({id, "some words here"});
    conf[id] = (i % 11) / 10.0;
  }
  ConfidenceTagger graded(conf);
  bool monotone = true;
  std::set<std::string> prev_flagged;
  std::size_t prev_qualifying = SIZE_MAX;
  bool first = true;
  for (double tau : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    config.tau = tau;
    const auto r = pipeline::run(many, cases, graded, classifier, config);
    std::set<std::string> now;
    for (const auto& in : r.inputs) {
      for (const auto& c : in.candidates) {
        if (c.flagged) now.insert(in.id + "/" + c.case_id);
      }
    }
    if (!first && (r.qualifying_inputs > prev_qualifying ||
                   !std::includes(prev_flagged.begin(), prev_flagged.end(), now.begin(), now.end()))) {
      monotone = false;
    }
    const auto again = pipeline::run(many, cases, graded, classifier, config);
    if (json_io::dump(json_io::to_json(r)) != json_io::dump(json_io::to_json(again))) monotone = false;
    prev_flagged = now;
    prev_qualifying = r.qualifying_inputs;
    first = false;
  }
  return {three && only_entailed && identical && monotone,
          "comparisons=" + std::to_string(r1.comparisons) + " (want 3), flagged=" +
              (flagged.empty() ? std::string("none") : flagged[0]) + " (want i1/C7 only), byte-identical=" +
              (identical ? "yes" : "no") + ", tau-monotone over {0,.25,.5,.75,1}=" + (monotone ? "yes" : "no")};
}

std::string ner_jsonl(int n, const std::string& prefix, const std::string& word = "pool") {
  std::string s;
  for (int i = 0; i < n; ++i) {
    s += json{{"id", prefix + std::to_string(i)},
              {"tokens", {"robocalls", "violate", "the", "TCPA", word + std::to_string(i)}},
              {"ner_tags", {"B-VIOLATION", "O", "B-LAW", "I-LAW", "O"}}}
             .dump() +
         "\n";
  }
  return s;
}

std::pair<bool, std::string> ac8() {
  support::TempDir dir;
  const auto train = dir.file("train.jsonl", ner_jsonl(20, "t"));
  const auto inputs = dir.file("inputs.jsonl", ner_jsonl(4, "q", "input"));
  support::MockChatServer server([](const json&, std::size_t) {
    return support::MockChatServer::Reply{200, support::MockChatServer::completion("```\nrobocalls\tB-VIOLATION\n```")};
  });
  ::setenv("VIOSCAN_ACCEPTANCE_KEY", "sk-acceptance", 1);
  std::ostringstream out, err;
  const int code = cli::run({"--credential-env", "VIOSCAN_ACCEPTANCE_KEY", "fewshot", "predict", "--train",
                             train.string(), "--inputs", inputs.string(), "--endpoint", server.endpoint()},
                            out, err);
  const auto calls = server.captured();
  std::map<std::string, int> per_input;
  bool temps = true, blocks = true;
  for (const auto& c : calls) {
    const auto body = json::parse(c.body);
    temps = temps && body.at("temperature").get<double>() == 0.7;
    const auto prompt = body.at("messages").at(0).at("content").get<std::string>();
    int examples = 0;
    for (auto p = prompt.find("Output:"); p != std::string::npos; p = prompt.find("Output:", p + 1)) ++examples;
    blocks = blocks && examples == 9;
    // The input block comes last; its text names the item.
    const auto last = prompt.rfind("Input: ");
    if (last != std::string::npos) ++per_input[std::string(vioscan::text::trim(prompt.substr(last)))];
  }
  bool five = per_input.size() == 4;
  for (const auto& [id, n] : per_input) five = five && n == 5;
  return {code == 0 && calls.size() == 20 && temps && blocks && five,
          "exit=" + std::to_string(code) + ", requests=" + std::to_string(calls.size()) +
              " (want 20), temperature 0.7 " + (temps ? "ok" : "WRONG") + ", 9 example blocks " +
              (blocks ? "ok" : "WRONG") + ", 5 repeats per input " + (five ? "ok" : "WRONG")};
}

std::pair<bool, std::string> ac9() {
  struct Case {
    std::string raw;
    std::vector<bio::EntitySpan> spans;  // marker-implied
    std::size_t tokens;
  };
  using K = EntityKind;
  const std::vector<Case> cases{
      {"[VIOLATION] constant calls on my cell phone from some company that won't quit [VIOLATION]",
       {{K::Violation, 0, 12, {}}}, 12},
      {"They broke [LAW] the TCPA [LAW] yesterday", {{K::Law, 2, 4, {}}}, 5},
      {"[VIOLATED BY] Acme Collections [VIOLATED BY] kept [VIOLATION] texting my number [VIOLATION] "
       "in breach of [LAW] the Fair Debt Collection Practices Act [LAW] , harming [VIOLATED ON] "
       "consumers [VIOLATED ON]",
       {{K::ViolatedBy, 0, 2, {}}, {K::Violation, 3, 6, {}}, {K::Law, 9, 15, {}}, {K::ViolatedOn, 17, 18, {}}},
       18},
  };
  int ok = 0;
  std::string detail;
  for (const auto& c : cases) {
    const auto g = datagen::parse_generated_ner(c.raw);
    if (g.accepted() && g.record->tokens.size() == c.tokens &&
        g.record->tags == bio::encode_spans(c.spans, c.tokens) &&
        bio::encode_spans(bio::decode_spans(g.record->tags, RepairPolicy::Strict), c.tokens) == g.record->tags) {
      ++ok;
    } else {
      detail += " mismatch on: " + c.raw.substr(0, 40);
    }
  }
  const auto bad = datagen::parse_generated_ner("They broke [LAW] unclosed");
  const bool rejected = !bad.accepted() && !bad.diagnostics.empty() &&
                        bad.diagnostics[0].find("unbalanced") != std::string::npos;
  return {ok == static_cast<int>(cases.size()) && rejected,
          std::to_string(ok) + "/" + std::to_string(cases.size()) + " marked excerpts re-encode exactly; unbalanced " +
              (rejected ? "rejected with diagnostic" : "NOT rejected") + detail};
}

}  // namespace

int main() {
  criterion("AC1", ac1);
  blocked("AC2", "published NER/NLI datasets are not available offline; run acceptance_published_data "
                 "with VIOSCAN_NER_DATA and VIOSCAN_NLI_DATA set");
  criterion("AC3", ac3);
  criterion("AC4", ac4);
  criterion("AC5", ac5);
  criterion("AC6", ac6);
  blocked("AC6", "Wage leave-one-out fold of size 13 needs the published NLI data (acceptance_published_data)");
  criterion("AC7", ac7);
  criterion("AC8", ac8);
  criterion("AC9", ac9);
  std::cout << "INFO AC10  not reproducible here: model F1s, annotator kappas 0.0821/0.2149/0.0988, "
               "human-vs-machine F1 44.86%, POS differences 26%/16%; formulas covered by AC3, AC4\n";
  std::cout << (failures ? "acceptance: FAILED\n" : "acceptance: all runnable criteria passed\n");
  return failures ? 1 : 0;
}
