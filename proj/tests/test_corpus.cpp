#include <gtest/gtest.h>

#include <sstream>

#include "support.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/error.hpp"

using namespace vioscan;
using namespace vioscan::corpus;
using bio::BioTag;

namespace {

std::vector<NerRecord> ner_from(const std::string& text, NerFormat f = NerFormat::Jsonl,
                                const FieldMap& fields = {}) {
  std::istringstream in(text);
  return read_ner(in, f, fields);
}

std::vector<NliRecord> nli_from(const std::string& text, const FieldMap& fields = {}) {
  std::istringstream in(text);
  return read_nli(in, fields);
}

Error error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error thrown";
  return Error(ErrorKind::InvalidArgument, "none");
}

}  // namespace

TEST(LoadNer, MinimalConll) {
  const auto r = ner_from("Acme\tB-VIOLATED_BY\n.\tO\n\n", NerFormat::Conll);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, "0");
  EXPECT_EQ(r[0].tokens, (std::vector<std::string>{"Acme", "."}));
  EXPECT_EQ(r[0].tags, (bio::TagSequence{BioTag::begin(EntityKind::ViolatedBy), BioTag::outside()}));
}

TEST(LoadNer, ConllOrdinalsAndDocstart) {
  const auto r = ner_from("-DOCSTART- O\n\nA B-LAW\n\nB O\r\nC I-LAW\n", NerFormat::Conll);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, "0");
  EXPECT_EQ(r[1].id, "1");
  EXPECT_EQ(r[1].tokens.size(), 2u);
}

TEST(LoadNer, LengthMismatchNamesRecord) {
  const auto e = error_of([] {
    ner_from(R"({"id":"rec-7","tokens":["a","b","c","d","e"],"ner_tags":["O","O","O","O"]})");
  });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_NE(e.message().find("rec-7"), std::string::npos);
  EXPECT_EQ(e.line(), 1u);
}

TEST(LoadNer, UnknownTagIsTagErrorWithLine) {
  const auto e = error_of([] {
    ner_from("{\"id\":\"a\",\"tokens\":[\"x\"],\"ner_tags\":[\"O\"]}\n"
             "{\"id\":\"b\",\"tokens\":[\"x\"],\"ner_tags\":[\"B-JUDGE\"]}\n");
  });
  EXPECT_EQ(e.kind(), ErrorKind::Tag);
  EXPECT_EQ(e.line(), 2u);
}

TEST(LoadNer, MalformedJsonIsParseError) {
  const auto e = error_of([] { ner_from("{\"id\": \n"); });
  EXPECT_EQ(e.kind(), ErrorKind::Parse);
  EXPECT_EQ(e.line(), 1u);
}

TEST(LoadNer, RejectsInvalidUtf8) {
  const auto e = error_of([] { ner_from("{\"id\":\"a\",\"tokens\":[\"\xff\"],\"ner_tags\":[\"O\"]}\n"); });
  EXPECT_EQ(e.line(), 1u);
}

TEST(LoadNer, FieldMapAdaptsNames) {
  const auto r = ner_from(R"({"uid":"u1","words":["Acme"],"labels":["B-VIOLATED BY"],"coa":"tcpa"})",
                          NerFormat::Jsonl,
                          FieldMap::parse("id=uid,tokens=words,ner_tags=labels,cause_of_action=coa"));
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].id, "u1");
  EXPECT_EQ(r[0].cause_of_action, "tcpa");
  EXPECT_EQ(r[0].tags[0], BioTag::begin(EntityKind::ViolatedBy));
}

TEST(LoadNer, MissingIdBecomesOrdinalAndBomIsSkipped) {
  const auto r = ner_from("\xEF\xBB\xBF{\"tokens\":[\"a\"],\"ner_tags\":[\"O\"]}\r\n\r\n"
                          "{\"tokens\":[\"b\"],\"ner_tags\":[\"O\"]}\r\n");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].id, "0");
  EXPECT_EQ(r[1].id, "1");
}

TEST(LoadNer, MissingFileIsIoError) {
  EXPECT_EQ(error_of([] { load_ner("/nonexistent/x.jsonl", NerFormat::Jsonl); }).kind(), ErrorKind::Io);
}

TEST(LoadNli, LabelNormalization) {
  const auto r = nli_from(
      R"({"id":"1","premise":"p","hypothesis":"h","label":"entailed","legal_act":"Wage"})"
      "\n"
      R"({"id":"2","premise":"p","hypothesis":"h","label":"CONTRADICT","legal_act":"Privacy"})");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].label, NliLabel::Entailment);
  EXPECT_EQ(r[0].domain, LegalDomain(LegalDomain::Kind::Wage));
  EXPECT_EQ(r[1].label, NliLabel::Contradiction);
}

TEST(LoadNli, UnknownLabelNamesValue) {
  const auto e = error_of(
      [] { nli_from(R"({"id":"1","premise":"p","hypothesis":"h","label":"maybe","legal_act":"Wage"})"); });
  EXPECT_EQ(e.kind(), ErrorKind::Label);
  EXPECT_NE(e.message().find("maybe"), std::string::npos);
}

TEST(LoadNli, MissingPremiseIsSchemaError) {
  EXPECT_EQ(error_of([] { nli_from(R"({"id":"1","hypothesis":"h","label":"neutral","legal_act":"Wage"})"); })
                .kind(),
            ErrorKind::Schema);
  EXPECT_EQ(error_of([] {
              nli_from(R"({"id":"1","premise":" ","hypothesis":"h","label":"neutral","legal_act":"Wage"})");
            }).kind(),
            ErrorKind::Schema);
}

TEST(LoadNli, UnknownDomainKeptAsOther) {
  const auto r = nli_from(R"({"id":"1","premise":"p","hypothesis":"h","label":"neutral","legal_act":"Antitrust"})");
  EXPECT_EQ(r[0].domain, LegalDomain::other("Antitrust"));
}

TEST(RoundTrip, NerJsonlAndConll) {
  std::vector<NerRecord> recs{
      support::ner_record("a", {"They", "broke", "the", "TCPA"},
                          {BioTag::outside(), BioTag::outside(), BioTag::begin(EntityKind::Law),
                           BioTag::inside(EntityKind::Law)}),
      support::ner_record("b", {"caf\xc3\xa9"}, {BioTag::begin(EntityKind::ViolatedOn)})};
  recs[0].cause_of_action = "tcpa";
  recs[0].provenance = Provenance::Generated;

  std::ostringstream out;
  write_ner(out, recs, NerFormat::Jsonl);
  const auto back = ner_from(out.str());
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].id, recs[i].id);
    EXPECT_EQ(back[i].tokens, recs[i].tokens);
    EXPECT_EQ(back[i].tags, recs[i].tags);
    EXPECT_EQ(back[i].cause_of_action, recs[i].cause_of_action);
    EXPECT_EQ(back[i].provenance, recs[i].provenance);
  }

  std::ostringstream conll;
  write_ner(conll, recs, NerFormat::Conll);
  EXPECT_EQ(conll.str().find('\r'), std::string::npos);
  const auto back2 = ner_from(conll.str(), NerFormat::Conll);
  ASSERT_EQ(back2.size(), 2u);
  EXPECT_EQ(back2[0].tokens, recs[0].tokens);
  EXPECT_EQ(back2[1].tags, recs[1].tags);
}

TEST(RoundTrip, Nli) {
  NliRecord r{"n1", "The company recorded calls.", "They taped my call.", NliLabel::Neutral,
              LegalDomain::other("Antitrust")};
  std::ostringstream out;
  write_nli(out, {r});
  const auto back = nli_from(out.str());
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].premise, r.premise);
  EXPECT_EQ(back[0].hypothesis, r.hypothesis);
  EXPECT_EQ(back[0].label, r.label);
  EXPECT_EQ(back[0].domain, r.domain);
}

TEST(ComputeStats, Examples) {
  const auto empty = compute_stats({}, {});
  EXPECT_EQ(empty.total_spans, 0u);
  EXPECT_EQ(empty.total_nli, 0u);

  const auto s = compute_stats(
      {support::ner_record("a", {"x", "y", "z"},
                           {BioTag::begin(EntityKind::Law), BioTag::inside(EntityKind::Law), BioTag::outside()})},
      {});
  EXPECT_EQ(s.spans(EntityKind::Law), 1u);
  EXPECT_EQ(s.total_spans, 1u);
}

TEST(ComputeStats, NliBuckets) {
  const LegalDomain wage(LegalDomain::Kind::Wage);
  std::vector<NliRecord> nli{{"1", "p", "h", NliLabel::Contradiction, wage},
                             {"2", "p", "h", NliLabel::Contradiction, wage},
                             {"3", "p", "h", NliLabel::Entailment, wage},
                             {"4", "p", "h", NliLabel::Neutral, LegalDomain(LegalDomain::Kind::Tcpa)}};
  const auto s = compute_stats({}, nli);
  EXPECT_EQ(s.count(wage, NliLabel::Contradiction), 2u);
  EXPECT_EQ(s.domain_total(wage), 3u);
  EXPECT_EQ(s.total_nli, 4u);
}

TEST(ComputeStats, StrictRejectsIllFormedTags) {
  const std::vector<NerRecord> ner{support::ner_record("a", {"x"}, {BioTag::inside(EntityKind::Law)})};
  EXPECT_EQ(error_of([&] { compute_stats(ner, {}); }).kind(), ErrorKind::Scheme);
  EXPECT_EQ(compute_stats(ner, {}, bio::RepairPolicy::PromoteInsideToBegin).total_spans, 1u);
}

TEST(Predictions, GroupedByRepeat) {
  std::istringstream in(R"({"id":"a","repeat":0,"label":"neutral"}
{"id":"a","repeat":1,"label":"entailed"}
{"id":"b","label":"contradict"}
)");
  const auto p = read_nli_predictions(in);
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p.at(0).at("a"), NliLabel::Neutral);
  EXPECT_EQ(p.at(0).at("b"), NliLabel::Contradiction);
  EXPECT_EQ(p.at(1).at("a"), NliLabel::Entailment);
}

TEST(Predictions, DuplicateIsSchemaError) {
  std::istringstream in("{\"id\":\"a\",\"ner_tags\":[\"O\"]}\n{\"id\":\"a\",\"ner_tags\":[\"O\"]}\n");
  const auto e = error_of([&] { read_ner_predictions(in); });
  EXPECT_EQ(e.kind(), ErrorKind::Schema);
  EXPECT_EQ(e.line(), 2u);
}

TEST(ProvenanceLabels, ReadsEitherField) {
  std::istringstream in(R"({"id":"a","provenance":"generated"}
{"id":"b","label":"human"}
)");
  const auto p = read_provenance_labels(in);
  EXPECT_EQ(p.at("a"), Provenance::Generated);
  EXPECT_EQ(p.at("b"), Provenance::Human);
  std::istringstream bad(R"({"id":"a","provenance":"unsure"})");
  EXPECT_EQ(error_of([&] { read_provenance_labels(bad); }).kind(), ErrorKind::Label);
}
