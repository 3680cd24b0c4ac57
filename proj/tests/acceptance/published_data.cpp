// Count checks against the released NER and NLI datasets. Point
// VIOSCAN_NER_DATA (JSONL, or CoNLL when the name ends in .conll/.txt) and
// VIOSCAN_NLI_DATA at local copies; VIOSCAN_FIELDS renames fields as in the
// CLI's --fields. Without them the criterion is reported BLOCKED (exit 77).

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "vioscan/corpus.hpp"
#include "vioscan/splits.hpp"

using namespace vioscan;

namespace {

int failures = 0;

void check(const std::string& what, std::size_t got, std::size_t want) {
  std::cout << (got == want ? "PASS " : "FAIL ") << what << ": " << got << " (want " << want << ")\n";
  if (got != want) ++failures;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

}  // namespace

int main() {
  const char* ner_path = env("VIOSCAN_NER_DATA");
  const char* nli_path = env("VIOSCAN_NLI_DATA");
  if (!ner_path && !nli_path) {
    std::cout << "BLOCKED AC2/AC6  no dataset fixtures; set VIOSCAN_NER_DATA and VIOSCAN_NLI_DATA\n";
    return 77;
  }
  const auto fields = corpus::FieldMap::parse(env("VIOSCAN_FIELDS") ? env("VIOSCAN_FIELDS") : "");
  try {
    if (ner_path) {
      const std::filesystem::path p(ner_path);
      const auto format = p.extension() == ".conll" || p.extension() == ".txt" ? corpus::NerFormat::Conll
                                                                              : corpus::NerFormat::Jsonl;
      const auto ner = corpus::load_ner(p, format, fields);
      const auto st = corpus::compute_stats(ner, {});
      check("AC2 LAW spans", st.spans(EntityKind::Law), 292);
      check("AC2 VIOLATION spans", st.spans(EntityKind::Violation), 1326);
      check("AC2 VIOLATED_BY spans", st.spans(EntityKind::ViolatedBy), 292);
      check("AC2 VIOLATED_ON spans", st.spans(EntityKind::ViolatedOn), 292);
      check("AC2 total spans", st.total_spans, 2202);
    } else {
      std::cout << "BLOCKED AC2 NER counts  VIOSCAN_NER_DATA not set\n";
    }
    if (nli_path) {
      const auto nli = corpus::load_nli(nli_path, fields);
      const auto st = corpus::compute_stats({}, nli);
      using D = LegalDomain::Kind;
      check("AC2 NLI records", st.total_nli, 312);
      check("AC2 Consumer Protection records", st.domain_total(LegalDomain(D::ConsumerProtection)), 62);
      check("AC2 Privacy records", st.domain_total(LegalDomain(D::Privacy)), 163);
      check("AC2 TCPA records", st.domain_total(LegalDomain(D::Tcpa)), 74);
      check("AC2 Wage records", st.domain_total(LegalDomain(D::Wage)), 13);
      const LegalDomain wage(D::Wage);
      check("AC2 Wage entailed", st.count(wage, NliLabel::Entailment), 6);
      check("AC2 Wage contradict", st.count(wage, NliLabel::Contradiction), 3);
      check("AC2 Wage neutral", st.count(wage, NliLabel::Neutral), 4);
      const auto plan = splits::leave_one_out(nli);
      check("AC6 leave-one-out folds", plan.folds.size(), 4);
      std::size_t wage_test = 0;
      for (const auto& f : plan.folds) {
        if (f.held_out_domain == wage) wage_test = f.test_ids.size();
      }
      check("AC6 Wage test fold", wage_test, 13);
    } else {
      std::cout << "BLOCKED AC2/AC6 NLI counts  VIOSCAN_NLI_DATA not set\n";
    }
  } catch (const std::exception& e) {
    std::cout << "FAIL loading fixtures: " << e.what() << "\n";
    return 1;
  }
  return failures ? 1 : 0;
}
