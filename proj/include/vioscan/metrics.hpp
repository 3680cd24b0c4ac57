#pragma once

// Evaluation and validation arithmetic. Zero denominators yield 0, never NaN.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vioscan/bio.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/error.hpp"
#include "vioscan/types.hpp"

namespace vioscan::metrics {

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold items
};

// Harmonic mean; both arguments must lie in [0,1] (Error{Domain}).
double f1_from_pr(double precision, double recall);

PrfScores prf_from_counts(std::size_t true_positive, std::size_t predicted, std::size_t gold);

struct NerEvalReport {
  PrfScores overall;  // micro over all spans
  std::array<PrfScores, 4> per_kind{};
  double macro_f1 = 0.0;  // unweighted mean over the four kinds

  const PrfScores& kind(EntityKind k) const { return per_kind[index_of(k)]; }
};

// Exact (kind, start, end) matching. Gold tags are decoded strictly; predictions
// under `policy`. `pred[i]` must align with `gold[i]` token for token.
NerEvalReport eval_ner(std::span<const corpus::NerRecord> gold,
                       std::span<const bio::TagSequence> pred,
                       bio::RepairPolicy policy = bio::RepairPolicy::PromoteInsideToBegin);

class ConfusionMatrix {
 public:
  void add(NliLabel gold, NliLabel pred, std::size_t n = 1) {
    counts_[index_of(gold)][index_of(pred)] += n;
  }
  std::size_t at(NliLabel gold, NliLabel pred) const {
    return counts_[index_of(gold)][index_of(pred)];
  }
  std::size_t total() const;
  std::size_t off_diagonal() const;

 private:
  std::array<std::array<std::size_t, 3>, 3> counts_{};
};

struct NliEvalReport {
  double macro_f1 = 0.0;
  std::array<PrfScores, 3> per_label{};
  ConfusionMatrix confusion;
};

// Macro-F1 always averages all three labels; a label absent from both sides
// contributes 0.
NliEvalReport eval_nli(std::span<const NliLabel> gold, std::span<const NliLabel> pred);

struct ErrorClassReport {
  std::size_t first_class = 0;   // Contradiction <-> Entailment
  std::size_t second_class = 0;  // gold Contradiction/Entailment predicted Neutral
};

ErrorClassReport error_classes(const ConfusionMatrix& m);

// Cohen's kappa over any ordered label type. When chance agreement is 1 the
// result is 1 if observed agreement is 1, else 0.
template <class Label>
double cohen_kappa(std::span<const Label> a, std::span<const Label> b) {
  if (a.size() != b.size() || a.empty()) {
    throw Error(ErrorKind::Domain, "cohen_kappa needs two nonempty vectors of equal length");
  }
  std::map<Label, std::array<std::size_t, 2>> marginals;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++marginals[a[i]][0];
    ++marginals[b[i]][1];
    if (a[i] == b[i]) ++agree;
  }
  const double n = static_cast<double>(a.size());
  const double observed = static_cast<double>(agree) / n;
  double chance = 0.0;
  for (const auto& [label, m] : marginals) {
    chance += (static_cast<double>(m[0]) / n) * (static_cast<double>(m[1]) / n);
  }
  if (chance >= 1.0) return agree == a.size() ? 1.0 : 0.0;
  return (observed - chance) / (1.0 - chance);
}

template <class Label>
double cohen_kappa(const std::vector<Label>& a, const std::vector<Label>& b) {
  return cohen_kappa(std::span<const Label>(a), std::span<const Label>(b));
}

using MetricMap = std::map<std::string, double>;

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample std, n-1 denominator; 0 for one run
};

struct RunAggregate {
  std::size_t runs = 0;
  std::map<std::string, MeanStd> metrics;
};

RunAggregate aggregate_runs(std::span<const MetricMap> runs);

MetricMap flatten(const NerEvalReport& r);
MetricMap flatten(const NliEvalReport& r);

// One annotator's binary origin judgement per record.
struct AnnotatorLabels {
  std::string name;
  std::map<std::string, Provenance> labels;  // record id -> judged origin
};

struct PairKappa {
  std::string a;
  std::string b;
  double kappa = 0.0;
};

struct AgreementReport {
  std::vector<PairKappa> pairs;
  double mean_kappa = 0.0;
  // Present only when ground truth is supplied. Positive class: Generated.
  std::map<std::string, PrfScores> vs_truth;
  double mean_f1 = 0.0;
};

// All annotators must label the same record ids. Truth, when given, must
// cover them too.
AgreementReport agreement(std::span<const AnnotatorLabels> annotators,
                          const std::map<std::string, Provenance>* truth = nullptr);

struct TaggedSentence {
  std::vector<std::string> tokens;
  std::vector<std::string> tags;  // one categorical annotation per token
};

struct CorpusTextStats {
  std::size_t sentences = 0;
  double mean_sentence_length = 0.0;  // tokens
  double mean_char_count = 0.0;       // code points of the space-joined sentence
  std::map<std::string, std::size_t> tag_counts;
};

struct TextStatsReport {
  CorpusTextStats a;
  CorpusTextStats b;
  std::map<std::string, double> tag_difference_pct;  // |ca-cb| / max(ca,cb) * 100
  double average_difference_pct = 0.0;
  double median_difference_pct = 0.0;
};

TextStatsReport text_stats(std::span<const TaggedSentence> a, std::span<const TaggedSentence> b);

// Non-linguistic shape tagger (PUNCT, NUM, ADV, VERB, ADJ, NOUN by surface
// cues only). For quick realism comparisons when no real tagger output exists.
std::vector<std::string> heuristic_shape_tags(std::span<const std::string> tokens);

}  // namespace vioscan::metrics
