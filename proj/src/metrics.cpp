#include "vioscan/metrics.hpp"

#include <cctype>
#include <cmath>
#include <set>
#include <tuple>

#include "vioscan/text.hpp"

namespace vioscan::metrics {

double f1_from_pr(double precision, double recall) {
  if (!(precision >= 0.0 && precision <= 1.0) || !(recall >= 0.0 && recall <= 1.0)) {
    throw Error(ErrorKind::Domain, "precision and recall must lie in [0,1]");
  }
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

PrfScores prf_from_counts(std::size_t true_positive, std::size_t predicted, std::size_t gold) {
  PrfScores s;
  s.support = gold;
  s.precision = predicted ? static_cast<double>(true_positive) / static_cast<double>(predicted) : 0.0;
  s.recall = gold ? static_cast<double>(true_positive) / static_cast<double>(gold) : 0.0;
  s.f1 = f1_from_pr(s.precision, s.recall);
  return s;
}

NerEvalReport eval_ner(std::span<const corpus::NerRecord> gold,
                       std::span<const bio::TagSequence> pred, bio::RepairPolicy policy) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorKind::Evaluation, std::to_string(gold.size()) + " gold records but " +
                                           std::to_string(pred.size()) + " predictions");
  }
  std::array<std::size_t, 4> tp{}, n_pred{}, n_gold{};
  using Key = std::tuple<std::size_t, std::size_t, std::size_t>;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const auto& g = gold[i];
    if (pred[i].size() != g.tokens.size()) {
      throw Error(ErrorKind::Evaluation, "record '" + g.id + "': " +
                                             std::to_string(g.tokens.size()) + " tokens but " +
                                             std::to_string(pred[i].size()) + " predicted tags");
    }
    std::vector<bio::EntitySpan> gold_spans;
    try {
      gold_spans = bio::decode_spans(g.tags, bio::RepairPolicy::Strict);
    } catch (const Error& e) {
      throw Error(ErrorKind::Evaluation, "record '" + g.id + "' gold tags: " + e.message());
    }
    std::set<Key> gold_keys;
    for (const auto& s : gold_spans) {
      gold_keys.emplace(index_of(s.kind), s.start, s.end);
      ++n_gold[index_of(s.kind)];
    }
    for (const auto& s : bio::decode_spans(pred[i], policy)) {
      ++n_pred[index_of(s.kind)];
      if (gold_keys.contains(Key{index_of(s.kind), s.start, s.end})) ++tp[index_of(s.kind)];
    }
  }
  NerEvalReport r;
  std::size_t all_tp = 0, all_pred = 0, all_gold = 0;
  double f1_sum = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    r.per_kind[k] = prf_from_counts(tp[k], n_pred[k], n_gold[k]);
    f1_sum += r.per_kind[k].f1;
    all_tp += tp[k];
    all_pred += n_pred[k];
    all_gold += n_gold[k];
  }
  r.overall = prf_from_counts(all_tp, all_pred, all_gold);
  r.macro_f1 = f1_sum / 4.0;
  return r;
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (const auto& row : counts_) {
    for (std::size_t c : row) n += c;
  }
  return n;
}

std::size_t ConfusionMatrix::off_diagonal() const {
  std::size_t n = total();
  for (std::size_t i = 0; i < 3; ++i) n -= counts_[i][i];
  return n;
}

NliEvalReport eval_nli(std::span<const NliLabel> gold, std::span<const NliLabel> pred) {
  if (gold.size() != pred.size()) {
    throw Error(ErrorKind::Evaluation, std::to_string(gold.size()) + " gold labels but " +
                                           std::to_string(pred.size()) + " predictions");
  }
  if (gold.empty()) throw Error(ErrorKind::Evaluation, "nothing to evaluate");
  NliEvalReport r;
  for (std::size_t i = 0; i < gold.size(); ++i) r.confusion.add(gold[i], pred[i]);
  double f1_sum = 0.0;
  for (NliLabel l : kAllNliLabels) {
    std::size_t predicted = 0, actual = 0;
    for (NliLabel other : kAllNliLabels) {
      predicted += r.confusion.at(other, l);
      actual += r.confusion.at(l, other);
    }
    r.per_label[index_of(l)] = prf_from_counts(r.confusion.at(l, l), predicted, actual);
    f1_sum += r.per_label[index_of(l)].f1;
  }
  r.macro_f1 = f1_sum / 3.0;
  return r;
}

ErrorClassReport error_classes(const ConfusionMatrix& m) {
  using L = NliLabel;
  return ErrorClassReport{
      m.at(L::Contradiction, L::Entailment) + m.at(L::Entailment, L::Contradiction),
      m.at(L::Contradiction, L::Neutral) + m.at(L::Entailment, L::Neutral)};
}

RunAggregate aggregate_runs(std::span<const MetricMap> runs) {
  if (runs.empty()) throw Error(ErrorKind::Aggregation, "no runs to aggregate");
  for (std::size_t i = 1; i < runs.size(); ++i) {
    bool same = runs[i].size() == runs[0].size();
    for (auto a = runs[i].begin(), b = runs[0].begin(); same && a != runs[i].end(); ++a, ++b) {
      same = a->first == b->first;
    }
    if (!same) {
      throw Error(ErrorKind::Aggregation,
                  "run " + std::to_string(i) + " has different metric keys than run 0");
    }
  }
  RunAggregate out;
  out.runs = runs.size();
  const double n = static_cast<double>(runs.size());
  for (const auto& [key, unused] : runs[0]) {
    double sum = 0.0;
    for (const auto& r : runs) sum += r.at(key);
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& r : runs) sq += (r.at(key) - mean) * (r.at(key) - mean);
    const double sd = runs.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
    out.metrics[key] = MeanStd{mean, sd};
  }
  return out;
}

namespace {
void put(MetricMap& m, const std::string& prefix, const PrfScores& s) {
  m[prefix + "precision"] = s.precision;
  m[prefix + "recall"] = s.recall;
  m[prefix + "f1"] = s.f1;
}
}  // namespace

MetricMap flatten(const NerEvalReport& r) {
  MetricMap m;
  put(m, "", r.overall);
  for (EntityKind k : kAllEntityKinds) put(m, std::string(tag_name(k)) + ".", r.kind(k));
  m["macro_f1"] = r.macro_f1;
  return m;
}

MetricMap flatten(const NliEvalReport& r) {
  MetricMap m;
  m["macro_f1"] = r.macro_f1;
  for (NliLabel l : kAllNliLabels) put(m, std::string(to_string(l)) + ".", r.per_label[index_of(l)]);
  return m;
}

AgreementReport agreement(std::span<const AnnotatorLabels> annotators,
                          const std::map<std::string, Provenance>* truth) {
  if (annotators.empty()) throw Error(ErrorKind::Domain, "no annotators");
  for (const auto& a : annotators) {
    if (a.labels.empty()) throw Error(ErrorKind::Domain, "annotator '" + a.name + "' has no labels");
    bool same = a.labels.size() == annotators[0].labels.size();
    for (auto x = a.labels.begin(), y = annotators[0].labels.begin(); same && x != a.labels.end();
         ++x, ++y) {
      same = x->first == y->first;
    }
    if (!same) {
      throw Error(ErrorKind::Domain, "annotators '" + annotators[0].name + "' and '" + a.name +
                                         "' labeled different records");
    }
  }
  auto vector_of = [](const std::map<std::string, Provenance>& m) {
    std::vector<Provenance> v;
    v.reserve(m.size());
    for (const auto& [id, p] : m) v.push_back(p);
    return v;
  };

  AgreementReport r;
  for (std::size_t i = 0; i < annotators.size(); ++i) {
    for (std::size_t j = i + 1; j < annotators.size(); ++j) {
      const auto a = vector_of(annotators[i].labels);
      const auto b = vector_of(annotators[j].labels);
      r.pairs.push_back(PairKappa{annotators[i].name, annotators[j].name, cohen_kappa(a, b)});
    }
  }
  if (!r.pairs.empty()) {
    double sum = 0.0;
    for (const auto& p : r.pairs) sum += p.kappa;
    r.mean_kappa = sum / static_cast<double>(r.pairs.size());
  }

  if (truth) {
    double f1_sum = 0.0;
    for (const auto& a : annotators) {
      std::size_t tp = 0, predicted = 0, actual = 0;
      for (const auto& [id, judged] : a.labels) {
        auto it = truth->find(id);
        if (it == truth->end()) {
          throw Error(ErrorKind::Domain, "no ground truth for record '" + id + "'");
        }
        const bool pred_pos = judged == Provenance::Generated;
        const bool gold_pos = it->second == Provenance::Generated;
        predicted += pred_pos;
        actual += gold_pos;
        tp += pred_pos && gold_pos;
      }
      r.vs_truth[a.name] = prf_from_counts(tp, predicted, actual);
      f1_sum += r.vs_truth[a.name].f1;
    }
    r.mean_f1 = f1_sum / static_cast<double>(annotators.size());
  }
  return r;
}

namespace {

CorpusTextStats describe(std::span<const TaggedSentence> corpus) {
  CorpusTextStats s;
  s.sentences = corpus.size();
  double tokens = 0.0, chars = 0.0;
  for (const auto& sent : corpus) {
    if (sent.tags.size() != sent.tokens.size()) {
      throw Error(ErrorKind::Domain, "sentence with " + std::to_string(sent.tokens.size()) +
                                         " tokens but " + std::to_string(sent.tags.size()) +
                                         " tags");
    }
    tokens += static_cast<double>(sent.tokens.size());
    chars += static_cast<double>(text::codepoint_count(text::join(sent.tokens, " ")));
    for (const auto& t : sent.tags) ++s.tag_counts[t];
  }
  s.mean_sentence_length = tokens / static_cast<double>(corpus.size());
  s.mean_char_count = chars / static_cast<double>(corpus.size());
  return s;
}

}  // namespace

TextStatsReport text_stats(std::span<const TaggedSentence> a, std::span<const TaggedSentence> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::Domain, "text_stats needs two nonempty corpora");
  TextStatsReport r;
  r.a = describe(a);
  r.b = describe(b);
  std::set<std::string> tags;
  for (const auto& [t, n] : r.a.tag_counts) tags.insert(t);
  for (const auto& [t, n] : r.b.tag_counts) tags.insert(t);
  std::vector<double> diffs;
  for (const auto& t : tags) {
    const auto ca = r.a.tag_counts.contains(t) ? r.a.tag_counts.at(t) : 0;
    const auto cb = r.b.tag_counts.contains(t) ? r.b.tag_counts.at(t) : 0;
    const double hi = static_cast<double>(std::max(ca, cb));
    const double lo = static_cast<double>(std::min(ca, cb));
    const double pct = (hi - lo) / hi * 100.0;
    r.tag_difference_pct[t] = pct;
    diffs.push_back(pct);
  }
  if (!diffs.empty()) {
    double sum = 0.0;
    for (double d : diffs) sum += d;
    r.average_difference_pct = sum / static_cast<double>(diffs.size());
    std::sort(diffs.begin(), diffs.end());
    const std::size_t mid = diffs.size() / 2;
    r.median_difference_pct =
        diffs.size() % 2 ? diffs[mid] : (diffs[mid - 1] + diffs[mid]) / 2.0;
  }
  return r;
}

std::vector<std::string> heuristic_shape_tags(std::span<const std::string> tokens) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& tok : tokens) {
    const std::string w = text::to_lower(tok);
    bool all_punct = !w.empty(), has_digit = false;
    for (char c : w) {
      const auto u = static_cast<unsigned char>(c);
      all_punct = all_punct && std::ispunct(u);
      has_digit = has_digit || std::isdigit(u);
    }
    if (all_punct) out.emplace_back("PUNCT");
    else if (has_digit) out.emplace_back("NUM");
    else if (w.size() > 3 && w.ends_with("ly")) out.emplace_back("ADV");
    else if (w.size() > 4 && (w.ends_with("ing") || w.ends_with("ed"))) out.emplace_back("VERB");
    else if (w.ends_with("ous") || w.ends_with("ful") || w.ends_with("ive") || w.ends_with("able"))
      out.emplace_back("ADJ");
    else out.emplace_back("NOUN");
  }
  return out;
}

}  // namespace vioscan::metrics
