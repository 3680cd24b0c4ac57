#include "vioscan/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include "vioscan/error.hpp"
#include "vioscan/json_io.hpp"
#include "vioscan/text.hpp"

namespace vioscan::corpus {

using json_io::json;

void check_record(const NerRecord& r) {
  if (r.tokens.empty()) throw Error(ErrorKind::Schema, "record '" + r.id + "': no tokens");
  if (r.tokens.size() != r.tags.size()) {
    throw Error(ErrorKind::Schema, "record '" + r.id + "': " + std::to_string(r.tokens.size()) +
                                       " tokens but " + std::to_string(r.tags.size()) + " tags");
  }
}

void check_record(const NliRecord& r) {
  if (text::trim(r.premise).empty()) {
    throw Error(ErrorKind::Schema, "record '" + r.id + "': empty premise");
  }
  if (text::trim(r.hypothesis).empty()) {
    throw Error(ErrorKind::Schema, "record '" + r.id + "': empty hypothesis");
  }
}

NerFormat parse_ner_format(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "jsonl" || lower == "json") return NerFormat::Jsonl;
  if (lower == "conll") return NerFormat::Conll;
  throw Error(ErrorKind::InvalidArgument, "unknown format '" + std::string(s) + "' (jsonl|conll)");
}

FieldMap FieldMap::parse(std::string_view spec) {
  FieldMap m;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    std::size_t comma = spec.find(',', pos);
    if (comma == std::string_view::npos) comma = spec.size();
    std::string_view item = text::trim(spec.substr(pos, comma - pos));
    if (!item.empty()) {
      const std::size_t eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0 || eq + 1 == item.size()) {
        throw Error(ErrorKind::InvalidArgument,
                    "field map entry '" + std::string(item) + "' is not canonical=external");
      }
      m.set(std::string(text::trim(item.substr(0, eq))),
            std::string(text::trim(item.substr(eq + 1))));
    }
    pos = comma + 1;
  }
  return m;
}

void FieldMap::set(std::string canonical, std::string external) {
  names_[std::move(canonical)] = std::move(external);
}

std::string FieldMap::operator[](const std::string& canonical) const {
  auto it = names_.find(canonical);
  return it == names_.end() ? canonical : it->second;
}

namespace {

// Reads one line without its terminator; CRLF and a leading BOM are dropped.
bool next_line(std::istream& in, std::string& line, std::size_t& number) {
  if (!std::getline(in, line)) return false;
  ++number;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (number == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
  if (!text::is_valid_utf8(line)) throw Error(ErrorKind::Parse, "invalid UTF-8", number);
  return true;
}

[[noreturn]] void rethrow_at(const Error& e, std::size_t line) {
  throw Error(e.kind(), e.message(), line);
}

json parse_json_line(const std::string& line, std::size_t number) {
  try {
    return json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, std::string("malformed JSON: ") + e.what(), number);
  }
}

std::vector<NerRecord> read_ner_jsonl(std::istream& in, const FieldMap& fields) {
  std::vector<NerRecord> out;
  std::string line;
  std::size_t number = 0;
  while (next_line(in, line, number)) {
    if (text::trim(line).empty()) continue;
    const json j = parse_json_line(line, number);
    try {
      NerRecord r = json_io::ner_record_from_json(j, fields);
      if (r.id.empty()) r.id = std::to_string(out.size());
      check_record(r);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.line()) throw;
      rethrow_at(e, number);
    }
  }
  return out;
}

std::vector<NerRecord> read_ner_conll(std::istream& in) {
  std::vector<NerRecord> out;
  NerRecord current;
  std::size_t first_line = 0;
  auto flush = [&] {
    if (current.tokens.empty()) return;
    current.id = std::to_string(out.size());
    try {
      check_record(current);
    } catch (const Error& e) {
      rethrow_at(e, first_line);
    }
    out.push_back(std::move(current));
    current = NerRecord{};
  };

  std::string line;
  std::size_t number = 0;
  while (next_line(in, line, number)) {
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    if (line.starts_with("-DOCSTART-")) continue;
    std::string_view token;
    std::string_view tag;
    if (auto tab = line.find('\t'); tab != std::string::npos) {
      token = std::string_view(line).substr(0, tab);
      tag = std::string_view(line).substr(line.rfind('\t') + 1);
    } else {
      std::string_view v = text::trim(line);
      const auto sp = v.find_last_of(" ");
      if (sp == std::string_view::npos) {
        throw Error(ErrorKind::Parse, "expected 'token<TAB>tag'", number);
      }
      token = text::trim(v.substr(0, v.find_first_of(' ')));
      tag = v.substr(sp + 1);
    }
    if (token.empty()) throw Error(ErrorKind::Parse, "empty token", number);
    if (current.tokens.empty()) first_line = number;
    try {
      current.tags.push_back(bio::parse_tag(text::trim(tag)));
    } catch (const Error& e) {
      rethrow_at(e, number);
    }
    current.tokens.emplace_back(token);
  }
  flush();
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

std::vector<NerRecord> read_ner(std::istream& in, NerFormat format, const FieldMap& fields) {
  return format == NerFormat::Jsonl ? read_ner_jsonl(in, fields) : read_ner_conll(in);
}

std::vector<NliRecord> read_nli(std::istream& in, const FieldMap& fields) {
  std::vector<NliRecord> out;
  std::string line;
  std::size_t number = 0;
  while (next_line(in, line, number)) {
    if (text::trim(line).empty()) continue;
    const json j = parse_json_line(line, number);
    try {
      NliRecord r = json_io::nli_record_from_json(j, fields);
      if (r.id.empty()) r.id = std::to_string(out.size());
      check_record(r);
      out.push_back(std::move(r));
    } catch (const Error& e) {
      if (e.line()) throw;
      rethrow_at(e, number);
    }
  }
  return out;
}

std::vector<NerRecord> load_ner(const std::filesystem::path& path, NerFormat format,
                                const FieldMap& fields) {
  auto in = open_input(path);
  return read_ner(in, format, fields);
}

std::vector<NliRecord> load_nli(const std::filesystem::path& path, const FieldMap& fields) {
  auto in = open_input(path);
  return read_nli(in, fields);
}

void write_ner(std::ostream& out, const std::vector<NerRecord>& records, NerFormat format) {
  if (format == NerFormat::Jsonl) {
    for (const auto& r : records) out << json_io::dump(json_io::to_json(r));
    return;
  }
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i) out << '\n';
    const auto& r = records[i];
    for (std::size_t t = 0; t < r.tokens.size(); ++t) {
      out << r.tokens[t] << '\t' << bio::format_tag(r.tags[t]) << '\n';
    }
  }
}

void write_nli(std::ostream& out, const std::vector<NliRecord>& records) {
  for (const auto& r : records) out << json_io::dump(json_io::to_json(r));
}

void save_ner(const std::filesystem::path& path, const std::vector<NerRecord>& records,
              NerFormat format) {
  auto out = open_output(path);
  write_ner(out, records, format);
}

void save_nli(const std::filesystem::path& path, const std::vector<NliRecord>& records) {
  auto out = open_output(path);
  write_nli(out, records);
}

std::size_t CorpusStats::domain_total(const LegalDomain& d) const {
  auto it = nli_counts.find(d);
  if (it == nli_counts.end()) return 0;
  return it->second[0] + it->second[1] + it->second[2];
}

std::size_t CorpusStats::count(const LegalDomain& d, NliLabel l) const {
  auto it = nli_counts.find(d);
  return it == nli_counts.end() ? 0 : it->second[index_of(l)];
}

CorpusStats compute_stats(const std::vector<NerRecord>& ner, const std::vector<NliRecord>& nli,
                          bio::RepairPolicy policy) {
  CorpusStats s;
  s.ner_records = ner.size();
  for (const auto& r : ner) {
    for (const auto& span : bio::decode_spans(r.tags, policy)) {
      ++s.spans_by_kind[index_of(span.kind)];
      ++s.total_spans;
    }
  }
  for (const auto& r : nli) {
    ++s.nli_counts[r.domain][index_of(r.label)];
    ++s.total_nli;
  }
  return s;
}

namespace {

int repeat_of(const json& j, std::size_t number) {
  auto it = j.find("repeat");
  if (it == j.end() || it->is_null()) return 0;
  if (!it->is_number_integer()) throw Error(ErrorKind::Schema, "repeat must be an integer", number);
  return it->get<int>();
}

template <class Value, class Convert>
std::map<int, std::map<std::string, Value>> read_predictions(std::istream& in,
                                                             const FieldMap& fields,
                                                             Convert convert) {
  std::map<int, std::map<std::string, Value>> out;
  std::string line;
  std::size_t number = 0;
  while (next_line(in, line, number)) {
    if (text::trim(line).empty()) continue;
    const json j = parse_json_line(line, number);
    auto id_it = j.find(fields[field::kId]);
    if (id_it == j.end()) throw Error(ErrorKind::Schema, "prediction without id", number);
    const std::string id =
        id_it->is_string() ? id_it->get<std::string>() : id_it->dump();
    const int repeat = repeat_of(j, number);
    try {
      auto [pos, inserted] = out[repeat].emplace(id, convert(j));
      if (!inserted) {
        throw Error(ErrorKind::Schema, "duplicate prediction for '" + id + "' in run " +
                                           std::to_string(repeat));
      }
    } catch (const Error& e) {
      if (e.line()) throw;
      rethrow_at(e, number);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, e.what(), number);
    }
  }
  return out;
}

}  // namespace

NerPredictions read_ner_predictions(std::istream& in, const FieldMap& fields) {
  const std::string key = fields[field::kTags];
  return read_predictions<bio::TagSequence>(in, fields, [&](const json& j) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_array()) {
      throw Error(ErrorKind::Schema, "prediction without '" + key + "' array");
    }
    return bio::parse_tags(it->get<std::vector<std::string>>());
  });
}

NliPredictions read_nli_predictions(std::istream& in, const FieldMap& fields) {
  const std::string key = fields[field::kLabel];
  return read_predictions<NliLabel>(in, fields, [&](const json& j) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorKind::Schema, "prediction without '" + key + "' string");
    }
    auto label = parse_nli_label(it->get<std::string>());
    if (!label) {
      throw Error(ErrorKind::Label, "unknown label '" + it->get<std::string>() + "'");
    }
    return *label;
  });
}

NerPredictions load_ner_predictions(const std::filesystem::path& path, const FieldMap& fields) {
  auto in = open_input(path);
  return read_ner_predictions(in, fields);
}

NliPredictions load_nli_predictions(const std::filesystem::path& path, const FieldMap& fields) {
  auto in = open_input(path);
  return read_nli_predictions(in, fields);
}

ProvenanceLabels read_provenance_labels(std::istream& in, const FieldMap& fields) {
  const std::string key = fields[field::kProvenance];
  const auto runs = read_predictions<Provenance>(in, fields, [&](const json& j) {
    auto it = j.find(key);
    if (it == j.end()) it = j.find(field::kLabel);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorKind::Schema, "judgment without '" + key + "' string");
    }
    const std::string value = it->get<std::string>();
    const Provenance p = parse_provenance(value);
    if (p == Provenance::Unknown) {
      throw Error(ErrorKind::Label, "judgment must be generated or human, got '" + value + "'");
    }
    return p;
  });
  ProvenanceLabels out;
  for (const auto& [run, labels] : runs) {
    for (const auto& [id, p] : labels) {
      if (!out.emplace(id, p).second) {
        throw Error(ErrorKind::Schema, "duplicate judgment for '" + id + "'");
      }
    }
  }
  return out;
}

ProvenanceLabels load_provenance_labels(const std::filesystem::path& path, const FieldMap& fields) {
  auto in = open_input(path);
  return read_provenance_labels(in, fields);
}

}  // namespace vioscan::corpus
