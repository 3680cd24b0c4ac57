// pybind11 surface. Structured results cross the boundary as JSON text and
// are decoded by the vioscan package, so the Python side sees plain dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "vioscan/backends.hpp"
#include "vioscan/bio.hpp"
#include "vioscan/corpus.hpp"
#include "vioscan/datagen.hpp"
#include "vioscan/error.hpp"
#include "vioscan/json_io.hpp"
#include "vioscan/metrics.hpp"
#include "vioscan/splits.hpp"

namespace py = pybind11;
using namespace vioscan;
using nlohmann::json;

namespace {

using SpanTuple = std::tuple<std::string, std::size_t, std::size_t>;

bio::TagSequence tags_of(const std::vector<std::string>& s) { return bio::parse_tags(s); }

std::vector<SpanTuple> span_tuples(const std::vector<bio::EntitySpan>& spans) {
  std::vector<SpanTuple> out;
  for (const auto& s : spans) out.emplace_back(std::string(tag_name(s.kind)), s.start, s.end);
  return out;
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

template <class Record, class Reader>
std::vector<Record> records_of(const std::string& json_list, Reader read) {
  std::vector<Record> out;
  const json j = parse_json(json_list);
  for (std::size_t i = 0; i < j.size(); ++i) {
    try {
      out.push_back(read(j.at(i)));
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Schema, "record " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

std::vector<corpus::NerRecord> ner_records(const std::string& s) {
  return records_of<corpus::NerRecord>(s, [](const json& j) { return json_io::ner_record_from_json(j); });
}

std::vector<corpus::NliRecord> nli_records(const std::string& s) {
  return records_of<corpus::NliRecord>(s, [](const json& j) { return json_io::nli_record_from_json(j); });
}

template <class Records>
std::string dump_records(const Records& rs) {
  json out = json::array();
  for (const auto& r : rs) out.push_back(json_io::to_json(r));
  return out.dump();
}

std::vector<NliLabel> labels_of(const std::vector<std::string>& s) {
  std::vector<NliLabel> out;
  for (const auto& x : s) {
    auto l = parse_nli_label(x);
    if (!l) throw Error(ErrorKind::Label, "unknown label '" + x + "'");
    out.push_back(*l);
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_vioscan, m) {
  // Carries `kind` (error kind name) and `line` (1-based, or None).
  m.attr("VioscanError") = py::reinterpret_steal<py::object>(
      PyErr_NewException("vioscan._vioscan.VioscanError", PyExc_RuntimeError, nullptr));
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object type = py::module_::import("vioscan._vioscan").attr("VioscanError");
      py::object exc = type(py::str(e.what()));
      exc.attr("kind") = std::string(to_string(e.kind()));
      exc.attr("line") = e.line() ? py::object(py::int_(*e.line())) : py::object(py::none());
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });

  m.def("decode_spans", [](const std::vector<std::string>& tags, const std::string& policy) {
    return span_tuples(bio::decode_spans(tags_of(tags), bio::parse_repair_policy(policy)));
  }, py::arg("tags"), py::arg("policy") = "strict");

  m.def("encode_spans", [](const std::vector<SpanTuple>& spans, std::size_t length) {
    std::vector<bio::EntitySpan> in;
    for (const auto& [kind, start, end] : spans) {
      auto k = parse_entity_kind(kind);
      if (!k) throw Error(ErrorKind::Tag, "unknown entity kind '" + kind + "'");
      in.push_back({*k, start, end, std::nullopt});
    }
    return bio::format_tags(bio::encode_spans(in, length));
  }, py::arg("spans"), py::arg("length"));

  m.def("repair", [](const std::vector<std::string>& tags, const std::string& policy) {
    return bio::format_tags(bio::repair(tags_of(tags), bio::parse_repair_policy(policy)));
  }, py::arg("tags"), py::arg("policy") = "promote");

  m.def("validate", [](const std::vector<std::string>& tags) {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (const auto& v : bio::validate(tags_of(tags))) out.emplace_back(v.index, v.description);
    return out;
  }, py::arg("tags"));

  m.def("f1_from_pr", &metrics::f1_from_pr, py::arg("precision"), py::arg("recall"));

  m.def("eval_ner", [](const std::string& gold, const std::vector<std::vector<std::string>>& pred,
                       const std::string& policy) {
    std::vector<bio::TagSequence> p;
    for (const auto& t : pred) p.push_back(tags_of(t));
    return json_io::to_json(metrics::eval_ner(ner_records(gold), p, bio::parse_repair_policy(policy))).dump();
  }, py::arg("gold_json"), py::arg("pred"), py::arg("policy") = "promote");

  m.def("eval_nli", [](const std::vector<std::string>& gold, const std::vector<std::string>& pred) {
    const auto report = metrics::eval_nli(labels_of(gold), labels_of(pred));
    json j = json_io::to_json(report);
    j["error_classes"] = json_io::to_json(metrics::error_classes(report.confusion));
    return j.dump();
  }, py::arg("gold"), py::arg("pred"));

  m.def("cohen_kappa", [](const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return metrics::cohen_kappa(a, b);
  }, py::arg("a"), py::arg("b"));

  m.def("load_ner", [](const std::string& path, const std::string& format, const std::string& fields) {
    return dump_records(corpus::load_ner(path, corpus::parse_ner_format(format), corpus::FieldMap::parse(fields)));
  }, py::arg("path"), py::arg("format") = "jsonl", py::arg("fields") = "");

  m.def("load_nli", [](const std::string& path, const std::string& fields) {
    return dump_records(corpus::load_nli(path, corpus::FieldMap::parse(fields)));
  }, py::arg("path"), py::arg("fields") = "");

  m.def("corpus_stats", [](const std::string& ner, const std::string& nli, const std::string& policy) {
    return json_io::to_json(corpus::compute_stats(ner_records(ner), nli_records(nli),
                                                  bio::parse_repair_policy(policy)))
        .dump();
  }, py::arg("ner_json"), py::arg("nli_json"), py::arg("policy") = "strict");

  m.def("coa_split", [](const std::string& records, double fraction, std::uint64_t seed) {
    return json_io::to_json(splits::coa_split(ner_records(records), fraction, seed)).dump();
  }, py::arg("records_json"), py::arg("test_fraction"), py::arg("seed"));

  m.def("leave_one_out", [](const std::string& records) {
    return json_io::to_json(splits::leave_one_out(nli_records(records))).dump();
  }, py::arg("records_json"));

  m.def("parse_generated_ner", [](const std::string& raw, const std::string& id) {
    const auto g = datagen::parse_generated_ner(raw, id);
    json j{{"accepted", g.accepted()}, {"diagnostics", g.diagnostics}};
    j["record"] = g.record ? json_io::to_json(*g.record) : json(nullptr);
    return j.dump();
  }, py::arg("raw"), py::arg("id") = "");

  m.def("parse_ner_output", [](const std::string& raw, const std::vector<std::string>& tokens,
                               const std::string& policy) {
    const auto p = backends::parse_ner_output(raw, tokens, bio::parse_repair_policy(policy));
    return json{{"tags", bio::format_tags(p.tags)}, {"confidence", p.confidence}, {"diagnostics", p.diagnostics}}
        .dump();
  }, py::arg("raw"), py::arg("tokens"), py::arg("policy") = "promote");

  m.def("parse_nli_output", [](const std::string& raw) {
    return std::string(to_string(backends::parse_nli_output(raw)));
  }, py::arg("raw"));
}
