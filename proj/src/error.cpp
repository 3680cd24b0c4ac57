#include "vioscan/error.hpp"

namespace vioscan {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Tag: return "tag";
    case ErrorKind::Label: return "label";
    case ErrorKind::Scheme: return "scheme";
    case ErrorKind::Span: return "span";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::Evaluation: return "evaluation";
    case ErrorKind::Aggregation: return "aggregation";
    case ErrorKind::Split: return "split";
    case ErrorKind::Prompt: return "prompt";
    case ErrorKind::Auth: return "auth";
    case ErrorKind::Timeout: return "timeout";
    case ErrorKind::Transport: return "transport";
    case ErrorKind::Http: return "http";
    case ErrorKind::ResponseFormat: return "response_format";
    case ErrorKind::InvalidArgument: return "invalid_argument";
  }
  return "unknown";
}

namespace {
std::string decorate(ErrorKind kind, const std::string& message, std::optional<std::size_t> line) {
  std::string out(to_string(kind));
  out += " error";
  if (line) out += " at line " + std::to_string(*line);
  out += ": ";
  out += message;
  return out;
}
}  // namespace

Error::Error(ErrorKind kind, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(decorate(kind, message, line)), kind_(kind), message_(message), line_(line) {}

}  // namespace vioscan
