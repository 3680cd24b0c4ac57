#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vioscan {

enum class ErrorKind {
  Io,
  Parse,
  Schema,
  Tag,
  Label,
  Scheme,
  Span,
  Domain,
  Evaluation,
  Aggregation,
  Split,
  Prompt,
  Auth,
  Timeout,
  Transport,
  Http,
  ResponseFormat,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; `kind()` discriminates.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorKind kind() const noexcept { return kind_; }
  // The message without the kind/line decoration of what().
  const std::string& message() const noexcept { return message_; }
  // One-based line number for errors raised while reading a file.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  ErrorKind kind_;
  std::string message_;
  std::optional<std::size_t> line_;
};

}  // namespace vioscan
