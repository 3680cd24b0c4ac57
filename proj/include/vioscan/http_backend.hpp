#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "vioscan/backends.hpp"

namespace vioscan::backends {

// OpenAI-style chat-completion client.
//
// Request body: {model, temperature, messages: [{role: "user", content}]},
// plus "logprobs": true when configured. The API key comes from the
// environment variable named in the config and is sent as a bearer token.
//
// Failure mapping:
//   missing key           -> Auth, before any network traffic
//   401 / 403             -> Auth, no retry
//   429 / 5xx             -> retried, then Http
//   other non-2xx         -> Http, no retry
//   read/connect timeout  -> retried, then Timeout
//   other transport error -> retried, then Transport
//   bad JSON / no text    -> ResponseFormat with a body excerpt
class HttpChatBackend : public ChatBackend {
 public:
  explicit HttpChatBackend(BackendConfig config);

  Completion complete(const PromptSpec& prompt) override;

  nlohmann::json request_body(const PromptSpec& prompt) const;
  const BackendConfig& config() const { return config_; }

  // Replaces the backoff sleep, mainly for tests.
  void set_sleeper(std::function<void(double seconds)> sleeper) { sleeper_ = std::move(sleeper); }

 private:
  BackendConfig config_;
  std::function<void(double)> sleeper_;
};

Completion chat_complete(const BackendConfig& config, const PromptSpec& prompt);

// Pulls text (and logprobs, if present) out of a response body.
Completion parse_completion_body(const std::string& body, const std::string& response_path);

}  // namespace vioscan::backends
