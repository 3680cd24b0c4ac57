#include "vioscan/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

#include <httplib.h>

namespace vioscan::backends {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) {
    throw Error(ErrorKind::InvalidArgument, "endpoint '" + url + "' is not an http(s) URL");
  }
  return Endpoint{m[1].str(), m[2].matched ? m[2].str() : std::string("/")};
}

std::string excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

void set_timeout(httplib::Client& cli, double seconds) {
  const auto whole = static_cast<time_t>(seconds);
  const auto usec = static_cast<time_t>((seconds - static_cast<double>(whole)) * 1e6);
  cli.set_connection_timeout(whole, usec);
  cli.set_read_timeout(whole, usec);
  cli.set_write_timeout(whole, usec);
}

}  // namespace

Completion parse_completion_body(const std::string& body, const std::string& response_path) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::ResponseFormat, "response is not JSON: " + excerpt(body));
  }
  Completion c;
  try {
    const json& text = j.at(json::json_pointer(response_path));
    if (!text.is_string()) {
      throw Error(ErrorKind::ResponseFormat,
                  "no text at '" + response_path + "' in response: " + excerpt(body));
    }
    c.text = text.get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorKind::ResponseFormat,
                "no text at '" + response_path + "' in response: " + excerpt(body));
  }
  const json::json_pointer logprobs("/choices/0/logprobs/content");
  if (j.contains(logprobs) && j.at(logprobs).is_array()) {
    for (const auto& t : j.at(logprobs)) {
      if (t.contains("token") && t.contains("logprob") && t["token"].is_string() &&
          t["logprob"].is_number()) {
        c.logprobs.push_back({t["token"].get<std::string>(), t["logprob"].get<double>()});
      }
    }
  }
  return c;
}

HttpChatBackend::HttpChatBackend(BackendConfig config)
    : config_(std::move(config)), sleeper_([](double s) {
        std::this_thread::sleep_for(std::chrono::duration<double>(s));
      }) {
  config_.check();
  parse_endpoint(config_.endpoint);
}

json HttpChatBackend::request_body(const PromptSpec& prompt) const {
  json body{{"model", config_.model},
            {"temperature", config_.temperature},
            {"messages", json::array({json{{"role", "user"}, {"content", prompt.text()}}})}};
  if (config_.request_logprobs) body["logprobs"] = true;
  return body;
}

Completion HttpChatBackend::complete(const PromptSpec& prompt) {
  const char* key = std::getenv(config_.credential_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw Error(ErrorKind::Auth, "environment variable " + config_.credential_env + " is not set");
  }
  const Endpoint ep = parse_endpoint(config_.endpoint);
  const std::string payload = request_body(prompt).dump();
  const httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};

  ErrorKind last_kind = ErrorKind::Transport;
  std::string last_message;
  int attempts = 0;
  for (int attempt = 0; attempt <= config_.retries; ++attempt) {
    ++attempts;
    if (attempt > 0) sleeper_(config_.backoff_seconds * std::pow(2.0, attempt - 1));

    httplib::Client cli(ep.origin);
    set_timeout(cli, config_.timeout_seconds);
    auto res = cli.Post(ep.path, headers, payload, "application/json");
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
      last_kind = timed_out ? ErrorKind::Timeout : ErrorKind::Transport;
      last_message = httplib::to_string(err);
      continue;
    }
    const int status = res->status;
    if (status >= 200 && status < 300) return parse_completion_body(res->body, config_.response_path);
    if (status == 401 || status == 403) {
      throw Error(ErrorKind::Auth, "HTTP " + std::to_string(status) + ": " + excerpt(res->body));
    }
    last_kind = ErrorKind::Http;
    last_message = "HTTP " + std::to_string(status) + ": " + excerpt(res->body);
    if (status != 429 && status < 500) break;
  }
  throw Error(last_kind, last_message + " (after " + std::to_string(attempts) +
                             " attempt(s))");
}

Completion chat_complete(const BackendConfig& config, const PromptSpec& prompt) {
  HttpChatBackend backend(config);
  return backend.complete(prompt);
}

}  // namespace vioscan::backends
