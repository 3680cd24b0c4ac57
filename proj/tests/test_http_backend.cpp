#include <gtest/gtest.h>

#include <cstdlib>

#include "mock_server.hpp"
#include "vioscan/error.hpp"
#include "vioscan/http_backend.hpp"

using namespace vioscan;
using namespace vioscan::backends;
using support::MockChatServer;

namespace {

constexpr const char* kEnv = "VIOSCAN_TEST_KEY";

PromptSpec prompt() { return PromptSpec{{{"input", "hello"}}}; }

BackendConfig config_for(const MockChatServer& s) {
  BackendConfig c;
  c.endpoint = s.endpoint();
  c.credential_env = kEnv;
  c.timeout_seconds = 5;
  c.backoff_seconds = 0.0;
  return c;
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

class HttpBackend : public ::testing::Test {
 protected:
  void SetUp() override { setenv(kEnv, "sk-test", 1); }
  void TearDown() override { unsetenv(kEnv); }
};

}  // namespace

TEST_F(HttpBackend, DefaultPayloadCarriesTemperatureAndModel) {
  MockChatServer s([](const nlohmann::json&, std::size_t) { return MockChatServer::Reply{200, MockChatServer::completion("hi")}; });
  const auto c = chat_complete(config_for(s), prompt());
  EXPECT_EQ(c.text, "hi");
  const auto cap = s.captured();
  ASSERT_EQ(cap.size(), 1u);
  const auto j = nlohmann::json::parse(cap[0].body);
  EXPECT_DOUBLE_EQ(j.at("temperature").get<double>(), 0.7);
  EXPECT_EQ(j.at("model"), "gpt-4");
  EXPECT_EQ(j.at("messages").at(0).at("role"), "user");
  EXPECT_EQ(j.at("messages").at(0).at("content"), "hello");
  EXPECT_FALSE(j.contains("logprobs"));
  EXPECT_EQ(cap[0].authorization, "Bearer sk-test");
}

TEST_F(HttpBackend, MissingCredentialFailsBeforeNetwork) {
  MockChatServer s([](const nlohmann::json&, std::size_t) { return MockChatServer::Reply{200, MockChatServer::completion("hi")}; });
  unsetenv(kEnv);
  EXPECT_EQ(error_of([&] { chat_complete(config_for(s), prompt()); }).kind(), ErrorKind::Auth);
  EXPECT_TRUE(s.captured().empty());
}

TEST_F(HttpBackend, MalformedBodyCarriesExcerpt) {
  MockChatServer s([](const nlohmann::json&, std::size_t) { return MockChatServer::Reply{200, "<html>oops</html>"}; });
  const auto e = error_of([&] { chat_complete(config_for(s), prompt()); });
  EXPECT_EQ(e.kind(), ErrorKind::ResponseFormat);
  EXPECT_NE(e.message().find("<html>oops"), std::string::npos);
  const auto e2 = error_of([] { parse_completion_body(R"({"choices":[]})", "/choices/0/message/content"); });
  EXPECT_EQ(e2.kind(), ErrorKind::ResponseFormat);
}

TEST_F(HttpBackend, RetriesTransientStatusThenSucceeds) {
  MockChatServer s([](const nlohmann::json&, std::size_t call) {
    if (call < 2) return MockChatServer::Reply{503, "busy"};
    return MockChatServer::Reply{200, MockChatServer::completion("ok")};
  });
  auto cfg = config_for(s);
  cfg.backoff_seconds = 0.5;
  HttpChatBackend b(cfg);
  std::vector<double> sleeps;
  b.set_sleeper([&](double d) { sleeps.push_back(d); });
  EXPECT_EQ(b.complete(prompt()).text, "ok");
  EXPECT_EQ(s.captured().size(), 3u);
  EXPECT_EQ(sleeps, (std::vector<double>{0.5, 1.0}));
}

TEST_F(HttpBackend, GivesUpAfterRetries) {
  MockChatServer s([](const nlohmann::json&, std::size_t) { return MockChatServer::Reply{500, "down"}; });
  auto cfg = config_for(s);
  cfg.retries = 2;
  const auto e = error_of([&] { chat_complete(cfg, prompt()); });
  EXPECT_EQ(e.kind(), ErrorKind::Http);
  EXPECT_EQ(s.captured().size(), 3u);
  EXPECT_NE(e.message().find("3 attempt"), std::string::npos);
}

TEST_F(HttpBackend, ClientErrorsAreNotRetried) {
  MockChatServer s([](const nlohmann::json&, std::size_t) { return MockChatServer::Reply{400, "bad request"}; });
  EXPECT_EQ(error_of([&] { chat_complete(config_for(s), prompt()); }).kind(), ErrorKind::Http);
  EXPECT_EQ(s.captured().size(), 1u);
}

TEST_F(HttpBackend, UnauthorizedIsAuthError) {
  MockChatServer s([](const nlohmann::json&, std::size_t) { return MockChatServer::Reply{401, "no"}; });
  EXPECT_EQ(error_of([&] { chat_complete(config_for(s), prompt()); }).kind(), ErrorKind::Auth);
  EXPECT_EQ(s.captured().size(), 1u);
}

TEST_F(HttpBackend, UnreachableIsTransport) {
  BackendConfig c;
  c.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  c.credential_env = kEnv;
  c.retries = 0;
  c.timeout_seconds = 2;
  const auto k = error_of([&] { chat_complete(c, prompt()); }).kind();
  EXPECT_TRUE(k == ErrorKind::Transport || k == ErrorKind::Timeout);
}

TEST_F(HttpBackend, CustomResponsePathAndLogprobs) {
  MockChatServer s([](const nlohmann::json& req, std::size_t) {
    EXPECT_EQ(req.value("logprobs", false), true);
    return MockChatServer::Reply{
        200, R"({"out":{"text":"ab"},"choices":[{"logprobs":{"content":[{"token":"a","logprob":-0.5},{"token":"b","logprob":-1}]}}]})"};
  });
  auto cfg = config_for(s);
  cfg.response_path = "/out/text";
  cfg.request_logprobs = true;
  const auto c = chat_complete(cfg, prompt());
  EXPECT_EQ(c.text, "ab");
  ASSERT_EQ(c.logprobs.size(), 2u);
  EXPECT_DOUBLE_EQ(c.logprobs[1].logprob, -1.0);
}

TEST(HttpBackendConfig, RejectsNonHttpEndpoint) {
  BackendConfig c;
  c.endpoint = "ftp://example.com";
  EXPECT_EQ(error_of([&] { HttpChatBackend b(c); }).kind(), ErrorKind::InvalidArgument);
}
