#include "agentjudge/gateway.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"

// Must match the configuration the library compiles httplib with; mixing
// layouts across translation units corrupts the inline definitions.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include "json.hpp"

namespace agentjudge {
namespace {

namespace fs = std::filesystem;

std::vector<ChatMessage> simple_request(const std::string& text) {
  return {ChatMessage::system("You are a judge."), ChatMessage::user(text)};
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

TEST(RequestDigest, StableAndSensitiveToEveryField) {
  const GenerationParams params;
  const std::string base = request_digest(simple_request("hello"), params);
  EXPECT_EQ(base.size(), 64u);
  EXPECT_EQ(request_digest(simple_request("hello"), params), base);

  EXPECT_NE(request_digest(simple_request("hello!"), params), base);

  std::vector<ChatMessage> role_swapped = simple_request("hello");
  role_swapped[1].role = Role::kAssistant;
  EXPECT_NE(request_digest(role_swapped, params), base);

  std::vector<ChatMessage> with_image = simple_request("hello");
  with_image[1].images.push_back({sha256_hex("img"), "synthetic:x"});
  const std::string with_image_digest = request_digest(with_image, params);
  EXPECT_NE(with_image_digest, base);
  std::vector<ChatMessage> other_image = simple_request("hello");
  other_image[1].images.push_back({sha256_hex("other"), "synthetic:x"});
  EXPECT_NE(request_digest(other_image, params), with_image_digest);

  GenerationParams temp = params;
  temp.temperature = 0.7;
  EXPECT_NE(request_digest(simple_request("hello"), temp), base);
  GenerationParams tokens = params;
  tokens.max_tokens = 99;
  EXPECT_NE(request_digest(simple_request("hello"), tokens), base);
  GenerationParams top_k = params;
  top_k.top_k = 40;
  EXPECT_NE(request_digest(simple_request("hello"), top_k), base);
}

TEST(ScriptedBackend, ReplaysByDigestAndCounts) {
  ScriptedBackend backend("test-model");
  const GenerationParams params;
  const auto request = simple_request("what now?");
  backend.add_response(request_digest(request, params), "Do the thing.");
  EXPECT_TRUE(backend.has_response(request_digest(request, params)));
  EXPECT_EQ(backend.complete(request, params), "Do the thing.");
  EXPECT_EQ(backend.calls(), 1);
  EXPECT_THROW(backend.complete(simple_request("unknown"), params),
               UnknownScriptedRequest);
  EXPECT_EQ(backend.calls(), 2);
  backend.set_default_response("fallback");
  EXPECT_EQ(backend.complete(simple_request("unknown"), params), "fallback");
  backend.reset_calls();
  EXPECT_EQ(backend.calls(), 0);
}

TEST(ScriptedBackend, JsonFileRoundTrip) {
  const fs::path dir = fs::temp_directory_path() / "agentjudge_scripted_test";
  fs::create_directories(dir);
  const std::string path = (dir / "responses.json").string();
  {
    ScriptedBackend backend("model-a");
    backend.add_response(sha256_hex("k1"), "first\nline two");
    backend.add_response(sha256_hex("k2"), "second");
    backend.save_json_file(path);
  }
  auto loaded = ScriptedBackend::from_json_file(path);
  EXPECT_EQ(loaded->model_name(), "model-a");
  EXPECT_TRUE(loaded->has_response(sha256_hex("k1")));
  EXPECT_TRUE(loaded->has_response(sha256_hex("k2")));
  EXPECT_FALSE(loaded->has_response(sha256_hex("k3")));
  EXPECT_THROW(ScriptedBackend::from_json_file((dir / "missing.json").string()),
               ConfigError);
  fs::remove_all(dir);
}

TEST(GatewayCache, SecondCallIsServedFromDisk) {
  const fs::path dir = fs::temp_directory_path() / "agentjudge_cache_test";
  fs::remove_all(dir);
  auto backend = std::make_shared<ScriptedBackend>("cached-model");
  const GenerationParams params;
  const auto request = simple_request("cache me");
  backend->add_response(request_digest(request, params), "cached answer");
  GatewayOptions options;
  options.cache_dir = (dir / "cache").string();
  Gateway gateway(backend, options);
  EXPECT_EQ(gateway.complete(request, params), "cached answer");
  EXPECT_EQ(gateway.complete(request, params), "cached answer");
  EXPECT_EQ(backend->calls(), 1);  // second hit never reached the backend
  fs::remove_all(dir);
}

TEST(GatewayLog, RecordsOutcomesWithoutSecrets) {
  const fs::path dir = fs::temp_directory_path() / "agentjudge_log_test";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto backend = std::make_shared<ScriptedBackend>("logged-model");
  const GenerationParams params;
  const auto request = simple_request("log me");
  backend->add_response(request_digest(request, params), "ok");
  GatewayOptions options;
  options.request_log_path = (dir / "requests.jsonl").string();
  Gateway gateway(backend, options);
  gateway.complete(request, params);
  EXPECT_THROW(gateway.complete(simple_request("nope"), params),
               UnknownScriptedRequest);
  const std::string log = slurp(options.request_log_path);
  EXPECT_NE(log.find("logged-model"), std::string::npos);
  EXPECT_NE(log.find("\"outcome\":\"ok\""), std::string::npos);
  EXPECT_NE(log.find("\"outcome\":\"error: "), std::string::npos);  // failures logged too
  EXPECT_EQ(log.find("log me"), std::string::npos);      // no prompt bodies
  fs::remove_all(dir);
}

// --- live HTTP endpoint ----------------------------------------------------

class EndpointFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res);
                 });
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  virtual void handle(const httplib::Request& req, httplib::Response& res) {
    last_body_ = req.body;
    auth_header_ = req.get_header_value("Authorization");
    const int fail = fail_first_.load();
    if (fail > 0 && calls_.fetch_add(1) < fail) {
      res.status = fail_status_;
      res.set_content("overloaded", "text/plain");
      return;
    }
    calls_.fetch_add(fail > 0 ? 0 : 1);
    res.set_content(nlohmann::json{{"text", canned_}}.dump(), "application/json");
  }

  EndpointConfig config() const {
    EndpointConfig config;
    config.base_url = "http://127.0.0.1:" + std::to_string(port_);
    config.model_name = "live-model";
    config.timeout_ms = 2000;
    config.max_retries = 2;
    config.initial_backoff_ms = 10;
    return config;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::atomic<int> fail_first_{0};
  int fail_status_ = 500;
  std::string canned_ = "endpoint says hi";
  std::string last_body_;
  std::string auth_header_;
};

TEST_F(EndpointFixture, CompletesAndSendsStructuredPayload) {
  HttpEndpointBackend backend(config());
  GenerationParams params;
  params.temperature = 0.25;
  params.top_k = 12;
  EXPECT_EQ(backend.complete(simple_request("ping"), params), "endpoint says hi");
  const nlohmann::json payload = nlohmann::json::parse(last_body_);
  EXPECT_EQ(payload.at("model"), "live-model");
  EXPECT_DOUBLE_EQ(payload.at("temperature").get<double>(), 0.25);
  EXPECT_EQ(payload.at("top_k"), 12);
  ASSERT_EQ(payload.at("messages").size(), 2u);
  EXPECT_EQ(payload["messages"][0]["role"], "system");
  EXPECT_EQ(payload["messages"][1]["role"], "user");
}

TEST_F(EndpointFixture, RetriesAfterServerErrorsThenSucceeds) {
  fail_first_ = 2;  // two 500s, then success; max_retries 2 allows 3 attempts
  HttpEndpointBackend backend(config());
  EXPECT_EQ(backend.complete(simple_request("retry"), {}), "endpoint says hi");
  EXPECT_GE(calls_.load(), 3);
}

TEST_F(EndpointFixture, GivesUpAfterRetryBudget) {
  fail_first_ = 100;
  EndpointConfig cfg = config();
  cfg.max_retries = 1;
  HttpEndpointBackend backend(cfg);
  EXPECT_THROW(backend.complete(simple_request("never"), {}), TimeoutError);
  EXPECT_EQ(calls_.load(), 2);  // max_retries + 1 attempts
}

TEST_F(EndpointFixture, AuthFailureIsImmediate) {
  fail_first_ = 100;
  fail_status_ = 401;
  HttpEndpointBackend backend(config());
  EXPECT_THROW(backend.complete(simple_request("denied"), {}), AuthFailure);
  EXPECT_EQ(calls_.load(), 1);  // no retries on credential rejection
}

TEST_F(EndpointFixture, BearerTokenComesFromEnvironment) {
  setenv("AGENT_JUDGE_TEST_TOKEN", "sekrit-value", 1);
  EndpointConfig cfg = config();
  cfg.auth_token_env = "AGENT_JUDGE_TEST_TOKEN";
  HttpEndpointBackend backend(cfg);
  EXPECT_EQ(backend.complete(simple_request("auth"), {}), "endpoint says hi");
  EXPECT_EQ(auth_header_, "Bearer sekrit-value");
  unsetenv("AGENT_JUDGE_TEST_TOKEN");
  EXPECT_THROW(backend.complete(simple_request("auth"), {}), AuthFailure);
}

TEST_F(EndpointFixture, MissingBlobBytesFailBeforeTheWire) {
  HttpEndpointBackend backend(config());  // no blob resolver
  std::vector<ChatMessage> request = simple_request("img");
  request[1].images.push_back({sha256_hex("img"), "synthetic:x"});
  EXPECT_THROW(backend.complete(request, {}), MalformedResponse);
  EXPECT_EQ(calls_.load(), 0);
}

TEST_F(EndpointFixture, ImagesTravelAsBase64) {
  BlobResolver resolver = [](const ScreenshotRef& ref) -> std::optional<std::string> {
    return std::string("PNGBYTES");
  };
  HttpEndpointBackend backend(config(), resolver);
  std::vector<ChatMessage> request = simple_request("img");
  request[1].images.push_back({sha256_hex("img"), "synthetic:x"});
  EXPECT_EQ(backend.complete(request, {}), "endpoint says hi");
  EXPECT_NE(last_body_.find("UE5HQllURVM="), std::string::npos);  // b64("PNGBYTES")
}

TEST(EndpointTimeouts, ConnectionFailureBecomesTimeoutError) {
  EndpointConfig config;
  config.base_url = "http://127.0.0.1:1";  // nothing listens here
  config.model_name = "m";
  config.timeout_ms = 200;
  config.max_retries = 0;
  config.initial_backoff_ms = 1;
  HttpEndpointBackend backend(config);
  EXPECT_THROW(backend.complete(simple_request("x"), {}), TimeoutError);
}

}  // namespace
}  // namespace agentjudge
