#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "agentjudge/trajectory.hpp"

namespace agentjudge {

enum class Role { kSystem, kUser, kAssistant };

const char* to_string(Role role);

/// One chat turn. Images travel as content-addressed refs; the transport
/// layer inlines the bytes (base64) when talking to a real endpoint.
struct ChatMessage {
  Role role = Role::kUser;
  std::string text;
  std::vector<ScreenshotRef> images;

  static ChatMessage system(std::string text);
  static ChatMessage user(std::string text, std::vector<ScreenshotRef> images = {});
};

struct GenerationParams {
  double temperature = 0.0;  ///< evaluation default; greedy decoding
  int max_tokens = 1024;
  std::optional<int> top_k;
};

/// Stable content digest of (messages, params): role, text, and image hashes
/// in order, plus every generation parameter. Keys scripted backends and the
/// response cache.
std::string request_digest(const std::vector<ChatMessage>& messages,
                           const GenerationParams& params);

/// Transport abstraction: one completion attempt series for one model.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string model_name() const = 0;
  virtual std::string complete(const std::vector<ChatMessage>& messages,
                               const GenerationParams& params) = 0;
};

/// Replays canned responses keyed by request digest; the hermetic stand-in
/// for a live endpoint. Unknown digests throw UnknownScriptedRequest unless
/// a default response is set.
class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::string model_name = "scripted");

  void add_response(const std::string& digest, std::string response);
  void set_default_response(std::string response);
  bool has_response(const std::string& digest) const;

  /// Loads {"responses": {digest: text}, "default_response": text|null}.
  static std::shared_ptr<ScriptedBackend> from_json_file(const std::string& path);
  void save_json_file(const std::string& path) const;

  std::string model_name() const override { return model_name_; }
  std::string complete(const std::vector<ChatMessage>& messages,
                       const GenerationParams& params) override;

  int calls() const { return calls_.load(); }
  void reset_calls() { calls_ = 0; }

 private:
  std::string model_name_;
  std::map<std::string, std::string> responses_;
  std::optional<std::string> default_response_;
  std::atomic<int> calls_{0};
};

struct EndpointConfig {
  std::string base_url;  ///< scheme://host[:port][/path]; default path /v1/chat/completions
  std::string model_name;
  std::string auth_token_env;  ///< env var holding the bearer token; never logged
  int timeout_ms = 30000;
  int max_retries = 2;         ///< total attempts = max_retries + 1
  int initial_backoff_ms = 250;
};

using BlobResolver = std::function<std::optional<std::string>(const ScreenshotRef&)>;

/// Generic role-tagged chat JSON over HTTP(S) with base64 image attachments.
/// Retries timeouts and retryable statuses (429/5xx) with exponential
/// backoff; 401/403 raise AuthFailure immediately.
class HttpEndpointBackend : public ChatBackend {
 public:
  explicit HttpEndpointBackend(EndpointConfig config, BlobResolver blobs = nullptr);

  std::string model_name() const override { return config_.model_name; }
  std::string complete(const std::vector<ChatMessage>& messages,
                       const GenerationParams& params) override;

 private:
  EndpointConfig config_;
  BlobResolver blobs_;
};

struct GatewayOptions {
  std::string cache_dir;          ///< empty disables the response cache
  std::string request_log_path;   ///< empty disables the request log
  int max_concurrency = 4;        ///< in-flight requests per endpoint
};

/// Front door for model calls: digest-keyed response cache, JSONL request
/// log ({digest, model_name, latency_ms, outcome}), and a concurrency gate.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options = {});

  std::string complete(const std::vector<ChatMessage>& messages,
                       const GenerationParams& params);

  ChatBackend& backend() { return *backend_; }

 private:
  std::optional<std::string> cache_lookup(const std::string& key) const;
  void cache_store(const std::string& key, const std::string& response) const;
  void log_request(const std::string& digest, double latency_ms,
                   const std::string& outcome);

  std::shared_ptr<ChatBackend> backend_;
  GatewayOptions options_;
  std::mutex log_mutex_;
  std::mutex cache_write_mutex_;
  class Semaphore;
  std::shared_ptr<Semaphore> semaphore_;
};

}  // namespace agentjudge
