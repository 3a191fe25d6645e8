#include "agentjudge/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "agentjudge/errors.hpp"
#include "agentjudge/hash.hpp"

namespace agentjudge {

using nlohmann::json;

const char* to_string(Role role) {
  switch (role) {
    case Role::kSystem:
      return "system";
    case Role::kUser:
      return "user";
    case Role::kAssistant:
      return "assistant";
  }
  return "user";
}

ChatMessage ChatMessage::system(std::string text) {
  ChatMessage m;
  m.role = Role::kSystem;
  m.text = std::move(text);
  return m;
}

ChatMessage ChatMessage::user(std::string text, std::vector<ScreenshotRef> images) {
  ChatMessage m;
  m.role = Role::kUser;
  m.text = std::move(text);
  m.images = std::move(images);
  return m;
}

std::string request_digest(const std::vector<ChatMessage>& messages,
                          const GenerationParams& params) {
  json canonical;
  json msgs = json::array();
  for (const ChatMessage& m : messages) {
    json images = json::array();
    for (const ScreenshotRef& ref : m.images) images.push_back(ref.sha256);
    msgs.push_back(json{{"role", to_string(m.role)},
                        {"text", m.text},
                        {"images", images}});
  }
  canonical["messages"] = msgs;
  canonical["params"] = json{{"temperature", params.temperature},
                             {"max_tokens", params.max_tokens},
                             {"top_k", params.top_k ? json(*params.top_k) : json()}};
  return sha256_hex(canonical.dump());
}

// --- scripted backend -----------------------------------------------------

ScriptedBackend::ScriptedBackend(std::string model_name)
    : model_name_(std::move(model_name)) {}

void ScriptedBackend::add_response(const std::string& digest, std::string response) {
  responses_[digest] = std::move(response);
}

void ScriptedBackend::set_default_response(std::string response) {
  default_response_ = std::move(response);
}

bool ScriptedBackend::has_response(const std::string& digest) const {
  return responses_.count(digest) > 0;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scripted response file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("scripted response file " + path + ": " + e.what());
  }
  auto backend =
      std::make_shared<ScriptedBackend>(doc.value("model_name", std::string("scripted")));
  const json responses = doc.value("responses", json::object());
  for (const auto& [digest, text] : responses.items()) {
    backend->add_response(digest, text.get<std::string>());
  }
  if (doc.contains("default_response") && doc["default_response"].is_string()) {
    backend->set_default_response(doc["default_response"].get<std::string>());
  }
  return backend;
}

void ScriptedBackend::save_json_file(const std::string& path) const {
  json doc;
  doc["model_name"] = model_name_;
  doc["responses"] = responses_;
  doc["default_response"] =
      default_response_ ? json(*default_response_) : json();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write scripted response file: " + path);
  out << doc.dump(2) << "\n";
}

std::string ScriptedBackend::complete(const std::vector<ChatMessage>& messages,
                                      const GenerationParams& params) {
  calls_.fetch_add(1);
  const std::string digest = request_digest(messages, params);
  auto it = responses_.find(digest);
  if (it != responses_.end()) return it->second;
  if (default_response_) return *default_response_;
  throw UnknownScriptedRequest("no scripted response for digest " + digest);
}

// --- http endpoint backend ------------------------------------------------

namespace {

std::string base64_encode(const std::string& bytes) {
  static const char kTable[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < bytes.size()) {
    std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) |
                      (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                      static_cast<unsigned char>(bytes[i + 2]);
    out.push_back(kTable[(n >> 18) & 63]);
    out.push_back(kTable[(n >> 12) & 63]);
    out.push_back(kTable[(n >> 6) & 63]);
    out.push_back(kTable[n & 63]);
    i += 3;
  }
  if (i + 1 == bytes.size()) {
    std::uint32_t n = static_cast<unsigned char>(bytes[i]) << 16;
    out.push_back(kTable[(n >> 18) & 63]);
    out.push_back(kTable[(n >> 12) & 63]);
    out.append("==");
  } else if (i + 2 == bytes.size()) {
    std::uint32_t n = (static_cast<unsigned char>(bytes[i]) << 16) |
                      (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out.push_back(kTable[(n >> 18) & 63]);
    out.push_back(kTable[(n >> 12) & 63]);
    out.push_back(kTable[(n >> 6) & 63]);
    out.push_back('=');
  }
  return out;
}

/// Splits "scheme://host[:port][/path]" into the client origin and the POST
/// path (default /v1/chat/completions when the URL has no path).
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  std::size_t scheme_end = base_url.find("://");
  std::size_t path_start = scheme_end == std::string::npos
                               ? base_url.find('/')
                               : base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos || path_start + 1 >= base_url.size()) {
    std::string origin = path_start == std::string::npos
                             ? base_url
                             : base_url.substr(0, path_start);
    return {origin, "/v1/chat/completions"};
  }
  return {base_url.substr(0, path_start), base_url.substr(path_start)};
}

std::string extract_response_text(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw MalformedResponse("endpoint returned non-JSON body");
  }
  if (doc.contains("text") && doc["text"].is_string()) {
    return doc["text"].get<std::string>();
  }
  if (doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
    const json& message = doc["choices"][0].value("message", json::object());
    if (message.contains("content") && message["content"].is_string()) {
      return message["content"].get<std::string>();
    }
  }
  throw MalformedResponse("endpoint response has no text field");
}

}  // namespace

HttpEndpointBackend::HttpEndpointBackend(EndpointConfig config, BlobResolver blobs)
    : config_(std::move(config)), blobs_(std::move(blobs)) {
  if (config_.base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (config_.model_name.empty()) throw ConfigError("endpoint model_name is empty");
}

std::string HttpEndpointBackend::complete(const std::vector<ChatMessage>& messages,
                                          const GenerationParams& params) {
  json payload;
  payload["model"] = config_.model_name;
  payload["temperature"] = params.temperature;
  payload["max_tokens"] = params.max_tokens;
  if (params.top_k) payload["top_k"] = *params.top_k;
  json msgs = json::array();
  for (const ChatMessage& m : messages) {
    json content = json::array();
    if (!m.text.empty()) content.push_back(json{{"type", "text"}, {"text", m.text}});
    for (const ScreenshotRef& ref : m.images) {
      std::optional<std::string> bytes = blobs_ ? blobs_(ref) : std::nullopt;
      if (!bytes) {
        throw MalformedResponse("no bytes available for screenshot " + ref.sha256);
      }
      content.push_back(json{{"type", "image"}, {"image_b64", base64_encode(*bytes)}});
    }
    msgs.push_back(json{{"role", to_string(m.role)}, {"content", content}});
  }
  payload["messages"] = msgs;
  const std::string body = payload.dump();

  auto [origin, path] = split_base_url(config_.base_url);
  httplib::Client client(origin);
  client.set_connection_timeout(0, config_.timeout_ms * 1000LL);
  client.set_read_timeout(0, config_.timeout_ms * 1000LL);
  client.set_write_timeout(0, config_.timeout_ms * 1000LL);
  httplib::Headers headers;
  if (!config_.auth_token_env.empty()) {
    const char* token = std::getenv(config_.auth_token_env.c_str());
    if (!token || !*token) {
      throw AuthFailure("auth token env var is not set: " + config_.auth_token_env);
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config_.initial_backoff_ms * (1 << (attempt - 1))));
    }
    httplib::Result result = client.Post(path, headers, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;  // connection/timeout level failure, retry
    }
    if (result->status == 401 || result->status == 403) {
      throw AuthFailure("endpoint rejected credentials (status " +
                        std::to_string(result->status) + ")");
    }
    if (result->status == 429 || result->status >= 500) {
      last_error = "status " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      throw MalformedResponse("unexpected endpoint status " +
                              std::to_string(result->status));
    }
    return extract_response_text(result->body);
  }
  throw TimeoutError("endpoint unreachable after " +
                     std::to_string(config_.max_retries + 1) + " attempts: " +
                     last_error);
}

// --- gateway --------------------------------------------------------------

/// Counting semaphore on a condvar; std::counting_semaphore needs a
/// compile-time ceiling, and the limit here is a runtime option.
class Gateway::Semaphore {
 public:
  explicit Semaphore(int count) : count_(count) {}

  void acquire() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [this] { return count_ > 0; });
    --count_;
  }

  void release() {
    {
      std::lock_guard lock(mutex_);
      ++count_;
    }
    cv_.notify_one();
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  int count_;
};

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, GatewayOptions options)
    : backend_(std::move(backend)), options_(std::move(options)) {
  if (!backend_) throw ConfigError("gateway needs a backend");
  if (options_.max_concurrency < 1) options_.max_concurrency = 1;
  semaphore_ = std::make_shared<Semaphore>(options_.max_concurrency);
  if (!options_.cache_dir.empty()) {
    std::filesystem::create_directories(options_.cache_dir);
  }
}

std::optional<std::string> Gateway::cache_lookup(const std::string& key) const {
  if (options_.cache_dir.empty()) return std::nullopt;
  std::ifstream in(std::filesystem::path(options_.cache_dir) / (key + ".txt"),
                   std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void Gateway::cache_store(const std::string& key, const std::string& response) const {
  if (options_.cache_dir.empty()) return;
  const auto path = std::filesystem::path(options_.cache_dir) / (key + ".txt");
  const auto tmp = std::filesystem::path(options_.cache_dir) / (key + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << response;
  }
  std::filesystem::rename(tmp, path);
}

void Gateway::log_request(const std::string& digest, double latency_ms,
                          const std::string& outcome) {
  if (options_.request_log_path.empty()) return;
  json record{{"digest", digest},
              {"model_name", backend_->model_name()},
              {"latency_ms", latency_ms},
              {"outcome", outcome}};
  std::lock_guard lock(log_mutex_);
  std::ofstream out(options_.request_log_path, std::ios::app);
  out << record.dump() << "\n";
}

std::string Gateway::complete(const std::vector<ChatMessage>& messages,
                              const GenerationParams& params) {
  const std::string digest = request_digest(messages, params);
  // Cache entries are additionally keyed by model so two endpoints sharing a
  // cache directory cannot collide.
  const std::string cache_key = sha256_hex(backend_->model_name() + ":" + digest);
  if (auto cached = cache_lookup(cache_key)) {
    log_request(digest, 0.0, "cached");
    return *cached;
  }
  semaphore_->acquire();
  const auto start = std::chrono::steady_clock::now();
  try {
    std::string response = backend_->complete(messages, params);
    const double latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  start)
            .count();
    semaphore_->release();
    {
      std::lock_guard lock(cache_write_mutex_);
      cache_store(cache_key, response);
    }
    log_request(digest, latency_ms, "ok");
    return response;
  } catch (const Error& e) {
    const double latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                  start)
            .count();
    semaphore_->release();
    log_request(digest, latency_ms, std::string("error: ") + e.what());
    throw;
  }
}

}  // namespace agentjudge
