#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignkit/datamodel.hpp"

namespace alignkit {

enum class ChatMode { generate, judge_direct, judge_cot };

std::string to_string(ChatMode m);

struct ChatRequest {
  std::string model;
  std::vector<Message> messages;
  double temperature = 0.0;
  int max_tokens = 1024;
  ChatMode mode = ChatMode::generate;
};

struct ChatResponse {
  std::string content;
  std::uint64_t latency_ms = 0;
  /// 1 for a first-try success.
  std::uint32_t attempt = 1;
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8000";
  std::string chat_path = "/v1/chat/completions";
  std::string api_key;
  std::uint32_t timeout_ms = 60000;
  std::uint32_t max_retries = 3;
  std::uint32_t max_in_flight = 8;
  std::uint32_t backoff_base_ms = 250;
  std::string generate_model = "generator";
  std::string judge_model = "judge";
  double generate_temperature = 0.7;
  double judge_temperature = 0.0;
  int max_tokens = 2048;
};

/// Environment variable that overrides EndpointConfig::api_key.
inline constexpr const char* kApiKeyEnv = "ALIGNKIT_API_KEY";

/// Reads a JSON config whose keys mirror EndpointConfig fields. Missing keys
/// keep their defaults; the api key environment variable wins over the file.
EndpointConfig load_endpoint_config(const std::filesystem::path& path);
EndpointConfig endpoint_config_from_json(const nlohmann::json& j);
void validate_endpoint_config(const EndpointConfig& cfg);

/// Prompt templates with `{name}` placeholders. Judge output is constrained to
/// fixed verdict tokens or `key=value` lines so it can be parsed.
struct PromptTemplates {
  std::string version = "builtin-1";
  std::string judge_direct_system;
  std::string judge_cot_system;
  std::string equivalence;
  std::string rubric;
  std::string consistency;
  std::string reflect;
  std::string rewrite;
  std::string refine_prompt;

  static PromptTemplates builtin();
};

PromptTemplates load_prompt_templates(const std::filesystem::path& path);

/// Replaces every `{key}` with its value. Unknown placeholders are kept.
std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values);

/// Stable hash of a message list: SHA-256 of its compact JSON array.
std::string request_hash(const std::vector<Message>& messages);

/// Exact JSON body sent on the wire.
std::string request_body(const ChatRequest& req);

/// Reads the first choice's message content from a chat-completions reply.
std::string parse_completion_content(const std::string& body);

struct TransportReply {
  int status = 0;
  std::string body;
};

/// Retryable failure below HTTP semantics (timeout, refused connection).
class TransportError : public std::runtime_error {
 public:
  TransportError(const std::string& what, bool timed_out) : std::runtime_error(what), timed_out_(timed_out) {}
  bool timed_out() const { return timed_out_; }

 private:
  bool timed_out_;
};

class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportReply post(const EndpointConfig& cfg, const std::string& body) = 0;
};

class GatewayError : public std::runtime_error {
 public:
  enum class Kind { remote, exhausted, malformed_response };

  GatewayError(Kind kind, const std::string& what, int status = 0, std::uint32_t attempts = 0)
      : std::runtime_error(what), kind_(kind), status_(status), attempts_(attempts) {}

  Kind kind() const { return kind_; }
  int status() const { return status_; }
  std::uint32_t attempts() const { return attempts_; }

 private:
  Kind kind_;
  int status_;
  std::uint32_t attempts_;
};

/// Bounds the number of outstanding transport calls.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::uint32_t capacity) : capacity_(capacity) {}
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::uint32_t capacity_;
  std::uint32_t in_use_ = 0;
};

/// Thread-safe front door for every model call.
class ModelGateway {
 public:
  ModelGateway(EndpointConfig cfg, std::shared_ptr<Transport> transport,
               PromptTemplates templates = PromptTemplates::builtin());

  /// Sends the request, retrying timeouts, 5xx and 429 with exponential
  /// backoff and full jitter. The body is identical on every attempt.
  ChatResponse complete(const ChatRequest& req);

  /// Request with model and temperature defaults for the mode. Judge modes
  /// get their instruction system prompt prepended.
  ChatRequest make_request(ChatMode mode, std::vector<Message> messages) const;

  const EndpointConfig& config() const { return cfg_; }
  const PromptTemplates& templates() const { return templates_; }

 private:
  void backoff(std::uint32_t attempt) const;

  EndpointConfig cfg_;
  std::shared_ptr<Transport> transport_;
  PromptTemplates templates_;
  InFlightLimiter limiter_;
};

/// Transport over cpp-httplib speaking the OpenAI-compatible shape.
class HttpTransport : public Transport {
 public:
  TransportReply post(const EndpointConfig& cfg, const std::string& body) override;
};

}  // namespace alignkit
