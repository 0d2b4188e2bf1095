#include "alignkit/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <random>
#include <thread>

#include "alignkit/hashing.hpp"

namespace alignkit {

using nlohmann::json;

std::string to_string(ChatMode m) {
  switch (m) {
    case ChatMode::generate:
      return "generate";
    case ChatMode::judge_direct:
      return "judge_direct";
    case ChatMode::judge_cot:
      return "judge_cot";
  }
  return "?";
}

EndpointConfig endpoint_config_from_json(const json& j) {
  EndpointConfig cfg;
  cfg.base_url = j.value("base_url", cfg.base_url);
  cfg.chat_path = j.value("chat_path", cfg.chat_path);
  cfg.api_key = j.value("api_key", cfg.api_key);
  cfg.timeout_ms = j.value("timeout_ms", cfg.timeout_ms);
  cfg.max_retries = j.value("max_retries", cfg.max_retries);
  cfg.max_in_flight = j.value("max_in_flight", cfg.max_in_flight);
  cfg.backoff_base_ms = j.value("backoff_base_ms", cfg.backoff_base_ms);
  cfg.generate_model = j.value("generate_model", cfg.generate_model);
  cfg.judge_model = j.value("judge_model", cfg.judge_model);
  cfg.generate_temperature = j.value("generate_temperature", cfg.generate_temperature);
  cfg.judge_temperature = j.value("judge_temperature", cfg.judge_temperature);
  cfg.max_tokens = j.value("max_tokens", cfg.max_tokens);
  if (const char* key = std::getenv(kApiKeyEnv); key != nullptr && *key != '\0') cfg.api_key = key;
  validate_endpoint_config(cfg);
  return cfg;
}

EndpointConfig load_endpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read endpoint config " + path.string());
  return endpoint_config_from_json(json::parse(in));
}

void validate_endpoint_config(const EndpointConfig& cfg) {
  if (cfg.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
  if (cfg.max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  if (cfg.generate_temperature < 0 || cfg.judge_temperature < 0) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (cfg.base_url.empty()) throw std::invalid_argument("base_url is empty");
}

PromptTemplates PromptTemplates::builtin() {
  PromptTemplates t;
  t.judge_direct_system =
      "You are a strict grader. Do not show any reasoning. Reply with the verdict token only.";
  t.judge_cot_system =
      "You are a careful grader. First reason step by step about the response. Then finish with a final "
      "block containing exactly one line per dimension in the form name=score.";
  t.equivalence =
      "Decide whether the candidate answer is mathematically or logically equivalent to the reference "
      "answer.\nReference: {gold}\nCandidate: {candidate}\nReply with exactly one token: EQUIVALENT or "
      "DIFFERENT.";
  t.rubric =
      "Grade the final assistant turn of the conversation on each dimension.\n{dimensions}\nContext:\n"
      "{context}\nConversation:\n{transcript}\nEnd with one line per dimension: name=score.";
  t.consistency =
      "Is the answer fully supported by the document, with no unsupported claims?\nDocument:\n{document}\n"
      "Question: {question}\nAnswer: {answer}\nReply with exactly one token: CONSISTENT or INCONSISTENT.";
  t.reflect =
      "Your previous answer to the task below was judged incorrect.\nTask:\n{task}\nPrevious answer:\n"
      "{candidate}\nVerifier feedback: {feedback}\nExplain precisely what went wrong. Do not write a new "
      "answer.";
  t.rewrite =
      "Rewrite the answer to the task using the critique.\nTask:\n{task}\nPrevious answer:\n{candidate}\n"
      "Critique:\n{critique}\nReturn the full corrected answer, reasoning inside <think></think> followed "
      "by the final answer.";
  t.refine_prompt =
      "The instruction below produced errors on a validation set.\nInstruction:\n{prompt}\nFailures:\n"
      "{errors}\nWrite an improved instruction that makes the implicit rules explicit. Return only the new "
      "instruction.";
  return t;
}

PromptTemplates load_prompt_templates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read prompt templates " + path.string());
  const json j = json::parse(in);
  PromptTemplates t = PromptTemplates::builtin();
  t.version = j.value("version", t.version);
  t.judge_direct_system = j.value("judge_direct_system", t.judge_direct_system);
  t.judge_cot_system = j.value("judge_cot_system", t.judge_cot_system);
  t.equivalence = j.value("equivalence", t.equivalence);
  t.rubric = j.value("rubric", t.rubric);
  t.consistency = j.value("consistency", t.consistency);
  t.reflect = j.value("reflect", t.reflect);
  t.rewrite = j.value("rewrite", t.rewrite);
  t.refine_prompt = j.value("refine_prompt", t.refine_prompt);
  return t;
}

std::string render_template(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const auto close = tmpl.find('}', i + 1);
      if (close != std::string::npos) {
        const auto it = values.find(tmpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i]);
    ++i;
  }
  return out;
}

std::string request_hash(const std::vector<Message>& messages) { return sha256_hex(json(messages).dump()); }

std::string request_body(const ChatRequest& req) {
  json j;
  j["model"] = req.model;
  j["messages"] = req.messages;
  j["temperature"] = req.temperature;
  j["max_tokens"] = req.max_tokens;
  return j.dump();
}

std::string parse_completion_content(const std::string& body) {
  const json j = json::parse(body);
  return j.at("choices").at(0).at("message").at("content").get<std::string>();
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return in_use_ < capacity_; });
  ++in_use_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_use_;
  }
  cv_.notify_one();
}

ModelGateway::ModelGateway(EndpointConfig cfg, std::shared_ptr<Transport> transport, PromptTemplates templates)
    : cfg_(std::move(cfg)),
      transport_(std::move(transport)),
      templates_(std::move(templates)),
      limiter_(cfg_.max_in_flight) {
  validate_endpoint_config(cfg_);
  if (!transport_) throw std::invalid_argument("gateway needs a transport");
}

ChatRequest ModelGateway::make_request(ChatMode mode, std::vector<Message> messages) const {
  ChatRequest req;
  req.mode = mode;
  req.max_tokens = cfg_.max_tokens;
  if (mode == ChatMode::generate) {
    req.model = cfg_.generate_model;
    req.temperature = cfg_.generate_temperature;
    req.messages = std::move(messages);
    return req;
  }
  req.model = cfg_.judge_model;
  req.temperature = cfg_.judge_temperature;
  req.messages.push_back({Role::system, mode == ChatMode::judge_direct ? templates_.judge_direct_system
                                                                         : templates_.judge_cot_system});
  for (auto& m : messages) req.messages.push_back(std::move(m));
  return req;
}

void ModelGateway::backoff(std::uint32_t attempt) const {
  if (cfg_.backoff_base_ms == 0) return;
  thread_local std::mt19937_64 rng(std::random_device{}());
  const double cap = static_cast<double>(cfg_.backoff_base_ms) * static_cast<double>(1ULL << std::min(attempt, 16U));
  std::uniform_real_distribution<double> jitter(0.0, cap);
  std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(jitter(rng)));
}

ChatResponse ModelGateway::complete(const ChatRequest& req) {
  if (req.messages.empty()) throw std::invalid_argument("chat request has no messages");
  const std::string body = request_body(req);
  const std::uint32_t max_attempts = cfg_.max_retries + 1;
  std::string last_failure;
  for (std::uint32_t attempt = 1; attempt <= max_attempts; ++attempt) {
    if (attempt > 1) backoff(attempt - 1);
    const auto start = std::chrono::steady_clock::now();
    TransportReply reply;
    limiter_.acquire();
    try {
      reply = transport_->post(cfg_, body);
      limiter_.release();
    } catch (const TransportError& e) {
      limiter_.release();
      last_failure = e.timed_out() ? std::string("timeout: ") + e.what() : std::string(e.what());
      continue;
    } catch (...) {
      limiter_.release();
      throw;
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
    if (reply.status == 200) {
      ChatResponse resp;
      try {
        resp.content = parse_completion_content(reply.body);
      } catch (const std::exception& e) {
        throw GatewayError(GatewayError::Kind::malformed_response, std::string("malformed completion: ") + e.what(),
                           reply.status, attempt);
      }
      resp.latency_ms = static_cast<std::uint64_t>(elapsed.count());
      resp.attempt = attempt;
      return resp;
    }
    if (reply.status == 429 || reply.status >= 500) {
      last_failure = "HTTP " + std::to_string(reply.status);
      continue;
    }
    throw GatewayError(GatewayError::Kind::remote, "HTTP " + std::to_string(reply.status) + ": " + reply.body,
                       reply.status, attempt);
  }
  throw GatewayError(GatewayError::Kind::exhausted,
                     "exhausted after " + std::to_string(max_attempts) + " attempts (last: " + last_failure + ")", 0,
                     max_attempts);
}

}  // namespace alignkit
