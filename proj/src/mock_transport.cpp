#include "alignkit/mock_transport.hpp"

#include <fstream>
#include <thread>

namespace alignkit {

using nlohmann::json;

MockTransport::MockTransport(const std::vector<MockEntry>& entries) {
  for (const auto& e : entries) add(e);
}

void MockTransport::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read mock transcript " + path.string());
  std::vector<MockEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      entries.push_back({j.at("request_hash").get<std::string>(), j.at("response_content").get<std::string>(),
                         j.value("fail_times", 0)});
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  for (const auto& e : entries) add(e);
}

void MockTransport::add(const MockEntry& entry) {
  std::lock_guard lock(mu_);
  scripts_[entry.request_hash] = Script{entry.response_content, entry.fail_times, 0};
}

void MockTransport::add(const std::vector<Message>& messages, std::string content, int fail_times) {
  add(MockEntry{request_hash(messages), std::move(content), fail_times});
}

void MockTransport::set_fallback(Responder responder) {
  std::lock_guard lock(mu_);
  fallback_ = std::move(responder);
}

std::size_t MockTransport::calls_for(const std::string& hash) const {
  std::lock_guard lock(mu_);
  if (auto it = scripts_.find(hash); it != scripts_.end()) return it->second.calls;
  if (auto it = unscripted_calls_.find(hash); it != unscripted_calls_.end()) return it->second;
  return 0;
}

std::string MockTransport::completion_body(const std::string& content) {
  json j;
  j["choices"] = json::array({{{"index", 0}, {"message", {{"role", "assistant"}, {"content", content}}}}});
  return j.dump();
}

TransportReply MockTransport::post(const EndpointConfig&, const std::string& body) {
  ++total_calls_;
  const std::size_t now = ++in_flight_;
  std::size_t peak = peak_in_flight_.load();
  while (now > peak && !peak_in_flight_.compare_exchange_weak(peak, now)) {
  }
  struct Leave {
    std::atomic<std::size_t>& counter;
    ~Leave() { --counter; }
  } leave{in_flight_};

  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  const auto messages = json::parse(body).at("messages").get<std::vector<Message>>();
  const std::string hash = request_hash(messages);

  Responder fallback;
  {
    std::lock_guard lock(mu_);
    if (auto it = scripts_.find(hash); it != scripts_.end()) {
      Script& s = it->second;
      const std::size_t call = s.calls++;
      if (s.fail_times < 0 || call < static_cast<std::size_t>(s.fail_times)) {
        return {503, "scripted failure"};
      }
      return {200, completion_body(s.content)};
    }
    ++unscripted_calls_[hash];
    fallback = fallback_;
  }
  if (fallback) {
    if (auto content = fallback(messages)) return {200, completion_body(*content)};
  }
  return {404, "no scripted response for request " + hash};
}

void write_mock_jsonl(const std::filesystem::path& path, const std::vector<MockEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write mock transcript " + path.string());
  for (const auto& e : entries) {
    out << json{{"request_hash", e.request_hash}, {"response_content", e.response_content}, {"fail_times", e.fail_times}}
               .dump()
        << '\n';
  }
}

}  // namespace alignkit
