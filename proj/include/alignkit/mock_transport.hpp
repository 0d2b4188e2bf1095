#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "alignkit/gateway.hpp"

namespace alignkit {

/// One scripted reply. `fail_times` leading calls answer HTTP 503; a negative
/// value fails forever.
struct MockEntry {
  std::string request_hash;
  std::string response_content;
  int fail_times = 0;
};

/// Scripted transport keyed by request_hash() of the request messages.
///
/// Unscripted requests go to the fallback responder when one is set and
/// otherwise answer HTTP 404. Call counts and the peak number of concurrent
/// calls are recorded for assertions.
class MockTransport : public Transport {
 public:
  using Responder = std::function<std::optional<std::string>(const std::vector<Message>&)>;

  MockTransport() = default;
  explicit MockTransport(const std::vector<MockEntry>& entries);

  /// Adds every entry of a JSONL transcript fixture.
  void load_jsonl(const std::filesystem::path& path);

  void add(const MockEntry& entry);
  void add(const std::vector<Message>& messages, std::string content, int fail_times = 0);
  void set_fallback(Responder responder);
  /// Sleep inside every call, to make overlap observable in tests.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

  TransportReply post(const EndpointConfig& cfg, const std::string& body) override;

  std::size_t total_calls() const { return total_calls_.load(); }
  std::size_t calls_for(const std::string& hash) const;
  std::size_t peak_in_flight() const { return peak_in_flight_.load(); }

  /// Wraps plain content in a chat-completions reply body.
  static std::string completion_body(const std::string& content);

 private:
  struct Script {
    std::string content;
    int fail_times = 0;
    std::size_t calls = 0;
  };

  mutable std::mutex mu_;
  std::map<std::string, Script> scripts_;
  std::map<std::string, std::size_t> unscripted_calls_;
  Responder fallback_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> total_calls_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> peak_in_flight_{0};
};

void write_mock_jsonl(const std::filesystem::path& path, const std::vector<MockEntry>& entries);

}  // namespace alignkit
