#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <unistd.h>

#include "alignkit/datamodel.hpp"
#include "alignkit/gateway.hpp"
#include "alignkit/loops.hpp"
#include "alignkit/mock_transport.hpp"

namespace alignkit::testing {

namespace fs = std::filesystem;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("alignkit-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

/// Endpoint config with no backoff sleep.
inline EndpointConfig fast_config(std::uint32_t max_retries = 3, std::uint32_t max_in_flight = 8) {
  EndpointConfig cfg;
  cfg.max_retries = max_retries;
  cfg.max_in_flight = max_in_flight;
  cfg.backoff_base_ms = 0;
  return cfg;
}

struct MockGateway {
  std::shared_ptr<MockTransport> transport = std::make_shared<MockTransport>();
  ModelGateway gateway;

  explicit MockGateway(EndpointConfig cfg = fast_config()) : gateway(std::move(cfg), transport) {}
};

inline Sample mcq_sample(const std::string& id, BusinessArea area, const std::string& question,
                         const std::string& answer) {
  Sample s;
  s.id = id;
  s.task_type = "mcq";
  s.business_area = area;
  s.format = Format::multiple_choice;
  s.messages = {{Role::user, question}};
  s.answer = answer;
  s.provenance.source = "fixture";
  return s;
}

inline Sample open_sample(const std::string& id, BusinessArea area, const std::string& question,
                          const std::string& answer, const std::string& context) {
  Sample s = mcq_sample(id, area, question, answer);
  s.task_type = "open";
  s.format = Format::open_ended;
  s.context = context;
  return s;
}

/// Scripts wrong -> reflect -> rewrite -> correct for one sample.
inline void script_fail_then_pass(MockTransport& t, const ModelGateway& gw, const Sample& s, const AnswerVerifier& verify,
                                  const std::string& wrong) {
  const std::string first = "<think>first try</think>" + wrong;
  t.add(generation_messages(s), first);
  const std::string feedback = verify(s, wrong).reason;
  const std::string critique = "The reference clause was misread.";
  t.add(reflection_messages(gw, s, first, feedback), critique);
  t.add(rewrite_messages(gw, s, first, critique), "<think>re-read the clause</think>" + s.answer);
}

/// Validation set of `n` items and a responder that makes prompt k (the
/// initial prompt is "prompt-0") score accuracies[k]; refinement requests
/// return "prompt-1", "prompt-2", ... in call order.
inline std::vector<ValidationItem> script_prompt_loop(MockTransport& t, const std::vector<double>& accuracies,
                                                      std::size_t n = 100) {
  std::vector<ValidationItem> items;
  for (std::size_t i = 0; i < n; ++i) items.push_back({"v" + std::to_string(i), "case " + std::to_string(i), "ACCEPT"});
  auto refinements = std::make_shared<std::atomic<int>>(0);
  t.set_fallback([accuracies, n, refinements](const std::vector<Message>& msgs) -> std::optional<std::string> {
    if (msgs.size() == 2 && msgs[0].role == Role::system && msgs[0].content.rfind("prompt-", 0) == 0) {
      const auto k = static_cast<std::size_t>(std::stoul(msgs[0].content.substr(7)));
      const auto i = static_cast<std::size_t>(std::stoul(msgs[1].content.substr(5)));
      const auto passing = static_cast<std::size_t>(accuracies.at(k) * static_cast<double>(n) + 0.5);
      return i < passing ? "ACCEPT" : "DECLINE";
    }
    return "prompt-" + std::to_string(refinements->fetch_add(1) + 1);
  });
  return items;
}

/// Exact-match scorer for scripted prompt loops.
inline PromptScore exact_scorer(const std::string& output, const std::string& gold) {
  if (output == gold) return {true, ""};
  return {false, "expected " + gold + ", got " + output};
}

}  // namespace alignkit::testing
