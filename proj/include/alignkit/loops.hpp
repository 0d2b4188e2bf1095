#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignkit/datamodel.hpp"
#include "alignkit/gateway.hpp"
#include "alignkit/patterns.hpp"

namespace alignkit {

enum class AnswerPhase { generate, verify, reflect, rewrite, accepted, rejected };

std::string to_string(AnswerPhase p);

/// Legal edges: generate->verify, verify->accepted|reflect|rejected,
/// reflect->rewrite, rewrite->verify.
bool is_legal_transition(AnswerPhase from, AnswerPhase to);

struct LoopVerdict {
  std::uint32_t iteration = 0;
  bool pass = false;
  std::string reason;
};

struct AnswerSnapshot {
  std::uint32_t iteration = 0;
  AnswerPhase phase = AnswerPhase::generate;
  std::string candidate;
  std::size_t verdict_count = 0;
};

struct AnswerLoopState {
  std::string sample_id;
  std::uint32_t iteration = 0;
  AnswerPhase phase = AnswerPhase::generate;
  std::string candidate;
  std::vector<LoopVerdict> verdicts;
  std::vector<std::string> reflections;
  /// One snapshot per phase entered, in order.
  std::vector<AnswerSnapshot> history;
};

struct VerifierVerdict {
  bool pass = false;
  std::string reason;
};

/// Checks a candidate's final answer against the sample's reference answer.
/// Must be deterministic.
using AnswerVerifier = std::function<VerifierVerdict(const Sample&, const std::string& final_answer)>;

/// Rule-based reference check with the given extraction patterns.
AnswerVerifier reference_answer_verifier(std::vector<ExtractionPattern> patterns, double tol = 1e-4);

struct ModelOutput {
  std::string think;
  std::string answer;
};

/// Splits "<think>...</think>answer". Without tags the whole text is the answer.
ModelOutput split_think(const std::string& content);

enum class LoopStatus { accepted, rejected, aborted };

std::string to_string(LoopStatus s);

struct AnswerLoopOutcome {
  LoopStatus status = LoopStatus::rejected;
  /// Corrected sample when accepted.
  std::optional<Sample> sample;
  AnswerLoopState trace;
  /// Gateway failure message when aborted; trace.phase is where it happened.
  std::string error;
};

/// The exact messages each answer-loop call sends, for scripting mocks.
std::vector<Message> generation_messages(const Sample& sample);
std::vector<Message> reflection_messages(const ModelGateway& gateway, const Sample& sample,
                                         const std::string& candidate, const std::string& feedback);
std::vector<Message> rewrite_messages(const ModelGateway& gateway, const Sample& sample, const std::string& candidate,
                                      const std::string& critique);

/// Generate-verify-reflect-rewrite. At most max_iters verify phases; the
/// accepted sample records the accepting iteration in its provenance.
AnswerLoopOutcome run_answer_loop(ModelGateway& gateway, const Sample& sample, const AnswerVerifier& verifier,
                                  std::uint32_t max_iters);

/// Runs answer loops for many samples, at most max_in_flight at a time.
std::vector<AnswerLoopOutcome> run_answer_loops(ModelGateway& gateway, const std::vector<Sample>& samples,
                                                const AnswerVerifier& verifier, std::uint32_t max_iters);

/// Rejected or aborted samples are kept, in the quarantine bucket.
Sample quarantine(const Sample& sample);

struct BatchYield {
  double yield_rate = 0.0;
  std::vector<std::string> accepted_ids;
  std::vector<std::string> rejected_ids;
};

/// accepted / total, with 0/0 defined as 0. Aborted runs count as rejected.
BatchYield batch_yield(const std::vector<AnswerLoopOutcome>& results);

nlohmann::json snapshot_to_json(const std::string& sample_id, const AnswerSnapshot& s);
/// One JSON line per phase transition of every run.
void export_answer_traces(const std::filesystem::path& path, const std::vector<AnswerLoopOutcome>& outcomes);

struct ValidationItem {
  std::string id;
  std::string input;
  std::string gold;
};

struct PromptScore {
  bool pass = false;
  std::string failure;
};

/// Grades one model output against its gold answer.
using PromptScorer = std::function<PromptScore(const std::string& output, const std::string& gold)>;

struct FailureNote {
  std::string sample_id;
  std::string summary;
};

struct BestPrompt {
  std::string prompt;
  double accuracy = 0.0;
  std::uint32_t round = 0;
};

struct PromptLoopState {
  std::uint32_t round = 0;
  std::string current_prompt;
  std::vector<double> accuracy_trace;
  BestPrompt best;
  /// Failures of the best prompt so far.
  std::vector<FailureNote> error_digest;
  /// Set when a gateway failure cut the loop short.
  std::optional<std::string> error;
};

class EmptyValidationSet : public std::invalid_argument {
 public:
  EmptyValidationSet() : std::invalid_argument("prompt loop needs a non-empty validation set") {}
};

std::vector<Message> prompt_eval_messages(const std::string& prompt, const ValidationItem& item);
std::vector<Message> refinement_messages(const ModelGateway& gateway, const std::string& best_prompt,
                                         const std::vector<FailureNote>& digest);

inline constexpr std::uint32_t kDefaultPromptRounds = 3;

/// Scores the initial prompt as round 0, then refines the best prompt so far
/// for up to max_rounds rounds. Ties keep the earliest prompt. Stops early
/// once a prompt passes every validation item.
PromptLoopState run_prompt_loop(ModelGateway& gateway, const std::string& initial_prompt,
                                const std::vector<ValidationItem>& validation, const PromptScorer& scorer,
                                std::uint32_t max_rounds = kDefaultPromptRounds);

nlohmann::json prompt_state_to_json(const PromptLoopState& s);

}  // namespace alignkit
