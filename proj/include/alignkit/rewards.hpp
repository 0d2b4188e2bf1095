#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignkit/gateway.hpp"
#include "alignkit/patterns.hpp"

namespace alignkit {

struct RewardConfig {
  double alpha = 0.9;
  double beta = 0.1;
  std::size_t l_min = 100;
  std::size_t l_max = 1000;
  double numeric_tol = 1e-4;
  std::size_t ngram_n = 8;
  std::size_t repetition_n = 3;
  /// Overlap fraction tolerated before the duplication penalty starts.
  double overlap_cap = 0.5;
  /// Minority-script share tolerated for technical terms.
  double language_allowance = 0.05;
  std::map<std::string, double> penalty_weights{
      {"hallucination", 1.0}, {"duplication", 1.0}, {"language", 1.0}, {"repetition", 1.0}};
  std::map<std::string, double> rubric_weights{{"factuality", 1.0}, {"professionalism", 1.0}, {"expression", 1.0}};
};

void validate_reward_config(const RewardConfig& cfg);
RewardConfig reward_config_from_json(const nlohmann::json& j);
nlohmann::json reward_config_to_json(const RewardConfig& cfg);

/// Length bounds anchored at the nearest-rank p10 and p90 of reference
/// lengths. Throws if the two percentiles coincide.
std::pair<std::size_t, std::size_t> anchor_length_bounds(std::vector<std::size_t> lengths);

enum class Verdict { correct, incorrect, unparsed };
enum class MatchKind { exact, pattern, numeric, semantic, none };

std::string to_string(Verdict v);
std::string to_string(MatchKind k);

struct VerifierOutcome {
  Verdict verdict = Verdict::unparsed;
  MatchKind match_kind = MatchKind::none;
  std::optional<std::string> extracted;
  /// Judge request hash when the outcome came from escalation.
  std::string judge_request_hash;
  /// Gateway failure behind an escalation, empty otherwise.
  std::string judge_failure;
};

/// Exact normalized match, then pattern extraction, then numeric comparison
/// within relative tolerance. Unparsed when nothing applies.
VerifierOutcome verify_rule_based(const std::string& answer, const std::string& gold,
                                  const std::vector<ExtractionPattern>& patterns, double tol);

/// Rule-based first; only an unparsed outcome is sent to the equivalence
/// judge. An unjudgeable reply counts as incorrect.
VerifierOutcome verify_with_escalation(ModelGateway& gateway, const std::string& answer, const std::string& gold,
                                       const std::vector<ExtractionPattern>& patterns, double tol);

/// clip((l_max - length) / (l_max - l_min), 0, 1).
double length_reward(std::size_t length, const RewardConfig& cfg);

/// Number of tokens under text::tokenize.
std::size_t token_length(const std::string& text);

/// Share of the response's n-grams (with multiplicity) found in the context's
/// n-gram set. Zero when the response has fewer than n tokens.
double ngram_overlap(const std::string& response, const std::string& context, std::size_t n);

struct ScriptCounts {
  std::size_t cjk = 0;
  std::size_t latin = 0;
};

ScriptCounts count_scripts(const std::string& text);

/// max(0, minority_share - allowance) * weight over CJK and Latin letters.
double language_consistency(const std::string& text, double allowance = 0.05, double weight = 1.0);

/// 1 - distinct/total over the text's own n-grams; zero below n+1 tokens.
double repetition_penalty(const std::string& text, std::size_t n);

/// Hallucination score in [0,1], higher meaning more unsupported content.
class HallucinationScorer {
 public:
  virtual ~HallucinationScorer() = default;
  virtual double score(const std::string& response, const std::string& context) const = 0;
};

/// Sentence-level token containment: a sentence is supported when at least
/// `support_threshold` of its tokens occur in the context. The score is the
/// share of unsupported sentences.
class LexicalEntailmentScorer : public HallucinationScorer {
 public:
  explicit LexicalEntailmentScorer(double support_threshold = 0.8) : threshold_(support_threshold) {}
  double score(const std::string& response, const std::string& context) const override;

 private:
  double threshold_;
};

/// Raw (unweighted) penalty values keyed by hallucination, duplication,
/// language and repetition.
std::map<std::string, double> compute_penalties(const std::string& response, const std::string& context,
                                                const RewardConfig& cfg, const HallucinationScorer* scorer);

struct RewardSignal {
  int r_acc = 0;
  double r_len = 0.0;
  std::map<std::string, double> penalties;
  std::optional<std::map<std::string, double>> rubric;
  double composite = 0.0;
};

nlohmann::json reward_signal_to_json(const RewardSignal& r);

class PathAmbiguity : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// RLVR: r_acc * (alpha + beta * r_len) minus weighted penalties, floored at
/// zero, and exactly zero when r_acc is zero. RLAIF: weighted rubric mean
/// minus weighted penalties, floored at zero. Exactly one of outcome and
/// rubric must be given.
RewardSignal composite_reward(const std::optional<VerifierOutcome>& outcome,
                              const std::optional<std::map<std::string, double>>& rubric, std::size_t length,
                              const std::map<std::string, double>& penalties, const RewardConfig& cfg);

class EmptyGroup : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// (r - mean) / population std, all zeros when std < 1e-12.
std::vector<double> grpo_advantages(const std::vector<double>& rewards);

}  // namespace alignkit
