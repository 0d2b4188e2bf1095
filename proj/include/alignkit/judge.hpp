#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignkit/gateway.hpp"

namespace alignkit {

enum class Equivalence { equivalent, different, unjudgeable };

std::string to_string(Equivalence e);

struct EquivalenceResult {
  Equivalence verdict = Equivalence::unjudgeable;
  /// Why the verdict is unjudgeable; empty otherwise.
  std::string cause;
  /// Hash of the judge request, empty when no call was made.
  std::string request_hash;
  /// True when the gateway call itself failed.
  bool gateway_failed = false;
};

/// Parses the last non-empty line as EQUIVALENT or DIFFERENT.
std::optional<Equivalence> parse_equivalence_verdict(const std::string& content);

/// Identical strings after normalize() short-circuit to equivalent without a
/// remote call. Otherwise one judge_direct request decides. Gateway failures
/// and unparseable replies come back as unjudgeable.
EquivalenceResult judge_equivalence(ModelGateway& gateway, const std::string& candidate, const std::string& gold);

struct RubricDimension {
  std::string name;
  std::string description;
  double min_score = 0.0;
  double max_score = 1.0;
};

struct RubricSpec {
  std::vector<RubricDimension> dimensions;

  /// Factuality, professionalism and expression on a [0,1] scale.
  static RubricSpec standard();
};

class JudgeParseFailure : public std::runtime_error {
 public:
  JudgeParseFailure(const std::string& what, std::string raw) : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

struct RubricResult {
  std::map<std::string, double> scores;
  std::string raw;
  std::string request_hash;
};

/// Reads `name=value` pairs; the last occurrence of each dimension wins. Raw
/// values are rescaled from the dimension range and clamped to [0,1]. Throws
/// JudgeParseFailure if any dimension is missing.
std::map<std::string, double> parse_rubric_scores(const std::string& content, const RubricSpec& rubric);

/// One judge_cot call grading the final assistant turn of the transcript.
/// Gateway errors propagate.
RubricResult judge_rubric(ModelGateway& gateway, const std::vector<Message>& transcript,
                          const std::optional<std::string>& context, const RubricSpec& rubric);

/// The exact messages judge_equivalence sends, for scripting mocks.
std::vector<Message> equivalence_messages(const ModelGateway& gateway, const std::string& candidate,
                                          const std::string& gold);
std::vector<Message> rubric_messages(const ModelGateway& gateway, const std::vector<Message>& transcript,
                                     const std::optional<std::string>& context, const RubricSpec& rubric);

}  // namespace alignkit
