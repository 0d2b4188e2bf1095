#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "alignkit/datamodel.hpp"

namespace alignkit {

struct KnowledgeQA {
  std::string question;
  std::string answer;
  std::string source;
  /// Draft response to be checked, used by self-check tasks.
  std::string claim;
};

enum class Perturbation { numeric_tamper, semantic_swap, scope_shift };

struct Distractor {
  std::string text;
  Perturbation perturbation = Perturbation::semantic_swap;
};

struct DistractorSpec {
  std::string correct_option;
  std::vector<Distractor> distractors;
  std::string clause_citation;
};

enum class SopSchema { alignment3, underwriting4 };

struct SopPhase {
  std::string name;
  std::string content;
};

struct SopTrace {
  SopSchema schema = SopSchema::alignment3;
  std::vector<SopPhase> phases;
};

/// Identity and taxonomy for a record being synthesized.
struct SampleMeta {
  std::string id;
  std::string task_type;
  BusinessArea business_area = BusinessArea::IDK;
  Difficulty difficulty = Difficulty::simple;
  std::string cognition;
  std::string source;
};

class SynthesisError : public std::runtime_error {
 public:
  enum class Code { invalid_input, think_tag_collision, schema_mismatch, missing_phase };

  SynthesisError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

inline constexpr std::string_view kEmptyThink = "<think></think>";

/// Phase identifiers for a schema, in required order.
const std::vector<std::string>& schema_phases(SopSchema schema);

/// Display header for a phase id, e.g. "risk_id" -> "Risk ID".
std::string phase_header(std::string_view phase);

/// Throws SynthesisError unless the trace matches its schema exactly.
void validate_sop_trace(const SopTrace& sop);

/// "## <Header>\n<content>" blocks joined by blank lines.
std::string serialize_sop(const SopTrace& sop);

/// Rote-knowledge record whose assistant turn is the empty think tag, a
/// newline, then the answer. The think channel stays empty.
Sample format_knowledge_injection(const KnowledgeQA& qa, const SampleMeta& meta);

void validate_distractor_spec(const DistractorSpec& spec);

/// Multiple-choice record with seeded option order. Think holds the three
/// alignment phases followed by the clause citation; the answer is the
/// letter of the correct option.
Sample build_alignment_sample(const std::string& stem, const DistractorSpec& spec, const SopTrace& sop,
                              const SampleMeta& meta, std::uint64_t dataset_seed);

struct CotCheck {
  bool linear = false;
  std::vector<std::string> violations;
};

/// Phrases that mark hesitation or branching in a derivation.
struct BacktrackLexicon {
  std::vector<std::string> phrases;

  static BacktrackLexicon builtin();
  /// One phrase per line; blank lines and lines starting with '#' are skipped.
  static BacktrackLexicon load(const std::filesystem::path& path);
};

/// A derivation is linear when it is a sequence of numbered steps 1..n with
/// non-empty bodies and no lexicon phrase anywhere in it.
CotCheck check_standardized_cot(std::string_view cot, const BacktrackLexicon& lexicon = BacktrackLexicon::builtin());

/// Underwriting or claims record with the four SOP phases in the think
/// channel.
Sample build_sop_cot_sample(const std::string& case_text, const SopTrace& sop, const std::string& verdict,
                            const SampleMeta& meta);

}  // namespace alignkit
