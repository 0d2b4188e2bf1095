#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "alignkit/datamodel.hpp"
#include "alignkit/gateway.hpp"
#include "alignkit/synthesis.hpp"

namespace alignkit {

enum class AtomicTaskKind { boundary_id, knowledge_selection, summarization, self_check };

std::string to_string(AtomicTaskKind k);
AtomicTaskKind parse_atomic_task_kind(std::string_view s);
const std::vector<AtomicTaskKind>& all_atomic_task_kinds();

class MissingIngredient : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Answer stored on refusal records built from unanswerable questions.
std::string refusal_answer(const std::string& reason);

/// Builds one of the four hallucination-mitigation training records.
///
/// boundary_id needs a QA pair whose answer does not appear in the document
/// and produces a refusal record. knowledge_selection mixes the gold document
/// with at least one distractor in seeded order. summarization needs a
/// reference summary as the QA answer. self_check needs a draft claim to
/// verify against the document.
Sample build_atomic_task(AtomicTaskKind kind, const std::string& doc, const std::optional<KnowledgeQA>& qa,
                         const std::vector<std::string>& distractor_docs, const SampleMeta& meta,
                         std::uint64_t dataset_seed);

/// The constant verdict-to-bucket table.
Bucket bucket_for(ValidatorVerdict v);

struct RoutingDecision {
  std::string sample_id;
  ValidatorVerdict verdict = ValidatorVerdict::error;
  Bucket bucket = Bucket::quarantine;
  /// Parse or gateway failure behind an error verdict.
  std::string cause;
};

struct RoutedSample {
  RoutingDecision decision;
  Sample sample;
};

/// Parses the last non-empty line as CONSISTENT or INCONSISTENT.
std::optional<ValidatorVerdict> parse_consistency_verdict(const std::string& content);

std::vector<Message> consistency_messages(const ModelGateway& gateway, const KnowledgeQA& qa,
                                          const std::string& source_doc);

/// One judge_direct validation of the answer against its source document.
/// Gateway failures become an error verdict and land in quarantine.
RoutedSample route_rag_sample(ModelGateway& gateway, const KnowledgeQA& qa, const std::string& source_doc,
                              const SampleMeta& meta);

/// Line of the intermediate ingest format.
struct IngestRecord {
  std::string doc;
  std::string question;
  std::string answer;
  bool answerable = true;
};

/// JSONL of {doc, question, answer, answerable}.
std::vector<IngestRecord> read_ingest_jsonl(const std::filesystem::path& path);

struct RoutingConfig {
  BusinessArea business_area = BusinessArea::ISC;
  std::string source = "ingest";
  /// Share of real scenario queries blended into the generation corpus. No
  /// default is implied; zero disables blending.
  double real_query_ratio = 0.0;
};

/// Routes every record concurrently under the gateway cap. Output order
/// follows input order. Ids are "<prefix>-<index>".
std::vector<RoutedSample> route_batch(ModelGateway& gateway, const std::vector<IngestRecord>& records,
                                      const std::string& id_prefix, const RoutingConfig& cfg);

/// Appends real queries so they make up `ratio` of the result, drawing them
/// in seeded order. Requires 0 <= ratio < 1.
std::vector<Sample> blend_real_queries(std::vector<Sample> generated, const std::vector<Sample>& real, double ratio,
                                       std::uint64_t seed);

}  // namespace alignkit
