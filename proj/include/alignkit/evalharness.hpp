#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "alignkit/dataset_store.hpp"
#include "alignkit/gateway.hpp"
#include "alignkit/patterns.hpp"
#include "alignkit/rewards.hpp"

namespace alignkit {

enum class EvalMetric { accuracy, faithfulness };

std::string to_string(EvalMetric m);
EvalMetric parse_eval_metric(std::string_view s);

/// accuracy for multiple_choice and extraction, faithfulness otherwise.
EvalMetric metric_for(Format f);

struct EvalItem {
  Sample sample;
  EvalMetric metric = EvalMetric::accuracy;
  double weight = 1.0;
};

class InvalidEvalItem : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Checks the metric against the sample format and that weight is positive.
void validate_eval_item(const EvalItem& item);

struct ItemScore {
  /// Empty when the item is unscored.
  std::optional<double> score;
  MatchKind match_kind = MatchKind::none;
  /// Hash of the judge request, empty when no judge was called.
  std::string transcript_hash;
  std::string unscored_reason;
  /// Full rubric on the faithfulness path.
  std::optional<std::map<std::string, double>> rubric;
};

/// Accuracy items score 1 or 0 through rule-based verification with judge
/// escalation. Faithfulness items score the factuality rubric dimension
/// against the item context. Empty responses and gateway failures leave the
/// item unscored.
ItemScore score_item(ModelGateway& gateway, const EvalItem& item, const std::string& response,
                     const std::vector<ExtractionPattern>& patterns, double tol);

struct AreaScore {
  BusinessArea area = BusinessArea::IDK;
  double score = 0.0;
  double weight = 1.0;
};

/// Weighted mean per area times 100. Areas without items are omitted.
std::map<BusinessArea, double> aggregate_dimension(const std::vector<AreaScore>& scores);

inline constexpr const char* kInsuranceGroup = "insurance";
inline constexpr const char* kGeneralGroup = "general";

struct ReportRow {
  std::string model_id;
  std::map<BusinessArea, double> dimension_scores;
  std::map<std::string, double> group_avgs;
  /// Mean of the insurance and general averages when both exist.
  std::optional<double> two_avg;
  std::size_t scored = 0;
  std::size_t unscored = 0;
  std::size_t missing = 0;
  std::vector<std::string> notes;
};

/// Unweighted mean of each group's benchmark scores. Throws EmptyGroup for a
/// group with no scores.
ReportRow aggregate_report(const std::map<std::string, std::vector<double>>& groups, const std::string& model_id);

struct LedgerEntry {
  std::string id;
  BusinessArea area = BusinessArea::IDK;
  EvalMetric metric = EvalMetric::accuracy;
  double weight = 1.0;
  std::optional<double> score;
  MatchKind match_kind = MatchKind::none;
  std::string transcript_hash;
  std::string unscored_reason;
};

nlohmann::json ledger_entry_to_json(const LedgerEntry& e);
LedgerEntry ledger_entry_from_json(const nlohmann::json& j);
void write_ledger(const std::filesystem::path& path, const std::vector<LedgerEntry>& ledger);
std::vector<LedgerEntry> read_ledger(const std::filesystem::path& path);

struct EvalConfig {
  std::string model_id = "candidate";
  std::vector<ExtractionPattern> patterns = builtin_patterns();
  double numeric_tol = 1e-4;
  /// Per-area weights for the overall insurance score. Empty means weight by
  /// scored item count.
  std::map<BusinessArea, double> dimension_weights;
  /// Externally measured general benchmark scores, by benchmark name.
  std::map<std::string, double> general_scores;
};

struct EvalResult {
  ReportRow report;
  std::vector<LedgerEntry> ledger;
};

/// Responses from JSONL of {id, response}.
std::map<std::string, std::string> read_responses(const std::filesystem::path& path);

/// Scores every item that has a response, concurrently under the gateway
/// cap. Items without a response are recorded as missing in the ledger.
EvalResult run_eval(ModelGateway& gateway, const std::vector<Sample>& items,
                    const std::map<std::string, std::string>& responses, const EvalConfig& cfg);

EvalResult run_eval(ModelGateway& gateway, const DatasetManifest& dataset, const std::filesystem::path& responses,
                    const EvalConfig& cfg);

/// Rebuilds the report from a ledger alone.
ReportRow report_from_ledger(const std::vector<LedgerEntry>& ledger, const EvalConfig& cfg);

nlohmann::json report_to_json(const ReportRow& row);
/// Aligned text table with one column per area followed by group averages.
std::string report_to_table(const ReportRow& row);

}  // namespace alignkit
