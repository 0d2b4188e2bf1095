#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace alignkit {

enum class BusinessArea { IDK, IMI, IUC, ILR, ITU, IPE, ISC, IMG, ISD };
enum class Format { multiple_choice, extraction, open_ended, dialogue };
enum class Difficulty { simple, complex };
enum class Role { system, user, assistant };
enum class Bucket { generation, refusal, quarantine, unassigned };
enum class Pipeline {
  knowledge_injection,
  cognitive_alignment,
  actuarial,
  underwriting_claims,
  atomic_rag,
  rag_adaptation,
  self_distill,
  external
};
enum class ValidatorVerdict { consistent, inconsistent, error };

inline constexpr std::string_view kRefusalMarker = "[REFUSE]";

/// All nine business areas in canonical column order.
const std::vector<BusinessArea>& all_business_areas();

std::string to_string(BusinessArea v);
std::string to_string(Format v);
std::string to_string(Difficulty v);
std::string to_string(Role v);
std::string to_string(Bucket v);
std::string to_string(Pipeline v);
std::string to_string(ValidatorVerdict v);

/// Thrown when a closed-vocabulary field carries an unknown value.
class UnknownEnumValue : public std::invalid_argument {
 public:
  UnknownEnumValue(std::string_view field, std::string_view value);
};

BusinessArea parse_business_area(std::string_view s);
Format parse_format(std::string_view s);
Difficulty parse_difficulty(std::string_view s);
Role parse_role(std::string_view s);
Bucket parse_bucket(std::string_view s);
Pipeline parse_pipeline(std::string_view s);
ValidatorVerdict parse_validator_verdict(std::string_view s);

struct Message {
  Role role = Role::user;
  std::string content;

  bool operator==(const Message&) const = default;
};

struct Provenance {
  std::string source;
  Pipeline pipeline = Pipeline::external;
  std::uint32_t iteration = 0;
  std::optional<ValidatorVerdict> validator_verdict;

  bool operator==(const Provenance&) const = default;
};

struct Sample {
  std::string id;
  std::string task_type;
  BusinessArea business_area = BusinessArea::IDK;
  Format format = Format::open_ended;
  Difficulty difficulty = Difficulty::simple;
  /// Free-form fourth taxonomy axis; the vocabulary is not fixed.
  std::string cognition;
  std::vector<Message> messages;
  std::optional<std::string> think;
  std::string answer;
  std::optional<std::string> context;
  Bucket bucket = Bucket::unassigned;
  Provenance provenance;

  bool operator==(const Sample&) const = default;

  /// True when the conversation ends with an assistant turn.
  bool completed() const { return !messages.empty() && messages.back().role == Role::assistant; }
};

bool has_refusal_marker(std::string_view answer);

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

/// Reports every violated record invariant, in a fixed order.
ValidationResult validate_sample(const Sample& s);

void to_json(nlohmann::json& j, const Message& m);
void from_json(const nlohmann::json& j, Message& m);
void to_json(nlohmann::json& j, const Provenance& p);
void from_json(const nlohmann::json& j, Provenance& p);
void to_json(nlohmann::json& j, const Sample& s);
void from_json(const nlohmann::json& j, Sample& s);

/// One compact JSON line without the trailing newline.
std::string to_jsonl_line(const Sample& s);
Sample sample_from_jsonl_line(std::string_view line);

}  // namespace alignkit
