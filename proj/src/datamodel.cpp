#include "alignkit/datamodel.hpp"

#include <array>
#include <utility>

namespace alignkit {

namespace {

template <typename E, std::size_t N>
using NameTable = std::array<std::pair<E, std::string_view>, N>;

constexpr NameTable<BusinessArea, 9> kAreas{{{BusinessArea::IDK, "IDK"},
                                             {BusinessArea::IMI, "IMI"},
                                             {BusinessArea::IUC, "IUC"},
                                             {BusinessArea::ILR, "ILR"},
                                             {BusinessArea::ITU, "ITU"},
                                             {BusinessArea::IPE, "IPE"},
                                             {BusinessArea::ISC, "ISC"},
                                             {BusinessArea::IMG, "IMG"},
                                             {BusinessArea::ISD, "ISD"}}};
constexpr NameTable<Format, 4> kFormats{{{Format::multiple_choice, "multiple_choice"},
                                         {Format::extraction, "extraction"},
                                         {Format::open_ended, "open_ended"},
                                         {Format::dialogue, "dialogue"}}};
constexpr NameTable<Difficulty, 2> kDifficulties{{{Difficulty::simple, "simple"}, {Difficulty::complex, "complex"}}};
constexpr NameTable<Role, 3> kRoles{{{Role::system, "system"}, {Role::user, "user"}, {Role::assistant, "assistant"}}};
constexpr NameTable<Bucket, 4> kBuckets{{{Bucket::generation, "generation"},
                                         {Bucket::refusal, "refusal"},
                                         {Bucket::quarantine, "quarantine"},
                                         {Bucket::unassigned, "unassigned"}}};
constexpr NameTable<Pipeline, 8> kPipelines{{{Pipeline::knowledge_injection, "knowledge_injection"},
                                             {Pipeline::cognitive_alignment, "cognitive_alignment"},
                                             {Pipeline::actuarial, "actuarial"},
                                             {Pipeline::underwriting_claims, "underwriting_claims"},
                                             {Pipeline::atomic_rag, "atomic_rag"},
                                             {Pipeline::rag_adaptation, "rag_adaptation"},
                                             {Pipeline::self_distill, "self_distill"},
                                             {Pipeline::external, "external"}}};
constexpr NameTable<ValidatorVerdict, 3> kVerdicts{{{ValidatorVerdict::consistent, "consistent"},
                                                    {ValidatorVerdict::inconsistent, "inconsistent"},
                                                    {ValidatorVerdict::error, "error"}}};

template <typename E, std::size_t N>
std::string name_of(const NameTable<E, N>& table, E v) {
  for (const auto& [e, name] : table) {
    if (e == v) return std::string(name);
  }
  return "?";
}

template <typename E, std::size_t N>
E parse_from(const NameTable<E, N>& table, std::string_view field, std::string_view s) {
  for (const auto& [e, name] : table) {
    if (name == s) return e;
  }
  throw UnknownEnumValue(field, s);
}

}  // namespace

UnknownEnumValue::UnknownEnumValue(std::string_view field, std::string_view value)
    : std::invalid_argument("unknown " + std::string(field) + " value '" + std::string(value) + "'") {}

const std::vector<BusinessArea>& all_business_areas() {
  static const std::vector<BusinessArea> areas = [] {
    std::vector<BusinessArea> v;
    for (const auto& [e, name] : kAreas) v.push_back(e);
    return v;
  }();
  return areas;
}

std::string to_string(BusinessArea v) { return name_of(kAreas, v); }
std::string to_string(Format v) { return name_of(kFormats, v); }
std::string to_string(Difficulty v) { return name_of(kDifficulties, v); }
std::string to_string(Role v) { return name_of(kRoles, v); }
std::string to_string(Bucket v) { return name_of(kBuckets, v); }
std::string to_string(Pipeline v) { return name_of(kPipelines, v); }
std::string to_string(ValidatorVerdict v) { return name_of(kVerdicts, v); }

BusinessArea parse_business_area(std::string_view s) { return parse_from(kAreas, "business_area", s); }
Format parse_format(std::string_view s) { return parse_from(kFormats, "format", s); }
Difficulty parse_difficulty(std::string_view s) { return parse_from(kDifficulties, "difficulty", s); }
Role parse_role(std::string_view s) { return parse_from(kRoles, "role", s); }
Bucket parse_bucket(std::string_view s) { return parse_from(kBuckets, "bucket", s); }
Pipeline parse_pipeline(std::string_view s) { return parse_from(kPipelines, "pipeline", s); }
ValidatorVerdict parse_validator_verdict(std::string_view s) { return parse_from(kVerdicts, "validator_verdict", s); }

bool has_refusal_marker(std::string_view answer) { return answer.substr(0, kRefusalMarker.size()) == kRefusalMarker; }

ValidationResult validate_sample(const Sample& s) {
  ValidationResult r;
  if (s.id.empty()) r.violations.emplace_back("empty id");
  if (s.messages.empty()) {
    r.violations.emplace_back("empty messages");
  } else {
    if (s.messages.back().role == Role::system) r.violations.emplace_back("conversation ends with a system turn");
    for (std::size_t i = 0; i < s.messages.size(); ++i) {
      if (s.messages[i].content.empty()) r.violations.push_back("empty content in message " + std::to_string(i));
    }
  }
  if (s.answer.empty()) r.violations.emplace_back("empty answer");
  if (s.bucket == Bucket::refusal && !has_refusal_marker(s.answer)) {
    r.violations.emplace_back("refusal marker missing");
  }
  return r;
}

void to_json(nlohmann::json& j, const Message& m) { j = {{"role", to_string(m.role)}, {"content", m.content}}; }

void from_json(const nlohmann::json& j, Message& m) {
  m.role = parse_role(j.at("role").get<std::string>());
  m.content = j.at("content").get<std::string>();
}

void to_json(nlohmann::json& j, const Provenance& p) {
  j = {{"source", p.source}, {"pipeline", to_string(p.pipeline)}, {"iteration", p.iteration}};
  j["validator_verdict"] = p.validator_verdict ? nlohmann::json(to_string(*p.validator_verdict)) : nlohmann::json();
}

void from_json(const nlohmann::json& j, Provenance& p) {
  p.source = j.at("source").get<std::string>();
  p.pipeline = parse_pipeline(j.at("pipeline").get<std::string>());
  p.iteration = j.value("iteration", 0U);
  p.validator_verdict.reset();
  if (j.contains("validator_verdict") && !j["validator_verdict"].is_null()) {
    p.validator_verdict = parse_validator_verdict(j["validator_verdict"].get<std::string>());
  }
}

void to_json(nlohmann::json& j, const Sample& s) {
  j = nlohmann::json::object();
  j["id"] = s.id;
  j["task_type"] = s.task_type;
  j["business_area"] = to_string(s.business_area);
  j["format"] = to_string(s.format);
  j["difficulty"] = to_string(s.difficulty);
  j["cognition"] = s.cognition;
  j["messages"] = s.messages;
  j["think"] = s.think ? nlohmann::json(*s.think) : nlohmann::json();
  j["answer"] = s.answer;
  j["context"] = s.context ? nlohmann::json(*s.context) : nlohmann::json();
  j["bucket"] = to_string(s.bucket);
  j["provenance"] = s.provenance;
}

void from_json(const nlohmann::json& j, Sample& s) {
  s.id = j.at("id").get<std::string>();
  s.task_type = j.value("task_type", std::string());
  s.business_area = parse_business_area(j.at("business_area").get<std::string>());
  s.format = parse_format(j.at("format").get<std::string>());
  s.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
  s.cognition = j.value("cognition", std::string());
  s.messages = j.at("messages").get<std::vector<Message>>();
  s.think.reset();
  if (j.contains("think") && !j["think"].is_null()) s.think = j["think"].get<std::string>();
  s.answer = j.at("answer").get<std::string>();
  s.context.reset();
  if (j.contains("context") && !j["context"].is_null()) s.context = j["context"].get<std::string>();
  s.bucket = parse_bucket(j.value("bucket", std::string("unassigned")));
  s.provenance = j.at("provenance").get<Provenance>();
}

std::string to_jsonl_line(const Sample& s) { return nlohmann::json(s).dump(); }

Sample sample_from_jsonl_line(std::string_view line) { return nlohmann::json::parse(line).get<Sample>(); }

}  // namespace alignkit
