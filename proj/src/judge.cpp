#include "alignkit/judge.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "alignkit/text.hpp"

namespace alignkit {

std::string to_string(Equivalence e) {
  switch (e) {
    case Equivalence::equivalent:
      return "equivalent";
    case Equivalence::different:
      return "different";
    case Equivalence::unjudgeable:
      return "unjudgeable";
  }
  return "?";
}

std::optional<Equivalence> parse_equivalence_verdict(const std::string& content) {
  const auto lines = text::split_lines(content);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    std::string line = text::to_upper_ascii(text::trim(*it));
    if (line.empty()) continue;
    while (!line.empty() && (line.back() == '.' || line.back() == '*')) line.pop_back();
    while (!line.empty() && line.front() == '*') line.erase(line.begin());
    if (line == "EQUIVALENT") return Equivalence::equivalent;
    if (line == "DIFFERENT") return Equivalence::different;
    return std::nullopt;
  }
  return std::nullopt;
}

std::vector<Message> equivalence_messages(const ModelGateway& gateway, const std::string& candidate,
                                          const std::string& gold) {
  const std::string prompt =
      render_template(gateway.templates().equivalence, {{"candidate", candidate}, {"gold", gold}});
  return gateway.make_request(ChatMode::judge_direct, {{Role::user, prompt}}).messages;
}

EquivalenceResult judge_equivalence(ModelGateway& gateway, const std::string& candidate, const std::string& gold) {
  if (gold.empty()) throw std::invalid_argument("judge_equivalence: gold is empty");
  EquivalenceResult result;
  if (text::normalize(candidate) == text::normalize(gold)) {
    result.verdict = Equivalence::equivalent;
    return result;
  }
  ChatRequest req = gateway.make_request(ChatMode::judge_direct, {});
  req.messages = equivalence_messages(gateway, candidate, gold);
  result.request_hash = request_hash(req.messages);
  try {
    const ChatResponse resp = gateway.complete(req);
    if (auto v = parse_equivalence_verdict(resp.content)) {
      result.verdict = *v;
    } else {
      result.verdict = Equivalence::unjudgeable;
      result.cause = "unparseable verdict: " + resp.content;
    }
  } catch (const GatewayError& e) {
    result.verdict = Equivalence::unjudgeable;
    result.cause = e.what();
    result.gateway_failed = true;
  }
  return result;
}

RubricSpec RubricSpec::standard() {
  return RubricSpec{{{"factuality", "Every claim is supported by the context or well-established domain fact.", 0, 1},
                     {"professionalism", "Correct use of insurance terminology and business rules.", 0, 1},
                     {"expression", "Concise and clear, without redundant content.", 0, 1}}};
}

std::map<std::string, double> parse_rubric_scores(const std::string& content, const RubricSpec& rubric) {
  static const std::regex kPair(R"(([A-Za-z_][A-Za-z0-9_]*)\s*[=:]\s*(-?[0-9]+(?:\.[0-9]+)?))");
  std::map<std::string, double> raw;
  for (auto it = std::sregex_iterator(content.begin(), content.end(), kPair); it != std::sregex_iterator(); ++it) {
    raw[text::to_lower_ascii((*it)[1].str())] = std::stod((*it)[2].str());
  }
  std::map<std::string, double> scores;
  std::vector<std::string> missing;
  for (const auto& dim : rubric.dimensions) {
    const auto it = raw.find(text::to_lower_ascii(dim.name));
    if (it == raw.end()) {
      missing.push_back(dim.name);
      continue;
    }
    const double span = dim.max_score - dim.min_score;
    const double scaled = span > 0 ? (it->second - dim.min_score) / span : it->second;
    scores[dim.name] = std::clamp(scaled, 0.0, 1.0);
  }
  if (!missing.empty()) {
    std::string names;
    for (const auto& m : missing) names += (names.empty() ? "" : ", ") + m;
    throw JudgeParseFailure("judge reply is missing scores for: " + names, content);
  }
  return scores;
}

std::vector<Message> rubric_messages(const ModelGateway& gateway, const std::vector<Message>& transcript,
                                     const std::optional<std::string>& context, const RubricSpec& rubric) {
  std::string dims;
  for (const auto& d : rubric.dimensions) {
    dims += "- " + d.name + " (" + std::to_string(d.min_score) + " to " + std::to_string(d.max_score) +
            "): " + d.description + "\n";
  }
  std::string convo;
  for (const auto& m : transcript) convo += to_string(m.role) + ": " + m.content + "\n";
  const std::string prompt = render_template(
      gateway.templates().rubric,
      {{"dimensions", dims}, {"context", context.value_or("(none)")}, {"transcript", convo}});
  return gateway.make_request(ChatMode::judge_cot, {{Role::user, prompt}}).messages;
}

RubricResult judge_rubric(ModelGateway& gateway, const std::vector<Message>& transcript,
                          const std::optional<std::string>& context, const RubricSpec& rubric) {
  if (rubric.dimensions.empty()) throw std::invalid_argument("rubric has no dimensions");
  std::set<std::string> seen;
  for (const auto& d : rubric.dimensions) {
    if (d.name.empty() || d.description.empty() || !(d.max_score > d.min_score) || !seen.insert(d.name).second) {
      throw std::invalid_argument("rubric dimension '" + d.name + "' is malformed");
    }
  }
  ChatRequest req = gateway.make_request(ChatMode::judge_cot, {});
  req.messages = rubric_messages(gateway, transcript, context, rubric);
  RubricResult result;
  result.request_hash = request_hash(req.messages);
  result.raw = gateway.complete(req).content;
  result.scores = parse_rubric_scores(result.raw, rubric);
  return result;
}

}  // namespace alignkit
