#include "alignkit/patterns.hpp"

#include <fstream>

#include <json.hpp>

#include "alignkit/text.hpp"

namespace alignkit {

ExtractionPattern::ExtractionPattern(std::string name, const std::string& regex, std::vector<PatternCase> cases)
    : name_(std::move(name)), source_(regex) {
  if (name_.empty()) throw InvalidPattern("pattern without a name");
  try {
    regex_ = std::regex(regex, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw InvalidPattern("pattern '" + name_ + "' does not compile: " + e.what());
  }
  if (regex_.mark_count() < 1) throw InvalidPattern("pattern '" + name_ + "' has no capture group");
  for (const auto& c : cases) {
    const auto got = extract(c.input);
    if (got != c.expected) {
      throw InvalidPattern("pattern '" + name_ + "' fails its test on '" + c.input + "': got '" +
                           got.value_or("<none>") + "', expected '" + c.expected.value_or("<none>") + "'");
    }
  }
}

std::optional<std::string> ExtractionPattern::extract(const std::string& text) const {
  std::optional<std::string> last;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), regex_); it != std::sregex_iterator(); ++it) {
    if ((*it)[1].matched) last = text::trim((*it)[1].str());
  }
  return last;
}

std::vector<ExtractionPattern> builtin_patterns() {
  return {
      ExtractionPattern("bare_choice", R"(^\s*\(?([A-E])\)?\s*\.?\s*$)", {{"C", "C"}, {" (b) ", "b"}, {"Cat", std::nullopt}}),
      ExtractionPattern("choice", R"((?:answer is|answer:|correct option is|选)\s*\(?([A-E])\)?(?![A-Za-z]))",
                        {{"The answer is B", "B"}, {"Answer: (C)", "C"}, {"no letter here", std::nullopt}}),
      ExtractionPattern("boxed", R"(\\boxed\{([^{}]*)\})", {{"so \\boxed{42}", "42"}}),
      ExtractionPattern("final_number", R"((?:answer is|answer:|=)\s*(-?[0-9][0-9,]*(?:\.[0-9]+)?)\s*\.?\s*$)",
                        {{"Premium = 1,050.00", "1,050.00"}, {"The answer is 12.5.", "12.5"}}),
  };
}

std::vector<ExtractionPattern> load_patterns(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidPattern("cannot read pattern library " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const std::exception& e) {
    throw InvalidPattern("pattern library " + path.string() + " is not JSON: " + e.what());
  }
  std::vector<ExtractionPattern> out;
  for (const auto& p : j) {
    std::vector<PatternCase> cases;
    for (const auto& t : p.value("tests", nlohmann::json::array())) {
      PatternCase c{t.at("input").get<std::string>(), std::nullopt};
      if (t.contains("expected") && !t["expected"].is_null()) c.expected = t["expected"].get<std::string>();
      cases.push_back(std::move(c));
    }
    out.emplace_back(p.at("name").get<std::string>(), p.at("regex").get<std::string>(), std::move(cases));
  }
  return out;
}

}  // namespace alignkit
