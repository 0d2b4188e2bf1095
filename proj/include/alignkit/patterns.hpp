#pragma once

#include <filesystem>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

namespace alignkit {

class InvalidPattern : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct PatternCase {
  std::string input;
  /// Expected capture; nullopt when the pattern must not fire.
  std::optional<std::string> expected;
};

/// Named final-answer extractor. Capture group 1 is the answer span.
class ExtractionPattern {
 public:
  /// Compiles and self-tests the pattern; throws InvalidPattern on failure.
  ExtractionPattern(std::string name, const std::string& regex, std::vector<PatternCase> cases = {});

  const std::string& name() const { return name_; }
  const std::string& source() const { return source_; }

  /// Capture of the last match in the text.
  std::optional<std::string> extract(const std::string& text) const;

 private:
  std::string name_;
  std::string source_;
  std::regex regex_;
};

/// Choice letter, boxed value and "answer is <number>" extractors.
std::vector<ExtractionPattern> builtin_patterns();

/// JSON array of {name, regex, tests:[{input, expected}]}.
std::vector<ExtractionPattern> load_patterns(const std::filesystem::path& path);

}  // namespace alignkit
