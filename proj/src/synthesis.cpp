#include "alignkit/synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "alignkit/hashing.hpp"
#include "alignkit/text.hpp"

namespace alignkit {

namespace {

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; }

/// Case-insensitive whole-phrase search on ASCII word boundaries.
bool contains_phrase(const std::string& lowered, const std::string& phrase) {
  const std::string needle = text::to_lower_ascii(phrase);
  if (needle.empty()) return false;
  std::size_t pos = lowered.find(needle);
  while (pos != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(lowered[pos - 1]) || !is_word_char(needle.front());
    const std::size_t end = pos + needle.size();
    const bool right_ok = end >= lowered.size() || !is_word_char(lowered[end]) || !is_word_char(needle.back());
    if (left_ok && right_ok) return true;
    pos = lowered.find(needle, pos + 1);
  }
  return false;
}

char option_letter(std::size_t i) { return static_cast<char>('A' + i); }

Sample base_sample(const SampleMeta& meta, Pipeline pipeline) {
  if (meta.id.empty()) throw SynthesisError(SynthesisError::Code::invalid_input, "sample id is empty");
  Sample s;
  s.id = meta.id;
  s.task_type = meta.task_type;
  s.business_area = meta.business_area;
  s.difficulty = meta.difficulty;
  s.cognition = meta.cognition;
  s.bucket = Bucket::generation;
  s.provenance.source = meta.source;
  s.provenance.pipeline = pipeline;
  return s;
}

}  // namespace

const std::vector<std::string>& schema_phases(SopSchema schema) {
  static const std::vector<std::string> alignment{"entity", "attribute", "compliance"};
  static const std::vector<std::string> underwriting{"info_extraction", "risk_id", "rule_detection", "conclusion"};
  return schema == SopSchema::alignment3 ? alignment : underwriting;
}

std::string phase_header(std::string_view phase) {
  if (phase == "risk_id") return "Risk ID";
  std::string out;
  bool start = true;
  for (char c : phase) {
    if (c == '_') {
      out.push_back(' ');
      start = true;
      continue;
    }
    out.push_back(start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
    start = false;
  }
  return out;
}

void validate_sop_trace(const SopTrace& sop) {
  const auto& expected = schema_phases(sop.schema);
  for (const auto& name : expected) {
    const auto it = std::find_if(sop.phases.begin(), sop.phases.end(), [&](const SopPhase& p) { return p.name == name; });
    if (it == sop.phases.end()) throw SynthesisError(SynthesisError::Code::missing_phase, "missing phase " + name);
    if (text::trim(it->content).empty()) {
      throw SynthesisError(SynthesisError::Code::missing_phase, "phase " + name + " is empty");
    }
  }
  if (sop.phases.size() != expected.size()) {
    throw SynthesisError(SynthesisError::Code::schema_mismatch, "trace has phases outside the schema");
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    if (sop.phases[i].name != expected[i]) {
      throw SynthesisError(SynthesisError::Code::schema_mismatch,
                           "phase " + std::to_string(i + 1) + " is " + sop.phases[i].name + ", expected " + expected[i]);
    }
  }
}

std::string serialize_sop(const SopTrace& sop) {
  std::string out;
  for (const auto& p : sop.phases) {
    if (!out.empty()) out += "\n\n";
    out += "## " + phase_header(p.name) + "\n" + text::trim(p.content);
  }
  return out;
}

Sample format_knowledge_injection(const KnowledgeQA& qa, const SampleMeta& meta) {
  if (text::trim(qa.question).empty() || text::trim(qa.answer).empty()) {
    throw SynthesisError(SynthesisError::Code::invalid_input, "knowledge QA needs a question and an answer");
  }
  if (text::contains(qa.answer, "<think>") || text::contains(qa.answer, "</think>")) {
    throw SynthesisError(SynthesisError::Code::think_tag_collision, "answer already carries think markup");
  }
  Sample s = base_sample(meta, Pipeline::knowledge_injection);
  s.format = Format::open_ended;
  s.messages = {{Role::user, qa.question}, {Role::assistant, std::string(kEmptyThink) + "\n" + qa.answer}};
  s.think = std::string();
  s.answer = qa.answer;
  if (s.provenance.source.empty()) s.provenance.source = qa.source;
  return s;
}

void validate_distractor_spec(const DistractorSpec& spec) {
  if (text::trim(spec.correct_option).empty()) {
    throw SynthesisError(SynthesisError::Code::invalid_input, "correct option is empty");
  }
  if (spec.distractors.size() < 2) {
    throw SynthesisError(SynthesisError::Code::invalid_input, "at least two distractors are required");
  }
  const std::string correct = text::normalize(spec.correct_option);
  for (const auto& d : spec.distractors) {
    if (text::trim(d.text).empty()) throw SynthesisError(SynthesisError::Code::invalid_input, "empty distractor");
    if (text::normalize(d.text) == correct) {
      throw SynthesisError(SynthesisError::Code::invalid_input, "distractor equals the correct option");
    }
  }
  if (text::trim(spec.clause_citation).empty()) {
    throw SynthesisError(SynthesisError::Code::invalid_input, "clause citation is empty");
  }
}

Sample build_alignment_sample(const std::string& stem, const DistractorSpec& spec, const SopTrace& sop,
                              const SampleMeta& meta, std::uint64_t dataset_seed) {
  if (sop.schema != SopSchema::alignment3) {
    throw SynthesisError(SynthesisError::Code::schema_mismatch, "alignment samples need the alignment3 schema");
  }
  validate_sop_trace(sop);
  validate_distractor_spec(spec);
  if (text::trim(stem).empty()) throw SynthesisError(SynthesisError::Code::invalid_input, "question stem is empty");

  std::vector<std::string> options{spec.correct_option};
  for (const auto& d : spec.distractors) options.push_back(d.text);
  SeededRng rng(derive_seed(dataset_seed, meta.id));
  rng.shuffle(options);
  const auto correct_at = static_cast<std::size_t>(
      std::find(options.begin(), options.end(), spec.correct_option) - options.begin());

  std::string prompt = text::trim(stem);
  for (std::size_t i = 0; i < options.size(); ++i) {
    prompt += "\n";
    prompt += option_letter(i);
    prompt += ". " + options[i];
  }

  Sample s = base_sample(meta, Pipeline::cognitive_alignment);
  s.format = Format::multiple_choice;
  s.think = serialize_sop(sop) + "\n\n## Clause Citation\n" + text::trim(spec.clause_citation);
  s.answer = std::string(1, option_letter(correct_at));
  s.messages = {{Role::user, prompt}, {Role::assistant, "<think>\n" + *s.think + "\n</think>\n" + s.answer}};
  return s;
}

BacktrackLexicon BacktrackLexicon::builtin() {
  return BacktrackLexicon{{"wait", "hmm", "actually", "on second thought", "let me reconsider", "let me re-check",
                           "let me recheck", "let me try again", "go back", "scratch that", "i made a mistake",
                           "alternatively", "or maybe", "not sure"}};
}

BacktrackLexicon BacktrackLexicon::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read lexicon " + path.string());
  BacktrackLexicon lex;
  std::string line;
  while (std::getline(in, line)) {
    const std::string phrase = text::trim(line);
    if (phrase.empty() || phrase.front() == '#') continue;
    lex.phrases.push_back(phrase);
  }
  return lex;
}

CotCheck check_standardized_cot(std::string_view cot, const BacktrackLexicon& lexicon) {
  CotCheck result;
  const std::string body = text::trim(cot);
  if (body.empty()) {
    result.violations.emplace_back("empty");
    return result;
  }

  // Step markers are "<k>." or "<k>)" at the start or after whitespace,
  // followed by whitespace or the end, with k the next expected number. A
  // marker opening a line with any other number breaks the sequence.
  struct Marker {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Marker> markers;
  int expected = 1;
  bool out_of_order = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(body[i]))) continue;
    if (i > 0 && !std::isspace(static_cast<unsigned char>(body[i - 1]))) {
      while (i + 1 < body.size() && std::isdigit(static_cast<unsigned char>(body[i + 1]))) ++i;
      continue;
    }
    std::size_t j = i;
    while (j < body.size() && std::isdigit(static_cast<unsigned char>(body[j]))) ++j;
    const bool punct = j < body.size() && (body[j] == '.' || body[j] == ')');
    const bool closed = punct && (j + 1 == body.size() || std::isspace(static_cast<unsigned char>(body[j + 1])));
    if (closed && j - i <= 6) {
      const int number = std::stoi(body.substr(i, j - i));
      if (number == expected) {
        markers.push_back({i, j + 1});
        ++expected;
      } else if ((i == 0 || body[i - 1] == '\n') && !out_of_order) {
        out_of_order = true;
        result.violations.push_back("step " + std::to_string(number) + " where step " + std::to_string(expected) +
                                    " was expected");
      }
    }
    i = j;
  }

  if (markers.empty()) {
    result.violations.emplace_back("no numbered steps");
  } else {
    if (!text::trim(std::string_view(body).substr(0, markers.front().begin)).empty()) {
      result.violations.emplace_back("text before step 1");
    }
    for (std::size_t k = 0; k < markers.size(); ++k) {
      const std::size_t stop = k + 1 < markers.size() ? markers[k + 1].begin : body.size();
      if (text::trim(std::string_view(body).substr(markers[k].end, stop - markers[k].end)).empty()) {
        result.violations.push_back("empty step " + std::to_string(k + 1));
      }
    }
  }

  const std::string lowered = text::to_lower_ascii(body);
  for (const auto& phrase : lexicon.phrases) {
    if (contains_phrase(lowered, phrase)) {
      result.violations.emplace_back("backtracking");
      break;
    }
  }
  result.linear = result.violations.empty();
  return result;
}

Sample build_sop_cot_sample(const std::string& case_text, const SopTrace& sop, const std::string& verdict,
                            const SampleMeta& meta) {
  if (sop.schema != SopSchema::underwriting4) {
    throw SynthesisError(SynthesisError::Code::schema_mismatch, "SOP-CoT samples need the underwriting4 schema");
  }
  validate_sop_trace(sop);
  if (text::trim(case_text).empty() || text::trim(verdict).empty()) {
    throw SynthesisError(SynthesisError::Code::invalid_input, "case text and verdict are required");
  }
  Sample s = base_sample(meta, Pipeline::underwriting_claims);
  s.format = Format::open_ended;
  s.difficulty = Difficulty::complex;
  s.think = serialize_sop(sop);
  s.answer = text::trim(verdict);
  s.messages = {{Role::user, case_text}, {Role::assistant, "<think>\n" + *s.think + "\n</think>\n" + s.answer}};
  return s;
}

}  // namespace alignkit
