#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace alignkit::text {

/// Decodes UTF-8 into code points. Malformed bytes decode to U+FFFD and
/// consume a single byte, so decoding never fails.
std::vector<char32_t> decode_utf8(std::string_view s);
std::string encode_utf8(char32_t cp);

/// Number of code points.
std::size_t char_length(std::string_view s);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
std::string to_upper_ascii(std::string_view s);

/// Case-folds ASCII, collapses every whitespace run to one space and trims.
std::string normalize(std::string_view s);

bool is_whitespace(char32_t cp);
bool is_punctuation(char32_t cp);
bool is_cjk(char32_t cp);
bool is_latin_letter(char32_t cp);

/// Deterministic model-free tokenizer used for lengths and n-grams.
///
/// Whitespace and punctuation separate tokens and are dropped. Every CJK
/// character is a token on its own. ASCII letters are lower-cased. All
/// other code points accumulate into word tokens.
std::vector<std::string> tokenize(std::string_view s);

std::vector<std::string> split_lines(std::string_view s);

bool starts_with(std::string_view s, std::string_view prefix);
bool contains(std::string_view s, std::string_view needle);

/// Parses a plain decimal or scientific number, tolerating surrounding
/// whitespace and thousands separators. Returns false on anything else.
bool parse_number(std::string_view s, double& out);

}  // namespace alignkit::text
