#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace cmr::encoder {

struct Token {
  std::string text;   // lowercased
  std::size_t begin;  // byte offsets into the source text
  std::size_t end;
};

// Lowercases, splits on whitespace and splits punctuation into separate
// tokens. Apostrophes and hyphens between word characters stay inside the
// word ("they're", "for-profit"), as do '.' and ',' between digits ("3.5",
// "10,000"). Bytes >= 0x80 are treated as word characters.
std::vector<Token> tokenize_with_offsets(std::string_view text);
std::vector<std::string> tokenize(std::string_view text);

bool is_punctuation_token(std::string_view token);

// tokenize() minus pure punctuation tokens. Used wherever texts are compared
// by edit distance.
std::vector<std::string> normalized_tokens(std::string_view text);

}  // namespace cmr::encoder
