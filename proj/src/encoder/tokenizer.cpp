#include "cmr/encoder/tokenizer.hpp"

#include <algorithm>
#include <cctype>

namespace cmr::encoder {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_word(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }
bool is_digit(unsigned char c) { return std::isdigit(c) != 0; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

std::vector<Token> tokenize_with_offsets(std::string_view text) {
  std::vector<Token> tokens;
  const std::size_t n = text.size();
  auto at = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
  std::size_t i = 0;
  while (i < n) {
    if (is_space(at(i))) {
      ++i;
      continue;
    }
    if (!is_word(at(i))) {
      tokens.push_back({lower(text.substr(i, 1)), i, i + 1});
      ++i;
      continue;
    }
    const std::size_t start = i;
    while (i < n) {
      if (is_word(at(i))) {
        ++i;
        continue;
      }
      const unsigned char c = at(i);
      const bool has_next = i + 1 < n;
      if ((c == '\'' || c == '-') && has_next && is_word(at(i + 1)) && is_word(at(i - 1))) {
        ++i;
        continue;
      }
      if ((c == '.' || c == ',') && has_next && is_digit(at(i + 1)) && is_digit(at(i - 1))) {
        ++i;
        continue;
      }
      break;
    }
    tokens.push_back({lower(text.substr(start, i - start)), start, i});
  }
  return tokens;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) out.push_back(std::move(t.text));
  return out;
}

bool is_punctuation_token(std::string_view token) {
  return !token.empty() && std::none_of(token.begin(), token.end(), [](char c) { return is_word(static_cast<unsigned char>(c)); });
}

std::vector<std::string> normalized_tokens(std::string_view text) {
  std::vector<std::string> out;
  for (auto& t : tokenize_with_offsets(text)) {
    if (!is_punctuation_token(t.text)) out.push_back(std::move(t.text));
  }
  return out;
}

}  // namespace cmr::encoder
