#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace cmr::encoder {

using TokenId = std::int64_t;

// Dense token <-> id map. Ids 0..3 are reserved.
class Vocabulary {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kUnk = 1;
  static constexpr TokenId kSeqStart = 2;  // sequence sentinel, read off as the sequence vector
  static constexpr TokenId kTypeEnd = 3;   // closes each input type

  Vocabulary();

  // Keeps tokens seen at least min_freq times, most frequent first (ties in
  // byte order). Throws std::invalid_argument on an empty corpus.
  static Vocabulary build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_freq);

  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  void push(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace cmr::encoder
