#include "cmr/encoder/vocab.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace cmr::encoder {

namespace {
const char* const kReserved[] = {"[PAD]", "[UNK]", "[SEQ]", "[END]"};
}

Vocabulary::Vocabulary() {
  for (const char* t : kReserved) push(t);
}

void Vocabulary::push(std::string token) {
  const auto id = static_cast<TokenId>(tokens_.size());
  if (!ids_.emplace(token, id).second) throw std::invalid_argument("duplicate vocabulary token: " + token);
  tokens_.push_back(std::move(token));
}

Vocabulary Vocabulary::build(const std::vector<std::vector<std::string>>& corpus, std::size_t min_freq) {
  if (corpus.empty()) throw std::invalid_argument("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus) {
    for (const auto& t : doc) ++freq[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, n] : freq) {
    if (n >= min_freq) kept.emplace_back(t, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocabulary v;
  for (auto& [t, n] : kept) {
    if (!v.contains(t)) v.push(t);
  }
  return v;
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  return it == ids_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) throw std::out_of_range("token id out of range");
  return tokens_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view token) const { return ids_.count(std::string(token)) != 0; }

nlohmann::json Vocabulary::to_json() const { return tokens_; }

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  const auto tokens = j.get<std::vector<std::string>>();
  if (tokens.size() < 4) throw std::invalid_argument("vocabulary is missing reserved tokens");
  for (std::size_t i = 0; i < 4; ++i) {
    if (tokens[i] != kReserved[i]) throw std::invalid_argument("vocabulary reserved tokens out of order");
  }
  Vocabulary v;
  for (std::size_t i = 4; i < tokens.size(); ++i) v.push(tokens[i]);
  return v;
}

}  // namespace cmr::encoder
