#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/decision/model.hpp"
#include "cmr/weak/weak_labels.hpp"

namespace cmr::data {

struct CMRExample {
  std::string utterance_id;
  std::string tree_id;
  std::string source_url;
  std::string rule_text;
  std::string question;
  std::string scenario;
  std::vector<weak::HistoryTurn> history;
  decision::Decision decision = decision::Decision::Inquire;
  std::string follow_up;  // gold follow-up question; non-empty iff decision is Inquire
  std::optional<std::vector<weak::HistoryTurn>> evidence;
  nlohmann::json meta;  // null unless the example carries extra annotations

  // The wire "answer" field: a decision name, or the follow-up for Inquire.
  std::string answer() const;
};

// ShARC record -> example. Accepts snippet/rule_text, history/evidence turns
// with follow_up_question + follow_up_answer, and an answer that is Yes, No,
// Irrelevant or a follow-up question. Throws std::invalid_argument naming
// `index` when a required field is missing or mistyped.
CMRExample example_from_json(const nlohmann::json& record, std::size_t index = 0);
nlohmann::json example_to_json(const CMRExample& ex);

std::vector<CMRExample> parse_sharc(const nlohmann::json& records);
// Throws std::runtime_error with the path when the file cannot be read or is
// not a JSON array.
std::vector<CMRExample> load_sharc(const std::filesystem::path& path);
void save_examples(const std::filesystem::path& path, const std::vector<CMRExample>& examples);

}  // namespace cmr::data
