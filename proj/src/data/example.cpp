#include "cmr/data/example.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

namespace cmr::data {

namespace {

std::string trimmed(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::string lowered(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::string field(const nlohmann::json& j, std::initializer_list<const char*> names, bool required,
                  std::size_t index) {
  for (const char* n : names) {
    auto it = j.find(n);
    if (it == j.end() || it->is_null()) continue;
    if (!it->is_string()) throw std::invalid_argument("record " + std::to_string(index) + ": field '" + n + "' must be a string");
    return it->get<std::string>();
  }
  if (required) throw std::invalid_argument("record " + std::to_string(index) + ": missing field '" + *names.begin() + "'");
  return {};
}

std::vector<weak::HistoryTurn> turns(const nlohmann::json& j, const char* name, std::size_t index) {
  std::vector<weak::HistoryTurn> out;
  if (!j.is_array()) throw std::invalid_argument("record " + std::to_string(index) + ": '" + name + "' must be an array");
  for (const auto& t : j) {
    if (!t.is_object()) throw std::invalid_argument("record " + std::to_string(index) + ": '" + name + "' turn must be an object");
    weak::HistoryTurn turn;
    turn.follow_up_question = field(t, {"follow_up_question"}, true, index);
    try {
      turn.answer = weak::parse_answer(field(t, {"follow_up_answer", "answer"}, true, index));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("record " + std::to_string(index) + ": " + e.what());
    }
    out.push_back(std::move(turn));
  }
  return out;
}

nlohmann::json turns_json(const std::vector<weak::HistoryTurn>& ts) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& t : ts) a.push_back({{"follow_up_question", t.follow_up_question}, {"follow_up_answer", weak::answer_name(t.answer)}});
  return a;
}

}  // namespace

std::string CMRExample::answer() const {
  return decision == decision::Decision::Inquire ? follow_up : std::string(decision::decision_name(decision));
}

CMRExample example_from_json(const nlohmann::json& j, std::size_t index) {
  if (!j.is_object()) throw std::invalid_argument("record " + std::to_string(index) + ": not an object");
  CMRExample ex;
  ex.utterance_id = field(j, {"utterance_id"}, false, index);
  ex.tree_id = field(j, {"tree_id"}, false, index);
  ex.source_url = field(j, {"source_url"}, false, index);
  ex.rule_text = field(j, {"snippet", "rule_text", "rule"}, true, index);
  ex.question = field(j, {"question"}, true, index);
  ex.scenario = field(j, {"scenario"}, false, index);
  if (auto it = j.find("history"); it != j.end() && !it->is_null()) ex.history = turns(*it, "history", index);
  if (auto it = j.find("evidence"); it != j.end() && !it->is_null()) ex.evidence = turns(*it, "evidence", index);
  const std::string answer = trimmed(field(j, {"answer"}, true, index));
  const std::string a = lowered(answer);
  if (a == "yes") {
    ex.decision = decision::Decision::Yes;
  } else if (a == "no") {
    ex.decision = decision::Decision::No;
  } else if (a == "irrelevant") {
    ex.decision = decision::Decision::Irrelevant;
  } else {
    if (answer.empty()) throw std::invalid_argument("record " + std::to_string(index) + ": empty answer");
    ex.decision = decision::Decision::Inquire;
    ex.follow_up = answer;
  }
  if (auto it = j.find("meta"); it != j.end()) ex.meta = *it;
  return ex;
}

nlohmann::json example_to_json(const CMRExample& ex) {
  nlohmann::json j = {{"utterance_id", ex.utterance_id},
                      {"tree_id", ex.tree_id},
                      {"source_url", ex.source_url},
                      {"snippet", ex.rule_text},
                      {"question", ex.question},
                      {"scenario", ex.scenario},
                      {"history", turns_json(ex.history)},
                      {"answer", ex.answer()}};
  if (ex.evidence) j["evidence"] = turns_json(*ex.evidence);
  if (!ex.meta.is_null()) j["meta"] = ex.meta;
  return j;
}

std::vector<CMRExample> parse_sharc(const nlohmann::json& records) {
  if (!records.is_array()) throw std::invalid_argument("ShARC data must be a JSON array");
  std::vector<CMRExample> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back(example_from_json(records[i], i));
  return out;
}

std::vector<CMRExample> load_sharc(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(path.string() + ": malformed JSON: " + e.what());
  }
  try {
    return parse_sharc(j);
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

void save_examples(const std::filesystem::path& path, const std::vector<CMRExample>& examples) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& ex : examples) a.push_back(example_to_json(ex));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << a.dump(1) << '\n';
}

}  // namespace cmr::data
