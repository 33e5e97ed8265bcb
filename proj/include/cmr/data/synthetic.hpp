#pragma once

// Synthetic rule/dialog corpora with known logic and oracle labels.
//
// Conditions come from four families that mirror common scenario reading
// difficulties: sentence paraphrase ("you are a nurse" / "I work as a nurse"),
// numeric thresholds, date comparison and hypernym substitution ("you own a
// vehicle" / "I have a van").

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "cmr/data/example.hpp"
#include "cmr/data/logic.hpp"

namespace cmr::data {

enum class Family { Paraphrase = 0, Numeric = 1, Date = 2, Hypernym = 3 };
inline constexpr std::size_t kFamilies = 4;
std::string_view family_name(Family f);

struct SyntheticConfig {
  std::size_t count = 1000;
  // Simple, Conjunction, Disjunction, Other.
  std::array<double, kLogicalTypes> logic_weights{1, 1, 1, 1};
  // Paraphrase, Numeric, Date, Hypernym.
  std::array<double, kFamilies> family_weights{1, 1, 1, 1};
  // Target gold class: Yes, No, Inquire, Irrelevant.
  std::array<double, decision::kDecisions> class_weights{1, 1, 1, 1};
  std::size_t min_conditions = 2;  // for Conjunction / Disjunction
  std::size_t max_conditions = 3;
  double bullet_probability = 0.4;
  double unless_probability = 0.2;
  double intro_probability = 0.3;
  // Chance that a known condition is stated in the scenario rather than asked
  // in the dialog history.
  double scenario_share = 0.5;
  double distractor_probability = 0.3;
  bool allow_scenario = true;
  bool allow_history = true;
  // Only in-line surface forms (every rule is one or two plain sentences).
  bool inline_only = false;

  // Throws std::invalid_argument when the configuration cannot produce rules.
  void validate() const;
  nlohmann::json to_json() const;
  static SyntheticConfig from_json(const nlohmann::json& j);
};

struct SyntheticCondition {
  std::string text;      // as written in the rule
  std::string question;  // follow-up asked about it
  Family family = Family::Paraphrase;
  std::string attribute;
};

struct SyntheticRuleSpec {
  std::string program;
  std::vector<SyntheticCondition> conditions;
  LogicNode logic;
  LogicalType type = LogicalType::Simple;
  std::string surface;  // name of the surface template
  std::string rule_text;
};

LogicalType infer_logical_type(const SyntheticRuleSpec& spec);

// Deterministic in (config, seed). Every example carries meta: logic tree,
// condition_states, sources, logical_type, conditions, questions, families.
std::vector<CMRExample> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace cmr::data
