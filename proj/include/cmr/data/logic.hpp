#pragma once

// Logic trees over rule conditions and the decision they imply under
// three-valued (satisfied / violated / unknown) condition states.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cmr/decision/model.hpp"
#include "cmr/weak/weak_labels.hpp"

namespace cmr::data {

enum class State { Satisfied, Violated, Unknown };
std::string_view state_name(State s);
State parse_state(std::string_view text);

enum class LogicalType { Simple, Conjunction, Disjunction, Other };
inline constexpr std::size_t kLogicalTypes = 4;
std::string_view logical_type_name(LogicalType t);
LogicalType parse_logical_type(std::string_view text);

struct LogicNode {
  enum class Op { Leaf, And, Or };
  Op op = Op::Leaf;
  std::size_t leaf = 0;   // condition index, for leaves
  bool negated = false;   // "unless": the leaf must be violated
  std::vector<LogicNode> children;

  static LogicNode make_leaf(std::size_t index, bool negated = false);
  static LogicNode make_and(std::vector<LogicNode> children);
  static LogicNode make_or(std::vector<LogicNode> children);

  std::size_t leaf_count() const;
  // Largest leaf index + 1.
  std::size_t width() const;
  // Each internal node has >= 2 children and every leaf index appears once.
  bool well_formed() const;

  nlohmann::json to_json() const;
  static LogicNode from_json(const nlohmann::json& j);
  friend bool operator==(const LogicNode&, const LogicNode&) = default;
};

// Three-valued evaluation of the tree.
State evaluate(const LogicNode& tree, std::span<const State> states);

// Irrelevant when !relevant; otherwise Yes / No / Inquire for a satisfied /
// violated / unknown root. Throws std::invalid_argument when states do not
// cover every leaf.
decision::Decision oracle_decision(const LogicNode& tree, std::span<const State> states, bool relevant);

// Unknown leaves whose value can still change the outcome, in index order.
std::vector<std::size_t> relevant_unknowns(const LogicNode& tree, std::span<const State> states);

// Structural type of a tree: a lone leaf is Simple, a flat AND of leaves is a
// Conjunction, a flat OR a Disjunction, anything deeper Other.
LogicalType tree_type(const LogicNode& tree);

// One dialog observed over a rule: the turns asked so far and the outcome.
struct DialogRecord {
  std::vector<weak::HistoryTurn> history;
  decision::Decision decision = decision::Decision::Inquire;
};

// Logical type read off the dialogs recorded for one rule:
//   one distinct follow-up question                              -> Simple
//   several questions, each one's "no" always ending in No       -> Conjunction
//   several questions, each one's "yes" always ending in Yes     -> Disjunction
//   otherwise                                                    -> Other
LogicalType infer_logical_type(std::span<const DialogRecord> dialogs);

}  // namespace cmr::data
