#include "cmr/data/logic.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

namespace cmr::data {

std::string_view state_name(State s) {
  switch (s) {
    case State::Satisfied:
      return "satisfied";
    case State::Violated:
      return "violated";
    case State::Unknown:
      return "unknown";
  }
  return "unknown";
}

State parse_state(std::string_view text) {
  if (text == "satisfied") return State::Satisfied;
  if (text == "violated") return State::Violated;
  if (text == "unknown") return State::Unknown;
  throw std::invalid_argument("unknown condition state '" + std::string(text) + "'");
}

std::string_view logical_type_name(LogicalType t) {
  switch (t) {
    case LogicalType::Simple:
      return "Simple";
    case LogicalType::Conjunction:
      return "Conjunction";
    case LogicalType::Disjunction:
      return "Disjunction";
    case LogicalType::Other:
      return "Other";
  }
  return "Other";
}

LogicalType parse_logical_type(std::string_view text) {
  for (auto t : {LogicalType::Simple, LogicalType::Conjunction, LogicalType::Disjunction, LogicalType::Other}) {
    if (logical_type_name(t) == text) return t;
  }
  throw std::invalid_argument("unknown logical type '" + std::string(text) + "'");
}

LogicNode LogicNode::make_leaf(std::size_t index, bool negated) {
  LogicNode n;
  n.leaf = index;
  n.negated = negated;
  return n;
}

LogicNode LogicNode::make_and(std::vector<LogicNode> children) {
  LogicNode n;
  n.op = Op::And;
  n.children = std::move(children);
  return n;
}

LogicNode LogicNode::make_or(std::vector<LogicNode> children) {
  LogicNode n;
  n.op = Op::Or;
  n.children = std::move(children);
  return n;
}

std::size_t LogicNode::leaf_count() const {
  if (op == Op::Leaf) return 1;
  std::size_t n = 0;
  for (const auto& c : children) n += c.leaf_count();
  return n;
}

std::size_t LogicNode::width() const {
  if (op == Op::Leaf) return leaf + 1;
  std::size_t w = 0;
  for (const auto& c : children) w = std::max(w, c.width());
  return w;
}

namespace {

bool collect_leaves(const LogicNode& n, std::set<std::size_t>& seen) {
  if (n.op == LogicNode::Op::Leaf) return seen.insert(n.leaf).second;
  if (n.children.size() < 2) return false;
  for (const auto& c : n.children) {
    if (!collect_leaves(c, seen)) return false;
  }
  return true;
}

State negate(State s) {
  if (s == State::Satisfied) return State::Violated;
  if (s == State::Violated) return State::Satisfied;
  return State::Unknown;
}

bool evaluate_bool(const LogicNode& n, const std::vector<bool>& values) {
  switch (n.op) {
    case LogicNode::Op::Leaf:
      return values[n.leaf] != n.negated;
    case LogicNode::Op::And:
      return std::all_of(n.children.begin(), n.children.end(), [&](const LogicNode& c) { return evaluate_bool(c, values); });
    case LogicNode::Op::Or:
      return std::any_of(n.children.begin(), n.children.end(), [&](const LogicNode& c) { return evaluate_bool(c, values); });
  }
  return false;
}

}  // namespace

bool LogicNode::well_formed() const {
  std::set<std::size_t> seen;
  return collect_leaves(*this, seen);
}

nlohmann::json LogicNode::to_json() const {
  if (op == Op::Leaf) {
    nlohmann::json j = {{"leaf", leaf}};
    if (negated) j["negated"] = true;
    return j;
  }
  nlohmann::json kids = nlohmann::json::array();
  for (const auto& c : children) kids.push_back(c.to_json());
  return {{"op", op == Op::And ? "and" : "or"}, {"children", kids}};
}

LogicNode LogicNode::from_json(const nlohmann::json& j) {
  if (j.contains("leaf")) return make_leaf(j.at("leaf").get<std::size_t>(), j.value("negated", false));
  const std::string op = j.at("op").get<std::string>();
  std::vector<LogicNode> kids;
  for (const auto& c : j.at("children")) kids.push_back(from_json(c));
  if (op == "and") return make_and(std::move(kids));
  if (op == "or") return make_or(std::move(kids));
  throw std::invalid_argument("unknown logic op '" + op + "'");
}

State evaluate(const LogicNode& n, std::span<const State> states) {
  switch (n.op) {
    case LogicNode::Op::Leaf: {
      if (n.leaf >= states.size()) throw std::invalid_argument("condition states do not cover every leaf");
      return n.negated ? negate(states[n.leaf]) : states[n.leaf];
    }
    case LogicNode::Op::And: {
      bool all = true;
      for (const auto& c : n.children) {
        const State s = evaluate(c, states);
        if (s == State::Violated) return State::Violated;
        all = all && s == State::Satisfied;
      }
      return all ? State::Satisfied : State::Unknown;
    }
    case LogicNode::Op::Or: {
      bool none = true;
      for (const auto& c : n.children) {
        const State s = evaluate(c, states);
        if (s == State::Satisfied) return State::Satisfied;
        none = none && s == State::Violated;
      }
      return none ? State::Violated : State::Unknown;
    }
  }
  return State::Unknown;
}

decision::Decision oracle_decision(const LogicNode& tree, std::span<const State> states, bool relevant) {
  if (tree.width() > states.size()) throw std::invalid_argument("condition states do not cover every leaf");
  if (!relevant) return decision::Decision::Irrelevant;
  switch (evaluate(tree, states)) {
    case State::Satisfied:
      return decision::Decision::Yes;
    case State::Violated:
      return decision::Decision::No;
    case State::Unknown:
      return decision::Decision::Inquire;
  }
  return decision::Decision::Inquire;
}

std::vector<std::size_t> relevant_unknowns(const LogicNode& tree, std::span<const State> states) {
  std::vector<std::size_t> unknown;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i] == State::Unknown) unknown.push_back(i);
  }
  if (unknown.size() > 20) throw std::invalid_argument("too many unknown conditions to enumerate");
  std::vector<bool> values(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) values[i] = states[i] == State::Satisfied;
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < unknown.size(); ++u) {
    bool matters = false;
    const std::size_t others = unknown.size() - 1;
    for (std::size_t mask = 0; mask < (std::size_t{1} << others) && !matters; ++mask) {
      std::size_t bit = 0;
      for (std::size_t v = 0; v < unknown.size(); ++v) {
        if (v == u) continue;
        values[unknown[v]] = (mask >> bit++) & 1;
      }
      values[unknown[u]] = false;
      const bool off = evaluate_bool(tree, values);
      values[unknown[u]] = true;
      matters = off != evaluate_bool(tree, values);
    }
    if (matters) out.push_back(unknown[u]);
  }
  return out;
}

LogicalType tree_type(const LogicNode& tree) {
  if (tree.op == LogicNode::Op::Leaf) return LogicalType::Simple;
  for (const auto& c : tree.children) {
    if (c.op != LogicNode::Op::Leaf) return LogicalType::Other;
  }
  return tree.op == LogicNode::Op::And ? LogicalType::Conjunction : LogicalType::Disjunction;
}

LogicalType infer_logical_type(std::span<const DialogRecord> dialogs) {
  std::set<std::string> questions;
  for (const auto& d : dialogs) {
    for (const auto& t : d.history) questions.insert(t.follow_up_question);
  }
  if (questions.size() <= 1) return LogicalType::Simple;

  // For each question and answer: how many dialogs carried it, and how many of
  // those ended with the matching final decision.
  auto forces = [&](weak::Answer answer, decision::Decision outcome) {
    std::map<std::string, std::pair<std::size_t, std::size_t>> seen;
    for (const auto& d : dialogs) {
      for (const auto& t : d.history) {
        if (t.answer != answer) continue;
        auto& [n, hits] = seen[t.follow_up_question];
        ++n;
        if (d.decision == outcome) ++hits;
      }
    }
    for (const auto& q : questions) {
      auto it = seen.find(q);
      if (it == seen.end() || it->second.second != it->second.first) return false;
    }
    return true;
  };
  if (forces(weak::Answer::No, decision::Decision::No)) return LogicalType::Conjunction;
  if (forces(weak::Answer::Yes, decision::Decision::Yes)) return LogicalType::Disjunction;
  return LogicalType::Other;
}

}  // namespace cmr::data
