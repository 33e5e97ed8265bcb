#include <doctest.h>

#include "cmr/data/synthetic.hpp"
#include "cmr/segment/segmenter.hpp"

using namespace cmr;
using namespace cmr::data;
using decision::Decision;

TEST_CASE("generation is deterministic in config and seed") {
  SyntheticConfig cfg;
  cfg.count = 100;
  const auto a = generate_synthetic(cfg, 4), b = generate_synthetic(cfg, 4), c = generate_synthetic(cfg, 5);
  REQUIRE(a.size() == 100);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(example_to_json(a[i]) == example_to_json(b[i]));
    differs = differs || example_to_json(a[i]) != example_to_json(c[i]);
  }
  CHECK(differs);
}

TEST_CASE("Simple rules with nothing known are Inquire or Irrelevant") {
  SyntheticConfig cfg;
  cfg.count = 300;
  cfg.logic_weights = {1, 0, 0, 0};
  cfg.allow_scenario = false;
  cfg.allow_history = false;
  for (const auto& ex : generate_synthetic(cfg, 1)) {
    CHECK(ex.scenario.empty());
    CHECK(ex.history.empty());
    CHECK((ex.decision == Decision::Inquire || ex.decision == Decision::Irrelevant));
    CHECK(ex.meta["logical_type"] == "Simple");
  }
}

TEST_CASE("stored labels agree with the logic oracle") {
  SyntheticConfig cfg;
  cfg.count = 1000;
  std::array<std::size_t, 4> classes{}, types{};
  for (const auto& ex : generate_synthetic(cfg, 77)) {
    const auto tree = LogicNode::from_json(ex.meta["logic"]);
    std::vector<State> states;
    for (const auto& s : ex.meta["condition_states"]) states.push_back(parse_state(s.get<std::string>()));
    const bool relevant = ex.meta["relevant"];
    CHECK(tree.well_formed());
    CHECK(ex.decision == oracle_decision(tree, states, relevant));
    const auto type = parse_logical_type(ex.meta["logical_type"].get<std::string>());
    CHECK(type == tree_type(tree));
    if (type == LogicalType::Simple) CHECK(tree.leaf_count() == 1);
    ++classes[std::size_t(ex.decision)];
    ++types[std::size_t(type)];
    // Known conditions surface through exactly one channel.
    std::size_t from_history = 0;
    for (std::size_t i = 0; i < states.size(); ++i) {
      const std::string src = ex.meta["sources"][i];
      CHECK((states[i] == State::Unknown) == (src == "none"));
      from_history += src == "history" ? 1 : 0;
    }
    CHECK(from_history == ex.history.size());
    if (ex.decision == Decision::Inquire) {
      const auto open = relevant_unknowns(tree, states);
      REQUIRE(!open.empty());
      CHECK(ex.follow_up == ex.meta["questions"][open.front()].get<std::string>());
    } else {
      CHECK(ex.follow_up.empty());
    }
    CHECK_NOTHROW(segment::parse_rule(ex.rule_text));
  }
  for (std::size_t c : classes) CHECK(c > 150);
  for (std::size_t t : types) CHECK(t > 150);
}

TEST_CASE("config validation") {
  SyntheticConfig cfg;
  cfg.max_conditions = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), std::invalid_argument);
  cfg = {};
  cfg.logic_weights = {0, 0, 0, 0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.allow_history = cfg.allow_scenario = false;
  cfg.class_weights = {1, 1, 0, 0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.count = 7;
  cfg.inline_only = true;
  const auto back = SyntheticConfig::from_json(cfg.to_json());
  CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("inline-only rules have no bullets") {
  SyntheticConfig cfg;
  cfg.count = 200;
  cfg.inline_only = true;
  for (const auto& ex : generate_synthetic(cfg, 3)) {
    CHECK(segment::detect_bullets(ex.rule_text).empty());
  }
}

TEST_CASE("stored logic matches the rule type") {
  SyntheticRuleSpec spec;
  spec.logic = LogicNode::make_or({LogicNode::make_leaf(0), LogicNode::make_leaf(1)});
  spec.type = LogicalType::Disjunction;
  CHECK(infer_logical_type(spec) == LogicalType::Disjunction);
}
