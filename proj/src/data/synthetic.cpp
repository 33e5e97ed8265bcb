#include "cmr/data/synthetic.hpp"

#include <algorithm>
#include <functional>
#include <random>
#include <stdexcept>

#include "cmr/spanqg/span.hpp"

namespace cmr::data {

using decision::Decision;
using Rng = std::mt19937_64;

std::string_view family_name(Family f) {
  switch (f) {
    case Family::Paraphrase:
      return "paraphrase";
    case Family::Numeric:
      return "numeric";
    case Family::Date:
      return "date";
    case Family::Hypernym:
      return "hypernym";
  }
  return "paraphrase";
}

void SyntheticConfig::validate() const {
  if (max_conditions == 0) throw std::invalid_argument("synthetic config allows 0 conditions per rule");
  if (min_conditions < 2 || min_conditions > max_conditions) {
    throw std::invalid_argument("min_conditions must be >= 2 and <= max_conditions");
  }
  if (max_conditions > 4) throw std::invalid_argument("max_conditions above 4 is not supported");
  auto positive = [](const auto& w) {
    double s = 0;
    for (double x : w) {
      if (!(x >= 0)) return false;
      s += x;
    }
    return s > 0;
  };
  if (!positive(logic_weights)) throw std::invalid_argument("logic_weights must be non-negative with a positive sum");
  if (!positive(family_weights)) throw std::invalid_argument("family_weights must be non-negative with a positive sum");
  if (!positive(class_weights)) throw std::invalid_argument("class_weights must be non-negative with a positive sum");
  if (!allow_scenario && !allow_history && class_weights[2] + class_weights[3] <= 0) {
    throw std::invalid_argument("without scenario or history only Inquire and Irrelevant can be generated");
  }
}

nlohmann::json SyntheticConfig::to_json() const {
  return {{"count", count},
          {"logic_weights", logic_weights},
          {"family_weights", family_weights},
          {"class_weights", class_weights},
          {"min_conditions", min_conditions},
          {"max_conditions", max_conditions},
          {"bullet_probability", bullet_probability},
          {"unless_probability", unless_probability},
          {"intro_probability", intro_probability},
          {"scenario_share", scenario_share},
          {"distractor_probability", distractor_probability},
          {"allow_scenario", allow_scenario},
          {"allow_history", allow_history},
          {"inline_only", inline_only}};
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& j) {
  SyntheticConfig c;
  c.count = j.value("count", c.count);
  c.logic_weights = j.value("logic_weights", c.logic_weights);
  c.family_weights = j.value("family_weights", c.family_weights);
  c.class_weights = j.value("class_weights", c.class_weights);
  c.min_conditions = j.value("min_conditions", c.min_conditions);
  c.max_conditions = j.value("max_conditions", c.max_conditions);
  c.bullet_probability = j.value("bullet_probability", c.bullet_probability);
  c.unless_probability = j.value("unless_probability", c.unless_probability);
  c.intro_probability = j.value("intro_probability", c.intro_probability);
  c.scenario_share = j.value("scenario_share", c.scenario_share);
  c.distractor_probability = j.value("distractor_probability", c.distractor_probability);
  c.allow_scenario = j.value("allow_scenario", c.allow_scenario);
  c.allow_history = j.value("allow_history", c.allow_history);
  c.inline_only = j.value("inline_only", c.inline_only);
  return c;
}

LogicalType infer_logical_type(const SyntheticRuleSpec& spec) { return spec.type; }

namespace {

std::size_t uniform(Rng& rng, std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); }

bool chance(Rng& rng, double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
  return v[uniform(rng, v.size())];
}

template <std::size_t N>
std::size_t weighted(Rng& rng, const std::array<double, N>& w) {
  std::discrete_distribution<std::size_t> d(w.begin(), w.end());
  return d(rng);
}

std::string with_article(const std::string& noun) {
  const char c = noun.empty() ? 'x' : noun[0];
  const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
  return (vowel ? "an " : "a ") + noun;
}

// A realized condition: its text plus the scenario sentences that state it as
// satisfied or violated.
struct Realized {
  SyntheticCondition condition;
  std::function<std::string(bool satisfied, Rng&)> state_sentence;
};

struct Attribute {
  const char* name;
  Family family;
  std::function<Realized(Rng&)> make;
};

// Threshold conditions: "satisfied" iff value is below (or above) the threshold.
Realized threshold(const std::string& text, Family family, const char* attribute, long limit, bool below,
                   std::vector<long> values, std::function<std::string(long, Rng&)> say) {
  Realized r;
  r.condition = {text, spanqg::rephrase(text), family, attribute};
  r.state_sentence = [=](bool satisfied, Rng& rng) {
    std::vector<long> ok;
    for (long v : values) {
      if (v != limit && ((below ? v < limit : v > limit) == satisfied)) ok.push_back(v);
    }
    return say(pick(rng, ok), rng);
  };
  return r;
}

std::string money(long v) {
  std::string digits = std::to_string(v);
  for (int i = int(digits.size()) - 3; i > 0; i -= 3) digits.insert(std::size_t(i), ",");
  return "£" + digits;
}

const std::vector<Attribute>& attributes() {
  static const std::vector<Attribute> kAttributes = {
      {"occupation", Family::Paraphrase,
       [](Rng& rng) {
         static const std::vector<std::string> jobs = {"nurse", "teacher", "farmer", "carer", "soldier",
                                                       "driver", "builder", "cleaner", "engineer"};
         const std::string job = pick(rng, jobs);
         Realized r;
         const std::string text = "you are " + with_article(job);
         r.condition = {text, spanqg::rephrase(text), Family::Paraphrase, "occupation"};
         r.state_sentence = [job](bool satisfied, Rng& rng) {
           if (satisfied) return pick(rng, std::vector<std::string>{"I work as ", "I am employed as "}) + with_article(job) + ".";
           std::string other = job;
           while (other == job) other = pick(rng, jobs);
           if (chance(rng, 0.5)) return "I work as " + with_article(other) + ".";
           return "I am not " + with_article(job) + ".";
         };
         return r;
       }},
      {"residence", Family::Paraphrase,
       [](Rng& rng) {
         static const std::vector<std::string> places = {"England", "Wales", "Scotland", "France", "Spain", "Ireland"};
         const std::string place = pick(rng, places);
         Realized r;
         const std::string text = "you live in " + place;
         r.condition = {text, spanqg::rephrase(text), Family::Paraphrase, "residence"};
         r.state_sentence = [place](bool satisfied, Rng& rng) {
           if (satisfied) return pick(rng, std::vector<std::string>{"My home is in ", "I have been living in "}) + place + ".";
           std::string other = place;
           while (other == place) other = pick(rng, places);
           if (chance(rng, 0.5)) return "My home is in " + other + ".";
           return "I moved away from " + place + " last year.";
         };
         return r;
       }},
      {"income", Family::Numeric,
       [](Rng& rng) {
         const long limit = pick(rng, std::vector<long>{20000, 40000});
         return threshold("your income is below " + money(limit), Family::Numeric, "income", limit, true,
                          {10000, 30000, 50000}, [](long v, Rng& rng) {
                            return chance(rng, 0.5) ? "I earn " + money(v) + " a year." : "My salary is " + money(v) + ".";
                          });
       }},
      {"age", Family::Numeric,
       [](Rng& rng) {
         const long limit = pick(rng, std::vector<long>{18, 65});
         return threshold("you are over " + std::to_string(limit), Family::Numeric, "age", limit, false, {16, 40, 70},
                          [](long v, Rng& rng) {
                            return chance(rng, 0.5) ? "I am " + std::to_string(v) + " years old."
                                                    : "I turned " + std::to_string(v) + " this year.";
                          });
       }},
      {"birth", Family::Date,
       [](Rng& rng) {
         const long limit = pick(rng, std::vector<long>{1950, 1970});
         return threshold("you were born before " + std::to_string(limit), Family::Date, "birth", limit, true,
                          {1945, 1960, 1980}, [](long v, Rng& rng) {
                            return chance(rng, 0.5) ? "I was born in " + std::to_string(v) + "."
                                                    : "My date of birth is in " + std::to_string(v) + ".";
                          });
       }},
      {"founded", Family::Date,
       [](Rng& rng) {
         const long limit = pick(rng, std::vector<long>{2000, 2010});
         return threshold("your business was founded after " + std::to_string(limit), Family::Date, "founded", limit,
                          false, {1995, 2005, 2015}, [](long v, Rng& rng) {
                            return chance(rng, 0.5) ? "I set up my company in " + std::to_string(v) + "."
                                                    : "My firm started trading in " + std::to_string(v) + ".";
                          });
       }},
      {"vehicle", Family::Hypernym,
       [](Rng&) {
         Realized r;
         const std::string text = "you own a vehicle";
         r.condition = {text, spanqg::rephrase(text), Family::Hypernym, "vehicle"};
         r.state_sentence = [](bool satisfied, Rng& rng) {
           if (satisfied) return "I have " + with_article(pick(rng, std::vector<std::string>{"car", "van", "lorry", "motorbike"})) + ".";
           return pick(rng, std::vector<std::string>{"I have no vehicle.", "I get around by bus because I have no vehicle."});
         };
         return r;
       }},
      {"disability", Family::Hypernym,
       [](Rng&) {
         Realized r;
         const std::string text = "you have a disability";
         r.condition = {text, spanqg::rephrase(text), Family::Hypernym, "disability"};
         r.state_sentence = [](bool satisfied, Rng& rng) {
           if (satisfied) return pick(rng, std::vector<std::string>{"I am blind.", "I am deaf.", "I use a wheelchair."});
           return pick(rng, std::vector<std::string>{"I am fit and healthy.", "I have no health problems."});
         };
         return r;
       }},
      {"children", Family::Hypernym,
       [](Rng&) {
         Realized r;
         const std::string text = "you have children";
         r.condition = {text, spanqg::rephrase(text), Family::Hypernym, "children"};
         r.state_sentence = [](bool satisfied, Rng& rng) {
           if (satisfied) return pick(rng, std::vector<std::string>{"I have a son.", "I have a daughter.", "My son lives with me."});
           return pick(rng, std::vector<std::string>{"I have no kids.", "I do not have any kids."});
         };
         return r;
       }},
  };
  return kAttributes;
}

const std::vector<std::string> kAdjectives = {"winter", "rural", "family", "senior", "green",
                                              "coastal", "urban", "carers", "community", "heritage"};
const std::vector<std::string> kNouns = {"grant", "allowance", "loan", "credit", "bursary", "pension", "payment", "scheme"};
const std::vector<std::string> kDistractors = {"I have two cats.", "I enjoy gardening at weekends.", "My name is Alex.",
                                               "I recently changed my bank."};

std::string ask_about(const std::string& program, Rng& rng) {
  static const std::vector<std::string> forms = {"Can I get the ", "Am I eligible for the ", "Do I qualify for the ",
                                                 "Could I claim the "};
  return pick(rng, forms) + program + "?";
}

struct Sampled {
  SyntheticRuleSpec spec;
  std::vector<Realized> realized;
  std::string adjective, noun;
};

std::string bullets(const std::vector<SyntheticCondition>& cs, std::size_t from, std::size_t to) {
  std::string s;
  for (std::size_t i = from; i < to; ++i) s += "\n* " + cs[i].text;
  return s;
}

Sampled sample_rule(const SyntheticConfig& cfg, Rng& rng) {
  Sampled out;
  out.adjective = pick(rng, kAdjectives);
  out.noun = pick(rng, kNouns);
  SyntheticRuleSpec& spec = out.spec;
  spec.program = out.adjective + " " + out.noun;
  spec.type = static_cast<LogicalType>(weighted(rng, cfg.logic_weights));

  std::size_t n = 1;
  if (spec.type == LogicalType::Conjunction || spec.type == LogicalType::Disjunction) {
    n = cfg.min_conditions + uniform(rng, cfg.max_conditions - cfg.min_conditions + 1);
  } else if (spec.type == LogicalType::Other) {
    n = 3;
  }

  // Distinct attributes, family first.
  std::vector<std::size_t> unused(attributes().size());
  for (std::size_t i = 0; i < unused.size(); ++i) unused[i] = i;
  const bool exclusive_age = true;  // age and birth year never share a rule
  for (std::size_t c = 0; c < n; ++c) {
    std::array<double, kFamilies> w = cfg.family_weights;
    for (std::size_t f = 0; f < kFamilies; ++f) {
      const bool available = std::any_of(unused.begin(), unused.end(), [&](std::size_t a) {
        return static_cast<std::size_t>(attributes()[a].family) == f;
      });
      if (!available) w[f] = 0;
    }
    if (std::all_of(w.begin(), w.end(), [](double x) { return x <= 0; })) {
      for (std::size_t a : unused) w[static_cast<std::size_t>(attributes()[a].family)] = 1;
    }
    const auto family = static_cast<Family>(weighted(rng, w));
    std::vector<std::size_t> candidates;
    for (std::size_t a : unused) {
      if (attributes()[a].family == family) candidates.push_back(a);
    }
    const std::size_t a = pick(rng, candidates);
    unused.erase(std::find(unused.begin(), unused.end(), a));
    if (exclusive_age) {
      const std::string name = attributes()[a].name;
      const char* twin = name == "age" ? "birth" : name == "birth" ? "age" : nullptr;
      if (twin) {
        unused.erase(std::remove_if(unused.begin(), unused.end(), [&](std::size_t u) { return std::string(attributes()[u].name) == twin; }),
                     unused.end());
      }
    }
    out.realized.push_back(attributes()[a].make(rng));
    spec.conditions.push_back(out.realized.back().condition);
  }

  const auto& cs = spec.conditions;
  const std::string head = "You can get the " + spec.program + " if ";
  const bool bullet = !cfg.inline_only && chance(rng, cfg.bullet_probability);
  std::vector<LogicNode> leaves;
  for (std::size_t i = 0; i < n; ++i) leaves.push_back(LogicNode::make_leaf(i));

  switch (spec.type) {
    case LogicalType::Simple:
      spec.logic = leaves[0];
      if (bullet) {
        spec.surface = "simple_bullet";
        spec.rule_text = "You can get the " + spec.program + " if:" + bullets(cs, 0, 1);
      } else {
        spec.surface = "simple_inline";
        spec.rule_text = head + cs[0].text + ".";
      }
      break;
    case LogicalType::Conjunction:
      if (bullet) {
        spec.surface = "all_bullets";
        spec.rule_text = head + "all of the following apply:" + bullets(cs, 0, n);
      } else if (chance(rng, cfg.unless_probability)) {
        spec.surface = "inline_unless";
        spec.rule_text = head + cs[0].text;
        for (std::size_t i = 1; i + 1 < n; ++i) spec.rule_text += ", and " + cs[i].text;
        spec.rule_text += ", unless " + cs[n - 1].text + ".";
        leaves[n - 1].negated = true;
      } else {
        spec.surface = "inline_and";
        spec.rule_text = head + cs[0].text;
        for (std::size_t i = 1; i < n; ++i) spec.rule_text += ", and " + cs[i].text;
        spec.rule_text += ".";
      }
      spec.logic = LogicNode::make_and(leaves);
      break;
    case LogicalType::Disjunction:
      if (bullet) {
        spec.surface = "any_bullets";
        spec.rule_text = head + "any of the following apply:" + bullets(cs, 0, n);
      } else {
        spec.surface = "inline_or";
        spec.rule_text = head + cs[0].text;
        for (std::size_t i = 1; i < n; ++i) spec.rule_text += ", or if " + cs[i].text;
        spec.rule_text += ".";
      }
      spec.logic = LogicNode::make_or(leaves);
      break;
    case LogicalType::Other: {
      const std::size_t form = bullet ? uniform(rng, 2) : 2 + uniform(rng, 2);
      if (form == 0) {
        spec.surface = "lead_and_any_bullets";
        spec.rule_text = head + cs[0].text + " and any of the following apply:" + bullets(cs, 1, 3);
        spec.logic = LogicNode::make_and({leaves[0], LogicNode::make_or({leaves[1], leaves[2]})});
      } else if (form == 1) {
        spec.surface = "any_bullets_as_long_as";
        spec.rule_text = head + "any of the following apply:" + bullets(cs, 0, 2) + "\nIn every case " + cs[2].text + ".";
        spec.logic = LogicNode::make_and({LogicNode::make_or({leaves[0], leaves[1]}), leaves[2]});
      } else if (form == 2) {
        spec.surface = "inline_also";
        spec.rule_text = head + cs[0].text + ". You can also get it if " + cs[1].text + ", and " + cs[2].text + ".";
        spec.logic = LogicNode::make_or({leaves[0], LogicNode::make_and({leaves[1], leaves[2]})});
      } else {
        spec.surface = "inline_as_long_as";
        spec.rule_text = head + cs[0].text + ", or if " + cs[1].text + ", as long as " + cs[2].text + ".";
        spec.logic = LogicNode::make_and({LogicNode::make_or({leaves[0], leaves[1]}), leaves[2]});
      }
      break;
    }
  }

  if (chance(rng, cfg.intro_probability)) {
    static const std::vector<std::string> intros = {"The {} helps with everyday costs.",
                                                    "This guide explains who can claim the {}.",
                                                    "The {} is paid every month."};
    std::string intro = pick(rng, intros);
    intro.replace(intro.find("{}"), 2, spec.program);
    spec.rule_text = intro + " " + spec.rule_text;
  }
  return out;
}

}  // namespace

std::vector<CMRExample> generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  std::vector<CMRExample> out;
  out.reserve(config.count);
  const bool any_channel = config.allow_scenario || config.allow_history;

  for (std::size_t e = 0; e < config.count; ++e) {
    Sampled sampled = sample_rule(config, rng);
    const SyntheticRuleSpec& spec = sampled.spec;
    const std::size_t n = spec.conditions.size();

    auto class_weights = config.class_weights;
    if (!any_channel) class_weights[0] = class_weights[1] = 0;
    const auto target = static_cast<Decision>(weighted(rng, class_weights));
    const bool relevant = target != Decision::Irrelevant;

    std::vector<State> states(n, State::Unknown);
    auto draw_states = [&](bool can_know) {
      for (auto& s : states) s = can_know ? static_cast<State>(uniform(rng, 3)) : State::Unknown;
    };
    if (!relevant) {
      draw_states(config.allow_scenario);
    } else {
      bool hit = false;
      for (int attempt = 0; attempt < 10000 && !hit; ++attempt) {
        draw_states(any_channel);
        hit = oracle_decision(spec.logic, states, true) == target;
      }
      if (!hit) throw std::logic_error("could not sample condition states for the target decision");
    }

    std::vector<std::string> sources(n, "none");
    std::vector<std::string> scenario_parts;
    CMRExample ex;
    std::vector<weak::HistoryTurn> evidence;
    for (std::size_t i = 0; i < n; ++i) {
      if (states[i] == State::Unknown) continue;
      const bool satisfied = states[i] == State::Satisfied;
      const weak::HistoryTurn turn{spec.conditions[i].question, satisfied ? weak::Answer::Yes : weak::Answer::No};
      bool in_scenario = config.allow_scenario && (!config.allow_history || !relevant || chance(rng, config.scenario_share));
      if (in_scenario) {
        sources[i] = "scenario";
        scenario_parts.push_back(sampled.realized[i].state_sentence(satisfied, rng));
        evidence.push_back(turn);
      } else {
        sources[i] = "history";
        ex.history.push_back(turn);
      }
    }
    if (config.allow_scenario && chance(rng, config.distractor_probability)) scenario_parts.push_back(pick(rng, kDistractors));
    std::shuffle(scenario_parts.begin(), scenario_parts.end(), rng);
    for (const auto& p : scenario_parts) ex.scenario += (ex.scenario.empty() ? "" : " ") + p;

    std::string asked = spec.program;
    if (!relevant) {
      std::string adj = sampled.adjective, noun = sampled.noun;
      while (adj == sampled.adjective) adj = pick(rng, kAdjectives);
      while (noun == sampled.noun) noun = pick(rng, kNouns);
      asked = adj + " " + noun;
    }
    ex.question = ask_about(asked, rng);
    ex.rule_text = spec.rule_text;
    ex.decision = oracle_decision(spec.logic, states, relevant);
    if (ex.decision == Decision::Inquire) {
      const auto open = relevant_unknowns(spec.logic, states);
      ex.follow_up = spec.conditions[open.at(0)].question;
    }
    ex.evidence = evidence;
    ex.utterance_id = "syn-" + std::to_string(seed) + "-" + std::to_string(e);
    ex.tree_id = "syn-" + std::to_string(seed) + "-rule-" + std::to_string(e);
    ex.source_url = "synthetic://" + spec.program;

    nlohmann::json conditions = nlohmann::json::array(), questions = nlohmann::json::array(),
                   families = nlohmann::json::array(), state_names = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
      conditions.push_back(spec.conditions[i].text);
      questions.push_back(spec.conditions[i].question);
      families.push_back(family_name(spec.conditions[i].family));
      state_names.push_back(state_name(states[i]));
    }
    ex.meta = {{"logic", spec.logic.to_json()},
               {"condition_states", state_names},
               {"sources", sources},
               {"logical_type", logical_type_name(spec.type)},
               {"conditions", conditions},
               {"questions", questions},
               {"families", families},
               {"relevant", relevant},
               {"program", spec.program},
               {"surface", spec.surface}};
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace cmr::data
