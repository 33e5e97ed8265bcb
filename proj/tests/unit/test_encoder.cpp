#include <doctest.h>

#include <map>

#include "cmr/encoder/encoder.hpp"
#include "cmr/encoder/tokenizer.hpp"
#include "oracles/fixtures.hpp"

using namespace cmr;
using namespace cmr::encoder;

namespace {

nn::ModelConfig tiny_config(std::size_t vocab) {
  nn::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 24;
  c.n_encoder_layers = 2;
  c.dropout_rate = 0;
  c.vocab_size = vocab;
  c.max_sequence_length = 64;
  return c;
}

AssemblyInput sample_input() {
  AssemblyInput in;
  in.conditions = {tokenize("you are over 18"), tokenize("you live in Wales")};
  in.question = tokenize("Can I get the grant?");
  in.scenario = tokenize("I am 30 and live in Cardiff.");
  in.history = {{"Are you over 18?", weak::Answer::Yes}, {"Do you live in Wales?", weak::Answer::No}};
  return in;
}

Vocabulary vocab_for(const AssemblyInput& in) {
  std::vector<std::vector<std::string>> corpus = in.conditions;
  corpus.push_back(in.question);
  corpus.push_back(in.scenario);
  for (const auto& h : in.history) corpus.push_back(tokenize(h.follow_up_question));
  corpus.push_back({"yes", "no"});
  return Vocabulary::build(corpus, 1);
}

}  // namespace

TEST_CASE("vocabulary") {
  const std::vector<std::vector<std::string>> corpus = {{"b", "a", "c", "a"}, {"b", "a", "d"}, {"e"}};
  SUBCASE("min_freq keeps exactly the tokens counted often enough") {
    for (std::size_t min_freq : {1u, 2u, 3u, 4u}) {
      std::map<std::string, std::size_t> counts;
      for (const auto& doc : corpus) {
        for (const auto& t : doc) ++counts[t];
      }
      const Vocabulary v = Vocabulary::build(corpus, min_freq);
      std::size_t expected = 4;
      for (const auto& [t, n] : counts) {
        CHECK(v.contains(t) == (n >= min_freq));
        expected += n >= min_freq ? 1 : 0;
      }
      CHECK(v.size() == expected);
    }
  }
  SUBCASE("most frequent first, ties in byte order") {
    const Vocabulary v = Vocabulary::build(corpus, 1);
    CHECK(v.token(4) == "a");
    CHECK(v.token(5) == "b");
    CHECK(v.token(6) == "c");
    CHECK(v.token(7) == "d");
    CHECK(v.token(8) == "e");
  }
  SUBCASE("reserved ids and unknown tokens") {
    const Vocabulary v = Vocabulary::build(corpus, 2);
    CHECK(v.token(Vocabulary::kPad) == "[PAD]");
    CHECK(v.id("zebra") == Vocabulary::kUnk);
    CHECK(v.id("e") == Vocabulary::kUnk);
    CHECK_THROWS_AS(v.token(99), std::out_of_range);
  }
  SUBCASE("json round trip") {
    const Vocabulary v = Vocabulary::build(corpus, 1);
    CHECK(Vocabulary::from_json(v.to_json()) == v);
    CHECK_THROWS_AS(Vocabulary::from_json(nlohmann::json::array({"x"})), std::invalid_argument);
  }
  CHECK_THROWS_AS(Vocabulary::build({}, 1), std::invalid_argument);
}

TEST_CASE("assemble layout") {
  const AssemblyInput in = sample_input();
  const Vocabulary v = vocab_for(in);
  const InputAssembly a = assemble(in, v, 64);
  REQUIRE(a.sentinel_positions.size() == 2 + 2 + 2);
  CHECK(a.n_conditions == 2);
  CHECK(a.n_history == 2);
  for (std::size_t p : a.sentinel_positions) CHECK(a.token_ids[p] == Vocabulary::kSeqStart);
  // Four END markers close conditions, question, scenario and history.
  CHECK(std::count(a.token_ids.begin(), a.token_ids.end(), Vocabulary::kTypeEnd) == 4);
  CHECK(a.kinds[a.sentinel_positions[0]] == SegmentKind::Condition);
  CHECK(a.kinds[a.sentinel_positions[2]] == SegmentKind::Question);
  CHECK(a.kinds[a.sentinel_positions[3]] == SegmentKind::Scenario);
  CHECK(a.kinds[a.sentinel_positions[4]] == SegmentKind::History);
  CHECK(a.condition_bodies[0].begin == 1);
  CHECK(a.condition_bodies[0].end == 5);
  CHECK(v.token(a.token_ids[a.condition_bodies[1].begin]) == "you");
  // Each history turn ends in its answer token.
  CHECK(v.token(a.token_ids[a.sentinel_positions[5] - 1]) == "yes");
  CHECK(v.token(a.token_ids[a.token_ids.size() - 2]) == "no");
  const std::size_t expected = (1 + 4) + (1 + 4) + 1 + (1 + in.question.size() + 1) + (1 + in.scenario.size() + 1) +
                               (1 + 5 + 1) + (1 + 6 + 1) + 1;
  CHECK(a.token_ids.size() == expected);
  CHECK(a.kinds.size() == a.token_ids.size());
}

TEST_CASE("assemble sentinel count with one condition and no dialog") {
  AssemblyInput in;
  in.conditions = {{"x"}};
  const Vocabulary v = Vocabulary::build({{"x"}}, 1);
  const InputAssembly a = assemble(in, v, 16);
  CHECK(a.sentinel_positions.size() == 3);
  CHECK(a.token_ids.size() == 2 + 1 + 2 + 2 + 1);
  CHECK_THROWS_AS(assemble(AssemblyInput{}, v, 16), std::invalid_argument);
}

TEST_CASE("the three-sentence rule with one history turn gives N + 3 sentence vectors") {
  AssemblyInput in;
  for (const char* s : {"7(a) loans are the most basic and most used type loan of the Small Business Administration's (SBA) "
                        "business loan programs.",
                        "It's name comes from section 7(a) of the Small Business Act, which authorizes the agency to "
                        "provide business loans to American small businesses.",
                        "The loan program is designed to assist for-profit businesses that are not able to get other "
                        "financing from other resources."}) {
    in.conditions.push_back(tokenize(s));
  }
  in.question = tokenize("Is this loan for me?");
  in.scenario = tokenize("I am a 34 year old man from the United States who owns their own business.");
  in.history = {{"Are you a for-profit business?", weak::Answer::Yes}};
  const Vocabulary v = vocab_for(in);
  const InputAssembly a = assemble(in, v, 200);
  CHECK(a.sentinel_positions.size() == 3 + 3);

  nn::Rng rng(1);
  auto cfg = tiny_config(v.size());
  cfg.max_sequence_length = 200;
  nn::ParameterSet params;
  Encoder enc(params, "enc", cfg);
  enc.reset(rng);
  const auto out = enc.encode(a, {});
  CHECK(out.sentence_vectors.shape() == nn::Shape{6, 16});
  CHECK(out.token_vectors.shape() == nn::Shape{a.token_ids.size(), 16});
}

TEST_CASE("truncation drops history oldest first, then the scenario tail, then the question tail") {
  AssemblyInput in = sample_input();
  const Vocabulary v = vocab_for(in);
  const std::size_t full = assemble(in, v, 256).token_ids.size();
  const std::size_t turn2 = 1 + 6 + 1;
  const std::size_t turn1 = 1 + 5 + 1;

  SUBCASE("one turn short drops the oldest turn") {
    const InputAssembly a = assemble(in, v, full - 1);
    CHECK(a.history_dropped == 1);
    CHECK(a.n_history == 1);
    CHECK(a.scenario_tokens_dropped == 0);
    CHECK(v.token(a.token_ids[a.token_ids.size() - 2]) == "no");
    CHECK(a.token_ids.size() == full - turn1);
  }
  SUBCASE("then the scenario loses its tail") {
    const InputAssembly a = assemble(in, v, full - turn1 - turn2 - 3);
    CHECK(a.n_history == 0);
    CHECK(a.scenario_tokens_dropped == 3);
    const std::size_t s = a.sentinel_positions[3];
    CHECK(v.token(a.token_ids[s + 1]) == "i");
    CHECK(a.token_ids.size() == full - turn1 - turn2 - 3);
  }
  SUBCASE("then the question") {
    const std::size_t conditions = 1 + 4 + 1 + 4 + 1;
    const InputAssembly a = assemble(in, v, conditions + 5 + 2);
    CHECK(a.scenario_tokens_dropped == in.scenario.size());
    const std::size_t q = a.sentinel_positions[2];
    CHECK(a.token_ids[q + 3] == Vocabulary::kTypeEnd);
    CHECK(a.token_ids.size() == conditions + 5 + 2);
  }
  CHECK_THROWS_AS(assemble(in, v, 12), std::invalid_argument);
}

TEST_CASE("encoder") {
  const AssemblyInput in = sample_input();
  const Vocabulary v = vocab_for(in);
  const InputAssembly a = assemble(in, v, 64);
  nn::Rng rng(3);
  nn::ParameterSet params;
  Encoder enc(params, "enc", tiny_config(v.size()));
  enc.reset(rng);

  SUBCASE("deterministic in eval mode") {
    const auto x = enc.encode(a, {}), y = enc.encode(a, {});
    for (std::size_t i = 0; i < x.token_vectors.numel(); ++i) CHECK(x.token_vectors.values()[i] == y.token_vectors.values()[i]);
  }
  SUBCASE("sentence vectors are the sentinel rows") {
    const auto x = enc.encode(a, {});
    const std::size_t d = 16;
    for (std::size_t r = 0; r < a.sentinel_positions.size(); ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        CHECK(x.sentence_vectors.values()[r * d + c] == x.token_vectors.values()[a.sentinel_positions[r] * d + c]);
      }
    }
  }
  SUBCASE("trailing PAD tokens leave the other outputs unchanged") {
    InputAssembly padded = a;
    for (int i = 0; i < 5; ++i) {
      padded.token_ids.push_back(Vocabulary::kPad);
      padded.kinds.push_back(SegmentKind::History);
    }
    const auto x = enc.encode(a, {}), y = enc.encode(padded, {});
    for (std::size_t i = 0; i < x.token_vectors.numel(); ++i) {
      CHECK(std::abs(x.token_vectors.values()[i] - y.token_vectors.values()[i]) < 1e-12);
    }
  }
  SUBCASE("errors") {
    InputAssembly bad = a;
    bad.kinds.pop_back();
    CHECK_THROWS_AS(enc.encode(bad, {}), std::invalid_argument);
    CHECK_THROWS_AS(enc.encode(InputAssembly{}, {}), std::invalid_argument);
    InputAssembly long_one = a;
    long_one.token_ids.resize(65, Vocabulary::kUnk);
    long_one.kinds.resize(65, SegmentKind::History);
    CHECK_THROWS_AS(enc.encode(long_one, {}), std::invalid_argument);
  }
}
