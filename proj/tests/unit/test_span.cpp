#include <doctest.h>

#include <random>

#include "cmr/app/engine.hpp"
#include "cmr/nn/ops.hpp"
#include "cmr/spanqg/span.hpp"
#include "oracles/oracles.hpp"

using namespace cmr;
using namespace cmr::spanqg;
using nn::Real;
using nn::Tensor;

namespace {

nn::ModelConfig tiny_config(std::size_t vocab) {
  nn::ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.d_ff = 32;
  c.n_encoder_layers = 1;
  c.dropout_rate = 0;
  c.vocab_size = vocab;
  c.max_sequence_length = 128;
  return c;
}

const char* kRule =
    "The loan program is designed to assist for-profit businesses. You must not be able to get other financing. "
    "Apply online.";

}  // namespace

TEST_CASE("span scores are two dot products per token") {
  const Tensor t = Tensor::from({3, 2}, {1, 2, -1, 0.5, 0, 3});
  const Tensor ws = Tensor::from({2, 1}, {2, -1}), we = Tensor::from({2, 1}, {0.5, 1});
  const auto s = span_scores(t, ws, we);
  CHECK(s.start.shape() == nn::Shape{3, 1});
  const std::vector<double> start = {0, -2.5, -3}, end = {2.5, 0, 3};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(s.start.values()[i] == doctest::Approx(start[i]).epsilon(1e-15));
    CHECK(s.end.values()[i] == doctest::Approx(end[i]).epsilon(1e-15));
  }
}

TEST_CASE("extract_span agrees with brute force") {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> sentences(1, 4), len(1, 7), small(-2, 2);
  std::normal_distribution<double> n(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::vector<Real>> start(std::size_t(sentences(rng))), end;
    for (auto& s : start) {
      s.resize(std::size_t(len(rng)));
      // Every other trial uses small integers so ties are common.
      for (auto& x : s) x = trial % 2 ? Real(small(rng)) : Real(n(rng));
      auto& e = end.emplace_back(s.size());
      for (auto& x : e) x = trial % 2 ? Real(small(rng)) : Real(n(rng));
    }
    const auto p = extract_span(start, end);
    const auto o = oracle::best_span(start, end);
    CHECK(p.sentence_index == o.k);
    CHECK(p.token_start == o.i);
    CHECK(p.token_end == o.j);
    CHECK(p.token_start <= p.token_end);
    CHECK(p.token_end < start[p.sentence_index].size());
  }
}

TEST_CASE("extract_span never crosses a sentence") {
  // The best cross-sentence pair (start in 0, end in 1) is worth 20; inside a
  // sentence the best is 10, in sentence 1.
  const std::vector<std::vector<Real>> start = {{1, 10}, {0, 0}}, end = {{1, -5}, {10, 1}};
  const auto p = extract_span(start, end);
  CHECK(p.score == doctest::Approx(10));
  CHECK(p.sentence_index == 1);
  CHECK(p.token_start == 0);
  CHECK(p.token_end == 0);
  CHECK_THROWS_AS(extract_span({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(extract_span({{1}}, {{1, 2}}), std::invalid_argument);
  CHECK_THROWS_AS(extract_span({{}}, {{}}), std::invalid_argument);
}

TEST_CASE("span loss") {
  for (std::size_t n : {1u, 2u, 7u, 30u}) {
    SpanScores s{Tensor::zeros({n, 1}), Tensor::zeros({n, 1})};
    CHECK(std::abs(span_loss(s, 0, n - 1).item() - 2 * std::log(double(n))) < 1e-12);
  }
  const Tensor a = Tensor::from({3, 1}, {0.5, -1, 2}), b = Tensor::from({3, 1}, {1, 0, 0});
  const double want = oracle::cross_entropy({0.5, -1, 2}, 1) + oracle::cross_entropy({1, 0, 0}, 2);
  CHECK(std::abs(span_loss({a, b}, 1, 2).item() - want) < 1e-12);
  CHECK_THROWS_AS(span_loss({a, b}, 3, 0), std::out_of_range);
  CHECK_THROWS_AS(span_loss({a, b}, 0, 3), std::out_of_range);
}

TEST_CASE("rule sentences") {
  const auto r = split_rule(kRule);
  REQUIRE(r.sentences.size() == 3);
  CHECK(r.tokens[2].size() == 3);
  CHECK(r.total_tokens() == r.tokens[0].size() + r.tokens[1].size() + 3);
  CHECK(r.span_text(0, 7, 8) == "for-profit businesses");
  CHECK_THROWS_AS(r.span_text(0, 3, 2), std::out_of_range);
  CHECK_THROWS_AS(r.span_text(5, 0, 0), std::out_of_range);
}

TEST_CASE("span model") {
  data::CMRExample ex;
  ex.rule_text = kRule;
  ex.question = "Can I get the loan?";
  ex.scenario = "I run a bakery.";
  ex.decision = decision::Decision::Inquire;
  ex.follow_up = "Are you a for-profit business?";
  const auto vocab = app::build_vocabulary({ex}, 1);
  const auto prepared = app::prepare_span(ex, vocab, 128);
  REQUIRE(prepared.has_value());
  const auto rule = split_rule(kRule);
  const auto gold = oracle::span_label(rule.token_texts(), ex.follow_up);
  CHECK(gold.sentence_index == 0);
  CHECK(prepared->gold_start == gold.token_start);
  CHECK(prepared->gold_end == gold.token_end);

  nn::Rng rng(2);
  SpanModel model(tiny_config(vocab.size()));
  model.reset(rng);
  const auto scores = model.forward(prepared->assembly, {});
  CHECK(scores.start.rows() == rule.total_tokens());

  const auto before = model.predict(prepared->assembly);
  CHECK(before.token_end < rule.tokens[before.sentence_index].size());
  CHECK(model.predict(prepared->assembly) == before);

  auto state = nn::OptimizerState::for_params(model.params, Real(5e-3), Real(0.1), 60);
  Real first = 0, last = 0;
  for (int s = 0; s < 60; ++s) {
    const auto st = span_train_step(model, {&*prepared}, state, rng);
    if (s == 0) first = st.loss;
    last = st.loss;
  }
  CHECK(last < first);
  const auto g = model.generate(rule, prepared->assembly, TemplateRephraser{});
  CHECK(g.span == SpanPrediction{0, gold.token_start, gold.token_end, g.span.score});
  CHECK(g.span_text == rule.span_text(0, gold.token_start, gold.token_end));
  CHECK(g.question == rephrase(g.span_text));
}
