#include "cmr/spanqg/span.hpp"

#include <cmath>
#include <stdexcept>

#include "cmr/nn/ops.hpp"
#include "cmr/segment/segmenter.hpp"

namespace cmr::spanqg {

SpanScores span_scores(const nn::Tensor& token_vectors, const nn::Tensor& w_s, const nn::Tensor& w_e) {
  return {nn::matmul(token_vectors, w_s), nn::matmul(token_vectors, w_e)};
}

SpanPrediction extract_span(const std::vector<std::vector<nn::Real>>& start,
                            const std::vector<std::vector<nn::Real>>& end) {
  if (start.size() != end.size()) throw std::invalid_argument("start/end sentence counts differ");
  SpanPrediction best;
  bool found = false;
  for (std::size_t k = 0; k < start.size(); ++k) {
    if (start[k].size() != end[k].size()) throw std::invalid_argument("start/end token counts differ");
    const std::size_t n = start[k].size();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const nn::Real s = start[k][i] + end[k][j];
        if (!found || s > best.score) {
          best = {k, i, j, s};
          found = true;
        }
      }
    }
  }
  if (!found) throw std::invalid_argument("extract_span needs at least one rule token");
  return best;
}

nn::Tensor span_loss(const SpanScores& scores, std::size_t gold_start, std::size_t gold_end) {
  const std::size_t n = scores.start.rows();
  if (gold_start >= n || gold_end >= n) throw std::out_of_range("gold span outside the rule tokens");
  const nn::Tensor start_row = nn::transpose(scores.start);
  const nn::Tensor end_row = nn::transpose(scores.end);
  return nn::add(nn::cross_entropy_rows(start_row, std::span<const std::size_t>(&gold_start, 1)),
                 nn::cross_entropy_rows(end_row, std::span<const std::size_t>(&gold_end, 1)));
}

std::vector<std::vector<std::string>> RuleSentences::token_texts() const {
  std::vector<std::vector<std::string>> out;
  for (const auto& sent : tokens) {
    auto& row = out.emplace_back();
    for (const auto& t : sent) row.push_back(t.text);
  }
  return out;
}

std::size_t RuleSentences::total_tokens() const {
  std::size_t n = 0;
  for (const auto& s : tokens) n += s.size();
  return n;
}

std::string RuleSentences::span_text(std::size_t sentence, std::size_t start, std::size_t end) const {
  const auto& toks = tokens.at(sentence);
  if (start > end || end >= toks.size()) throw std::out_of_range("span outside sentence");
  return sentences[sentence].substr(toks[start].begin, toks[end].end - toks[start].begin);
}

RuleSentences split_rule(std::string_view rule_text) {
  RuleSentences r;
  r.text = std::string(rule_text);
  for (const auto& span : segment::split_sentences(rule_text)) {
    std::string s(rule_text.substr(span.begin, span.end - span.begin));
    auto toks = encoder::tokenize_with_offsets(s);
    if (toks.empty()) continue;
    r.sentences.push_back(std::move(s));
    r.tokens.push_back(std::move(toks));
  }
  return r;
}

encoder::InputAssembly assemble_rule(const RuleSentences& rule, std::string_view question, std::string_view scenario,
                                     const std::vector<weak::HistoryTurn>& history,
                                     const encoder::Vocabulary& vocab, std::size_t max_length) {
  encoder::AssemblyInput in;
  in.conditions = rule.token_texts();
  in.question = encoder::tokenize(question);
  in.scenario = encoder::tokenize(scenario);
  in.history = history;
  return encoder::assemble(in, vocab, max_length);
}

SpanModel::SpanModel(const nn::ModelConfig& config) : config_(config) {
  config_.validate();
  encoder = encoder::Encoder(params, "encoder", config_);
  start_vector = params.add("start_vector", {config_.d_model, 1});
  end_vector = params.add("end_vector", {config_.d_model, 1});
}

void SpanModel::reset(nn::Rng& rng) {
  encoder.reset(rng);
  const nn::Real bound = nn::Real(1) / std::sqrt(nn::Real(config_.d_model));
  nn::init_uniform(start_vector, bound, rng);
  nn::init_uniform(end_vector, bound, rng);
}

SpanScores SpanModel::forward(const encoder::InputAssembly& assembly, const nn::Mode& mode) const {
  const auto encoded = encoder.encode(assembly, mode);
  std::vector<std::size_t> rows;
  for (const auto& body : assembly.condition_bodies) {
    for (std::size_t p = body.begin; p < body.end; ++p) rows.push_back(p);
  }
  if (rows.empty()) throw std::invalid_argument("rule has no tokens");
  return span_scores(nn::gather_rows(encoded.token_vectors, rows), start_vector, end_vector);
}

SpanPrediction SpanModel::predict(const encoder::InputAssembly& assembly) const {
  nn::NoGradGuard guard;
  const SpanScores s = forward(assembly, nn::Mode{});
  std::vector<std::vector<nn::Real>> start, end;
  std::size_t offset = 0;
  for (const auto& body : assembly.condition_bodies) {
    const std::size_t n = body.end - body.begin;
    start.emplace_back(s.start.values().begin() + offset, s.start.values().begin() + offset + n);
    end.emplace_back(s.end.values().begin() + offset, s.end.values().begin() + offset + n);
    offset += n;
  }
  return extract_span(start, end);
}

Generated SpanModel::generate(const RuleSentences& rule, const encoder::InputAssembly& assembly,
                              const Rephraser& rephraser) const {
  Generated g;
  g.span = predict(assembly);
  g.span_text = rule.span_text(g.span.sentence_index, g.span.token_start, g.span.token_end);
  g.question = rephraser.rephrase(g.span_text);
  return g;
}

SpanStepStats span_train_step(SpanModel& model, const std::vector<const SpanTrainingExample*>& batch,
                              nn::OptimizerState& state, nn::Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("span_train_step needs a non-empty batch");
  const nn::Mode mode{true, &rng};
  std::vector<nn::Tensor> terms;
  for (const auto* ex : batch) terms.push_back(span_loss(model.forward(ex->assembly, mode), ex->gold_start, ex->gold_end));
  const nn::Tensor loss = nn::weighted_sum(terms, std::vector<nn::Real>(batch.size(), nn::Real(1) / nn::Real(batch.size())));
  SpanStepStats stats;
  stats.step = state.step;
  stats.loss = loss.item();
  if (!std::isfinite(double(stats.loss))) {
    throw std::runtime_error("non-finite span loss at step " + std::to_string(state.step));
  }
  stats.lr = nn::lr_schedule(state.step, state);
  model.params.zero_grad();
  nn::backward(loss);
  nn::adam_step(model.params, state, stats.lr);
  return stats;
}

}  // namespace cmr::spanqg
