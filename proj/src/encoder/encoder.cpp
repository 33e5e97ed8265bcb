#include "cmr/encoder/encoder.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cmr/encoder/tokenizer.hpp"
#include "cmr/nn/ops.hpp"

namespace cmr::encoder {

InputAssembly assemble(const AssemblyInput& input, const Vocabulary& vocab, std::size_t max_length) {
  if (input.conditions.empty()) throw std::invalid_argument("assemble needs at least one condition");
  std::size_t condition_len = 1;  // closing END
  for (const auto& c : input.conditions) condition_len += 1 + c.size();
  constexpr std::size_t kFixed = 5;  // question SEQ+END, scenario SEQ+END, history END
  if (condition_len + kFixed > max_length) {
    throw std::invalid_argument("conditions need " + std::to_string(condition_len + kFixed) +
                                " tokens, over the budget of " + std::to_string(max_length));
  }
  const std::size_t budget = max_length - condition_len - kFixed;

  std::size_t first_turn = 0;
  auto turn_len = [&](std::size_t j) { return 1 + encoder::tokenize(input.history[j].follow_up_question).size() + 1; };
  std::vector<std::size_t> turn_lengths(input.history.size());
  for (std::size_t j = 0; j < input.history.size(); ++j) turn_lengths[j] = turn_len(j);
  std::size_t history_len = std::accumulate(turn_lengths.begin(), turn_lengths.end(), std::size_t{0});
  std::size_t q_len = input.question.size();
  std::size_t s_len = input.scenario.size();
  while (first_turn < input.history.size() && q_len + s_len + history_len > budget) {
    history_len -= turn_lengths[first_turn++];
  }
  if (q_len + s_len > budget) s_len = budget > q_len ? budget - q_len : 0;
  if (q_len > budget) q_len = budget;

  InputAssembly out;
  out.n_conditions = input.conditions.size();
  out.n_history = input.history.size() - first_turn;
  out.history_dropped = first_turn;
  out.scenario_tokens_dropped = input.scenario.size() - s_len;
  auto push = [&](TokenId id, SegmentKind kind) {
    out.token_ids.push_back(id);
    out.kinds.push_back(kind);
  };
  auto sentinel = [&](SegmentKind kind) {
    out.sentinel_positions.push_back(out.token_ids.size());
    push(Vocabulary::kSeqStart, kind);
  };

  for (const auto& c : input.conditions) {
    sentinel(SegmentKind::Condition);
    TokenRange body{out.token_ids.size(), 0};
    for (const auto& t : c) push(vocab.id(t), SegmentKind::Condition);
    body.end = out.token_ids.size();
    out.condition_bodies.push_back(body);
  }
  push(Vocabulary::kTypeEnd, SegmentKind::Condition);

  sentinel(SegmentKind::Question);
  for (std::size_t i = 0; i < q_len; ++i) push(vocab.id(input.question[i]), SegmentKind::Question);
  push(Vocabulary::kTypeEnd, SegmentKind::Question);

  sentinel(SegmentKind::Scenario);
  for (std::size_t i = 0; i < s_len; ++i) push(vocab.id(input.scenario[i]), SegmentKind::Scenario);
  push(Vocabulary::kTypeEnd, SegmentKind::Scenario);

  for (std::size_t j = first_turn; j < input.history.size(); ++j) {
    sentinel(SegmentKind::History);
    for (const auto& t : encoder::tokenize(input.history[j].follow_up_question)) push(vocab.id(t), SegmentKind::History);
    push(vocab.id(weak::answer_name(input.history[j].answer)), SegmentKind::History);
  }
  push(Vocabulary::kTypeEnd, SegmentKind::History);
  return out;
}

Encoder::Encoder(nn::ParameterSet& params, const std::string& prefix, const nn::ModelConfig& config)
    : token_embedding(params.add(prefix + ".token_embedding", {config.vocab_size, config.d_model})),
      position_embedding(params.add(prefix + ".position_embedding", {config.max_sequence_length, config.d_model})),
      kind_embedding(params.add(prefix + ".kind_embedding", {kSegmentKinds, config.d_model})),
      embedding_norm(params, prefix + ".embedding_norm", config.d_model),
      layers(params, prefix + ".layer", config, config.n_encoder_layers),
      dropout_rate(config.dropout_rate) {
  if (config.vocab_size == 0) throw std::invalid_argument("encoder needs a non-empty vocabulary");
}

void Encoder::reset(nn::Rng& rng) {
  nn::init_normal(token_embedding, nn::Real(1), rng);
  nn::init_normal(kind_embedding, nn::Real(0.5), rng);
  // Sinusoidal start so relative offsets are visible from the first step.
  const std::size_t len = position_embedding.dim(0), d = position_embedding.dim(1);
  auto pos = position_embedding.values();
  for (std::size_t p = 0; p < len; ++p) {
    for (std::size_t i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -double(2 * (i / 2)) / double(d));
      pos[p * d + i] = nn::Real(i % 2 == 0 ? std::sin(double(p) * freq) : std::cos(double(p) * freq));
    }
  }
  embedding_norm.reset();
  layers.reset(rng);
}

EncodedSequence Encoder::encode(const InputAssembly& assembly, const nn::Mode& mode) const {
  const std::size_t n = assembly.token_ids.size();
  if (n == 0) throw std::invalid_argument("cannot encode an empty sequence");
  if (n > position_embedding.dim(0)) {
    throw std::invalid_argument("sequence of " + std::to_string(n) + " tokens exceeds max_sequence_length " +
                                std::to_string(position_embedding.dim(0)));
  }
  if (assembly.kinds.size() != n) throw std::invalid_argument("segment kinds do not match token ids");

  std::vector<std::int64_t> positions(n), kinds(n);
  std::vector<bool> mask(n);
  for (std::size_t i = 0; i < n; ++i) {
    positions[i] = static_cast<std::int64_t>(i);
    kinds[i] = static_cast<std::int64_t>(assembly.kinds[i]);
    mask[i] = assembly.token_ids[i] != Vocabulary::kPad;
  }
  nn::Tensor x = nn::add(nn::add(nn::embedding(token_embedding, assembly.token_ids), nn::embedding(position_embedding, positions)),
                         nn::embedding(kind_embedding, kinds));
  x = embedding_norm(x);
  if (mode.training && dropout_rate > 0) x = nn::dropout(x, dropout_rate, true, *mode.rng);
  x = layers(x, mask, mode);
  return {x, nn::gather_rows(x, assembly.sentinel_positions)};
}

}  // namespace cmr::encoder
