#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cmr/encoder/vocab.hpp"
#include "cmr/nn/layers.hpp"
#include "cmr/weak/weak_labels.hpp"

namespace cmr::encoder {

enum class SegmentKind { Condition = 0, Question = 1, Scenario = 2, History = 3 };
inline constexpr std::size_t kSegmentKinds = 4;

struct TokenRange {
  std::size_t begin = 0;  // first body token (after the sentinel)
  std::size_t end = 0;    // one past the last body token
};

// Layout:
//   [SEQ c_1] ... [SEQ c_N] END [SEQ question] END [SEQ scenario] END
//   [SEQ q_1 a_1] ... [SEQ q_M a_M] END
struct InputAssembly {
  std::vector<TokenId> token_ids;
  std::vector<SegmentKind> kinds;
  // N condition sentinels, then question, scenario and M history sentinels.
  std::vector<std::size_t> sentinel_positions;
  std::vector<TokenRange> condition_bodies;
  std::size_t n_conditions = 0;
  std::size_t n_history = 0;
  // Turns dropped from the front of the history to fit the length budget.
  std::size_t history_dropped = 0;
  std::size_t scenario_tokens_dropped = 0;
};

struct AssemblyInput {
  std::vector<std::vector<std::string>> conditions;
  std::vector<std::string> question;
  std::vector<std::string> scenario;
  std::vector<weak::HistoryTurn> history;
};

// Throws std::invalid_argument when there are no conditions or when the
// conditions alone do not fit in max_length. Over-long inputs lose history
// turns oldest first, then the scenario tail, then the question tail.
InputAssembly assemble(const AssemblyInput& input, const Vocabulary& vocab, std::size_t max_length);

struct EncodedSequence {
  nn::Tensor token_vectors;     // {T, d}
  nn::Tensor sentence_vectors;  // {N + 2 + M, d}
};

// Token + learned position + segment-kind embeddings, normalized, then a stack
// of transformer layers with PAD keys masked out.
class Encoder {
 public:
  Encoder() = default;
  Encoder(nn::ParameterSet& params, const std::string& prefix, const nn::ModelConfig& config);
  void reset(nn::Rng& rng);

  EncodedSequence encode(const InputAssembly& assembly, const nn::Mode& mode) const;

  nn::Tensor token_embedding;     // {vocab, d}
  nn::Tensor position_embedding;  // {max_len, d}
  nn::Tensor kind_embedding;      // {4, d}
  nn::LayerNorm embedding_norm;
  nn::TransformerStack layers;
  nn::Real dropout_rate = 0;
};

}  // namespace cmr::encoder
