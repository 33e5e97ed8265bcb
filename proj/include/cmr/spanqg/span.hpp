#pragma once

// Follow-up question generation: pick the underspecified span inside one rule
// sentence and turn it into a question with surface templates.

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cmr/encoder/encoder.hpp"
#include "cmr/encoder/tokenizer.hpp"
#include "cmr/nn/layers.hpp"
#include "cmr/nn/optim.hpp"
#include "cmr/weak/weak_labels.hpp"

namespace cmr::spanqg {

struct SpanPrediction {
  std::size_t sentence_index = 0;
  std::size_t token_start = 0;
  std::size_t token_end = 0;  // inclusive
  nn::Real score = 0;
  friend bool operator==(const SpanPrediction&, const SpanPrediction&) = default;
};

// start[t] = w_s . t_t and end[t] = w_e . t_t for token vectors {T, d}, with
// w_s, w_e of shape {d, 1}. Both results are {T, 1}.
struct SpanScores {
  nn::Tensor start;
  nn::Tensor end;
};
SpanScores span_scores(const nn::Tensor& token_vectors, const nn::Tensor& w_s, const nn::Tensor& w_e);

// argmax of start[k][i] + end[k][j] over i <= j inside one sentence k. Ties go
// to the smallest k, then i, then j. Throws std::invalid_argument when there
// are no tokens or the two score lists disagree in shape.
SpanPrediction extract_span(const std::vector<std::vector<nn::Real>>& start,
                            const std::vector<std::vector<nn::Real>>& end);

// Cross-entropy of the gold start plus that of the gold end, each over every
// rule token (one softmax across sentences). Throws std::out_of_range when a
// gold index is outside the token range.
nn::Tensor span_loss(const SpanScores& scores, std::size_t gold_start, std::size_t gold_end);

// Template rephrasing. Always returns a question ending in '?'.
class Rephraser {
 public:
  virtual ~Rephraser() = default;
  virtual std::string rephrase(std::string_view span) const = 0;
};

class TemplateRephraser final : public Rephraser {
 public:
  std::string rephrase(std::string_view span) const override;
};

std::string rephrase(std::string_view span);

// Rule text split into sentences, each tokenized with byte offsets.
struct RuleSentences {
  std::string text;
  std::vector<std::string> sentences;
  std::vector<std::vector<encoder::Token>> tokens;

  std::vector<std::vector<std::string>> token_texts() const;
  std::size_t total_tokens() const;
  // Original-case text covered by a span.
  std::string span_text(std::size_t sentence, std::size_t start, std::size_t end) const;
};

RuleSentences split_rule(std::string_view rule_text);

encoder::InputAssembly assemble_rule(const RuleSentences& rule, std::string_view question, std::string_view scenario,
                                     const std::vector<weak::HistoryTurn>& history,
                                     const encoder::Vocabulary& vocab, std::size_t max_length);

struct SpanTrainingExample {
  encoder::InputAssembly assembly;
  std::size_t gold_start = 0;  // global rule-token index
  std::size_t gold_end = 0;
};

struct Generated {
  SpanPrediction span;
  std::string span_text;
  std::string question;
};

class SpanModel {
 public:
  explicit SpanModel(const nn::ModelConfig& config);
  SpanModel(const SpanModel&) = delete;
  SpanModel& operator=(const SpanModel&) = delete;

  void reset(nn::Rng& rng);
  // Scores for every rule token, in sentence order.
  SpanScores forward(const encoder::InputAssembly& assembly, const nn::Mode& mode) const;
  SpanPrediction predict(const encoder::InputAssembly& assembly) const;
  Generated generate(const RuleSentences& rule, const encoder::InputAssembly& assembly,
                     const Rephraser& rephraser) const;

  const nn::ModelConfig& config() const { return config_; }

  nn::ParameterSet params;
  encoder::Encoder encoder;
  nn::Tensor start_vector;  // w_s {d, 1}
  nn::Tensor end_vector;    // w_e {d, 1}

 private:
  nn::ModelConfig config_;
};

struct SpanStepStats {
  std::size_t step = 0;
  nn::Real lr = 0;
  nn::Real loss = 0;
};

// Mean span loss over the batch, backward, one Adam step.
SpanStepStats span_train_step(SpanModel& model, const std::vector<const SpanTrainingExample*>& batch,
                              nn::OptimizerState& state, nn::Rng& rng);

}  // namespace cmr::spanqg
