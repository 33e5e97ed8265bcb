#pragma once

// Decision model: encoder -> inter-sentence transformer -> per-condition
// entailment scores -> entailment-vector mixing -> attention pooling over
// conditions -> four decision logits.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "cmr/encoder/encoder.hpp"
#include "cmr/nn/layers.hpp"
#include "cmr/nn/optim.hpp"
#include "cmr/weak/weak_labels.hpp"

namespace cmr::decision {

enum class Decision { Yes = 0, No = 1, Inquire = 2, Irrelevant = 3 };
inline constexpr std::size_t kDecisions = 4;
inline constexpr std::size_t kEntailmentStates = 3;

std::string_view decision_name(Decision d);
// Case-insensitive. Throws std::invalid_argument on anything else.
Decision parse_decision(std::string_view text);

// c_i = W_c e_i + b_c for every row of e_tilde {N, d}; returns {N, 3}.
nn::Tensor entailment_scores(const nn::Tensor& e_tilde, const nn::Tensor& w_c, const nn::Tensor& b_c);

// Sum of per-condition cross-entropies divided by `normalizer` (K, the number
// of conditions in the batch). Throws on a label/score count mismatch.
nn::Tensor entailment_loss(const nn::Tensor& scores, const std::vector<weak::EntailmentLabel>& labels,
                           std::size_t normalizer);

// V_EDU,i = sum_k c_k,i V_k with V {3, d}. With softmax_mix the scores are
// normalized per condition first.
nn::Tensor entailment_vector(const nn::Tensor& scores, const nn::Tensor& v, bool softmax_mix = false);

struct DecisionOutput {
  nn::Tensor logits;   // {1, 4}
  nn::Tensor weights;  // {1, N}, softmax over conditions
};

DecisionOutput decide(const nn::Tensor& e_tilde, const nn::Tensor& v_edu, const nn::Tensor& w_alpha,
                      const nn::Tensor& b_alpha, const nn::Tensor& w_z, const nn::Tensor& b_z);

nn::Tensor decision_loss(const nn::Tensor& logits, Decision gold);

nn::Tensor total_loss(const nn::Tensor& dec_loss, const nn::Tensor& entail_loss, nn::Real lambda);

struct Prediction {
  Decision decision = Decision::Inquire;
  std::vector<nn::Real> logits;
  std::vector<weak::EntailmentLabel> states;
  std::vector<std::vector<nn::Real>> scores;  // raw c_i per condition
  std::vector<nn::Real> weights;
};

struct Forward {
  nn::Tensor scores;  // {N, 3}
  nn::Tensor logits;  // {1, 4}
  nn::Tensor weights; // {1, N}
};

class DecisionModel {
 public:
  explicit DecisionModel(const nn::ModelConfig& config, bool softmax_mix = false);
  DecisionModel(const DecisionModel&) = delete;
  DecisionModel& operator=(const DecisionModel&) = delete;

  void reset(nn::Rng& rng);

  // L inter-sentence layers over all N + 2 + M sentence vectors, unmasked.
  nn::Tensor inter_sentence_encode(const nn::Tensor& sentence_vectors, const nn::Mode& mode) const;

  Forward forward(const encoder::InputAssembly& assembly, const nn::Mode& mode) const;
  // Eval mode, no gradient recording.
  Prediction predict(const encoder::InputAssembly& assembly) const;

  const nn::ModelConfig& config() const { return config_; }
  bool softmax_mix() const { return softmax_mix_; }

  nn::ParameterSet params;
  encoder::Encoder encoder;
  nn::TransformerStack inter;
  nn::Linear classify_entailment;  // W_c, b_c
  nn::Tensor entailment_vectors;   // {3, d}: V_E, V_C, V_N
  nn::Linear attend;               // w_alpha, b_alpha
  nn::Linear classify_decision;    // W_z, b_z

 private:
  nn::ModelConfig config_;
  bool softmax_mix_;
};

struct TrainingExample {
  encoder::InputAssembly assembly;
  std::vector<weak::EntailmentLabel> labels;  // one per condition
  Decision gold = Decision::Inquire;
};

struct StepStats {
  std::size_t step = 0;
  nn::Real lr = 0;
  nn::Real decision_loss = 0;
  nn::Real entailment_loss = 0;
  nn::Real loss = 0;
};

// (1/B) sum_b L_dec + lambda * (1/K) sum_conditions CE, then backward and one
// Adam step at lr_schedule(state.step). Throws std::runtime_error on a
// non-finite loss without touching the parameters.
StepStats train_step(DecisionModel& model, const std::vector<const TrainingExample*>& batch,
                     nn::OptimizerState& state, nn::Rng& rng);

}  // namespace cmr::decision
