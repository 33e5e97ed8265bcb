#include "cmr/decision/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cmr/nn/ops.hpp"

namespace cmr::decision {

std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::Yes:
      return "Yes";
    case Decision::No:
      return "No";
    case Decision::Inquire:
      return "Inquire";
    case Decision::Irrelevant:
      return "Irrelevant";
  }
  return "Inquire";
}

Decision parse_decision(std::string_view text) {
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (s == "yes") return Decision::Yes;
  if (s == "no") return Decision::No;
  if (s == "inquire") return Decision::Inquire;
  if (s == "irrelevant") return Decision::Irrelevant;
  throw std::invalid_argument("unknown decision '" + std::string(text) + "'");
}

nn::Tensor entailment_scores(const nn::Tensor& e_tilde, const nn::Tensor& w_c, const nn::Tensor& b_c) {
  return nn::linear(e_tilde, w_c, b_c);
}

nn::Tensor entailment_loss(const nn::Tensor& scores, const std::vector<weak::EntailmentLabel>& labels,
                           std::size_t normalizer) {
  if (scores.rank() != 2 || scores.dim(1) != kEntailmentStates) {
    throw std::invalid_argument("entailment scores must be {N, 3}");
  }
  if (scores.dim(0) != labels.size()) {
    throw std::invalid_argument("got " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(scores.dim(0)) + " conditions");
  }
  if (normalizer == 0) throw std::invalid_argument("entailment loss normalizer must be positive");
  std::vector<std::size_t> targets(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) targets[i] = static_cast<std::size_t>(labels[i]);
  return nn::scale(nn::cross_entropy_rows(scores, targets), nn::Real(1) / nn::Real(normalizer));
}

nn::Tensor entailment_vector(const nn::Tensor& scores, const nn::Tensor& v, bool softmax_mix) {
  return nn::matmul(softmax_mix ? nn::softmax_rows(scores) : scores, v);
}

DecisionOutput decide(const nn::Tensor& e_tilde, const nn::Tensor& v_edu, const nn::Tensor& w_alpha,
                      const nn::Tensor& b_alpha, const nn::Tensor& w_z, const nn::Tensor& b_z) {
  if (e_tilde.rank() != 2 || e_tilde.dim(0) == 0) throw std::invalid_argument("decide needs at least one condition");
  const nn::Tensor h = nn::concat_cols(v_edu, e_tilde);                          // {N, 2d}
  const nn::Tensor alpha = nn::transpose(nn::linear(h, w_alpha, b_alpha));       // {1, N}
  const nn::Tensor weights = nn::softmax_rows(alpha);
  const nn::Tensor g = nn::matmul(weights, h);                                   // {1, 2d}
  return {nn::linear(g, w_z, b_z), weights};
}

nn::Tensor decision_loss(const nn::Tensor& logits, Decision gold) {
  const std::size_t target = static_cast<std::size_t>(gold);
  return nn::cross_entropy_rows(logits, std::span<const std::size_t>(&target, 1));
}

nn::Tensor total_loss(const nn::Tensor& dec_loss, const nn::Tensor& entail_loss, nn::Real lambda) {
  if (!(lambda >= 0)) throw std::invalid_argument("lambda must be non-negative");
  return nn::weighted_sum({dec_loss, entail_loss}, {nn::Real(1), lambda});
}

DecisionModel::DecisionModel(const nn::ModelConfig& config, bool softmax_mix)
    : config_(config), softmax_mix_(softmax_mix) {
  config_.validate();
  const std::size_t d = config_.d_model;
  encoder = encoder::Encoder(params, "encoder", config_);
  inter = nn::TransformerStack(params, "inter", config_, config_.n_inter_layers);
  classify_entailment = nn::Linear(params, "entail", d, kEntailmentStates);
  entailment_vectors = params.add("entail_vectors", {kEntailmentStates, d});
  attend = nn::Linear(params, "attend", 2 * d, 1);
  classify_decision = nn::Linear(params, "decide", 2 * d, kDecisions);
}

void DecisionModel::reset(nn::Rng& rng) {
  encoder.reset(rng);
  inter.reset(rng);
  classify_entailment.reset(rng);
  nn::init_normal(entailment_vectors, nn::Real(0.02), rng);
  attend.reset(rng);
  classify_decision.reset(rng);
}

nn::Tensor DecisionModel::inter_sentence_encode(const nn::Tensor& sentence_vectors, const nn::Mode& mode) const {
  if (sentence_vectors.rank() != 2 || sentence_vectors.dim(0) == 0) {
    throw std::invalid_argument("inter-sentence encoder needs at least one vector");
  }
  return inter(sentence_vectors, std::vector<bool>(sentence_vectors.dim(0), true), mode);
}

Forward DecisionModel::forward(const encoder::InputAssembly& assembly, const nn::Mode& mode) const {
  const std::size_t n = assembly.n_conditions;
  if (n == 0) throw std::invalid_argument("decision model needs at least one condition");
  const auto encoded = encoder.encode(assembly, mode);
  const nn::Tensor mixed = inter_sentence_encode(encoded.sentence_vectors, mode);
  const nn::Tensor e_tilde = nn::slice_rows(mixed, 0, n);
  const nn::Tensor scores = entailment_scores(e_tilde, classify_entailment.weight, classify_entailment.bias);
  const nn::Tensor v_edu = entailment_vector(scores, entailment_vectors, softmax_mix_);
  auto out = decide(e_tilde, v_edu, attend.weight, attend.bias, classify_decision.weight, classify_decision.bias);
  return {scores, out.logits, out.weights};
}

Prediction DecisionModel::predict(const encoder::InputAssembly& assembly) const {
  nn::NoGradGuard guard;
  const Forward f = forward(assembly, nn::Mode{});
  Prediction p;
  p.logits.assign(f.logits.values().begin(), f.logits.values().end());
  p.decision = static_cast<Decision>(std::max_element(p.logits.begin(), p.logits.end()) - p.logits.begin());
  p.weights.assign(f.weights.values().begin(), f.weights.values().end());
  const auto s = f.scores.values();
  for (std::size_t i = 0; i < f.scores.dim(0); ++i) {
    std::vector<nn::Real> row(s.begin() + i * kEntailmentStates, s.begin() + (i + 1) * kEntailmentStates);
    p.states.push_back(static_cast<weak::EntailmentLabel>(std::max_element(row.begin(), row.end()) - row.begin()));
    p.scores.push_back(std::move(row));
  }
  return p;
}

StepStats train_step(DecisionModel& model, const std::vector<const TrainingExample*>& batch,
                     nn::OptimizerState& state, nn::Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("train_step needs a non-empty batch");
  std::size_t k = 0;
  for (const auto* ex : batch) k += ex->assembly.n_conditions;

  const nn::Mode mode{true, &rng};
  std::vector<nn::Tensor> dec_terms, ent_terms;
  for (const auto* ex : batch) {
    const Forward f = model.forward(ex->assembly, mode);
    dec_terms.push_back(decision_loss(f.logits, ex->gold));
    ent_terms.push_back(entailment_loss(f.scores, ex->labels, k));
  }
  const nn::Tensor l_dec = nn::weighted_sum(dec_terms, std::vector<nn::Real>(batch.size(), nn::Real(1) / nn::Real(batch.size())));
  const nn::Tensor l_ent = nn::weighted_sum(ent_terms, std::vector<nn::Real>(batch.size(), nn::Real(1)));
  const nn::Tensor loss = total_loss(l_dec, l_ent, model.config().lambda_entail);

  StepStats stats;
  stats.step = state.step;
  stats.decision_loss = l_dec.item();
  stats.entailment_loss = l_ent.item();
  stats.loss = loss.item();
  if (!std::isfinite(double(stats.loss))) {
    std::ostringstream os;
    os << "non-finite loss at step " << state.step << " (L_dec=" << stats.decision_loss
       << ", L_entail=" << stats.entailment_loss << ")";
    throw std::runtime_error(os.str());
  }
  stats.lr = nn::lr_schedule(state.step, state);
  model.params.zero_grad();
  nn::backward(loss);
  nn::adam_step(model.params, state, stats.lr);
  return stats;
}

}  // namespace cmr::decision
